// Copyright 2026 The ViP Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <map>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cli_app.hpp"
#include "gradient_checks.hpp"
#include "metric_oracles.hpp"
#include "test_helpers.hpp"
#include "vip/classifier.hpp"
#include "vip/config.hpp"
#include "vip/data.hpp"
#include "vip/error.hpp"
#include "vip/evaluation.hpp"
#include "vip/knowledge_base.hpp"
#include "vip/llm_client.hpp"
#include "vip/prompt_modules.hpp"

namespace vip {
namespace {

using Clock = std::chrono::steady_clock;
using testing::RandomMatrix;
using testing::TempDir;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& text) { detail += (detail.empty() ? "" : "; ") + text; }
};

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Verdict()> run;
};

Verdict EquationFidelity() {
  Verdict v;
  Matrix g(1, 2);
  g << 1.0, 0.0;
  const Matrix eye = Matrix::Identity(2, 2);
  ad::Tape tape;
  const auto m = MergeAttention(tape.constant(g), tape.constant(eye), tape.constant(eye), tape.constant(eye));
  const RowVector s = m.feature.value().row(0);
  v.require(std::abs(s(0) - 1.6698) < 1e-4 && std::abs(s(1) - 0.3302) < 1e-4,
            "merge_attention d=2 gave (" + Fmt("%.6f", s(0)) + ", " + Fmt("%.6f", s(1)) + ")");

  ClassScores two{{"a", "b"}, RowVector::Constant(2, 0.25)};
  v.require(CrossEntropyLoss(two, "a", 0.01) == std::log(2.0), "uniform binary loss != ln 2");

  ClassScores three{{"a", "b", "c"}, RowVector(3)};
  three.values << 0.2, 0.1, -0.3;
  const double loss = CrossEntropyLoss(three, "a", 1.0);
  const double oracle = -0.2 + std::log(std::exp(0.2) + std::exp(0.1) + std::exp(-0.3));
  v.require(std::abs(loss - oracle) < 1e-6, "3-class loss " + Fmt("%.8f", loss));
  v.note("s=(" + Fmt("%.4f", s(0)) + ", " + Fmt("%.4f", s(1)) + ") L3=" + Fmt("%.5f", loss));
  return v;
}

Verdict GradientSuite() {
  Verdict v;
  const double tol = 1e-3;
  double worst = 0.0;
  auto track = [&](double err, const std::string& what) {
    worst = std::max(worst, err);
    v.require(err < tol, what + " rel err " + Fmt("%.2e", err));
  };
  for (int k = 1; k <= 3; ++k) track(testing::MergeAttentionGradError(10 + k, 8, k), "merge_attention k=" + std::to_string(k));

  const ToyEncoder enc(testing::ToyEncoderConfig(8, 1));
  for (int m = 1; m <= 4; ++m) track(testing::ComposeGradError(enc, 20 + m, m, 3), "compose M=" + std::to_string(m));
  for (int len : {1, 5, 20}) track(testing::EncodeTextGradError(enc, 30 + len, len), "encode_text L=" + std::to_string(len));
  for (int m = 0; m <= 4; m += 2) {
    track(testing::EndToEndGradError(enc, 40 + m, m, MergeMode::kAttention), "end-to-end M=" + std::to_string(m));
  }
  track(testing::EndToEndGradError(enc, 50, 4, MergeMode::kMean), "end-to-end mean");
  v.note("worst rel err " + Fmt("%.2e", worst));
  return v;
}

Verdict ReductionIdentity() {
  Verdict v;
  Rng rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(8));
    const int d = 2 + static_cast<int>(rng.below(15));
    const Matrix t = RandomMatrix(rng, k, d);
    ad::Tape tape;
    const auto m = MergeAttention(tape.constant(Matrix::Zero(1, d)), tape.constant(RandomMatrix(rng, d, d)),
                                  tape.constant(RandomMatrix(rng, d, d)), tape.constant(t));
    worst = std::max(worst, (m.feature.value().row(0) - MergeMean(t).feature).cwiseAbs().maxCoeff());
  }
  v.require(worst <= 1e-10, "max deviation " + Fmt("%.2e", worst));
  v.note("max |attention - mean| " + Fmt("%.2e", worst));
  return v;
}

Verdict InvarianceSuite() {
  Verdict v;
  Rng rng(4);
  double sum_err = 0.0;
  double perm_err = 0.0;
  int argmax_flips = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(6));
    const int d = 8;
    const Matrix g = RandomMatrix(rng, 1, d, 3.0);
    const Matrix wq = RandomMatrix(rng, d, d);
    const Matrix wk = RandomMatrix(rng, d, d);
    const Matrix t = RandomMatrix(rng, k, d);
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Matrix shuffled(k, d);
    for (int i = 0; i < k; ++i) shuffled.row(i) = t.row(perm[i]);
    ad::Tape tape;
    const auto a = MergeAttention(tape.constant(g), tape.constant(wq), tape.constant(wk), tape.constant(t));
    const auto b = MergeAttention(tape.constant(g), tape.constant(wq), tape.constant(wk), tape.constant(shuffled));
    sum_err = std::max(sum_err, std::abs(a.weights.value().sum() - 1.0));
    perm_err = std::max(perm_err, (a.feature.value() - b.feature.value()).cwiseAbs().maxCoeff());

    ClassScores s{{"a", "b", "c", "d", "e"}, RandomMatrix(rng, 1, 5).row(0)};
    ClassScores shifted = s;
    shifted.values = s.values.array() * (0.01 + 10.0 * rng.uniform()) + 5.0 * rng.normal();
    argmax_flips += PredictIndex(s) != PredictIndex(shifted);
  }
  v.require(sum_err <= 1e-12, "softmax sum error " + Fmt("%.2e", sum_err));
  v.require(perm_err <= 1e-12, "permutation deviation " + Fmt("%.2e", perm_err));
  v.require(argmax_flips == 0, std::to_string(argmax_flips) + " argmax changes under affine maps");

  const ToyEncoder enc(testing::ToyEncoderConfig(16, 5));
  const std::uint64_t digest = enc.parameter_digest();
  const Matrix table = enc.embedding_table();
  TempDir tmp("accept_frozen");
  SynthSpec spec;
  spec.per_class = 40;
  spec.noise = 0.3;
  spec.seed = 5;
  WriteSynthetic(SynthesizeDataset(spec, enc), tmp.path());
  const Dataset ds = LoadDataset(tmp.path() / "manifest.json");
  ClassifierConfig cfg;
  cfg.seed = 5;
  const TrainState st = Train(ds, LoadKb(tmp.path() / "kb.json"), cfg, enc);
  v.require(st.epochs_run == cfg.epochs, "training stopped early");
  v.require(enc.parameter_digest() == digest && enc.embedding_table() == table, "encoder changed during training");
  v.note("softmax sum err " + Fmt("%.1e", sum_err) + ", perm err " + Fmt("%.1e", perm_err) +
         ", encoder digest unchanged over " + std::to_string(st.epochs_run) + " epochs");
  return v;
}

Verdict MetricOracles() {
  Verdict v;
  Rng rng(5);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = testing::RandomPredictionSet(rng, trial);
    mismatches += Accuracy(c.preds, c.truths) != testing::OracleAccuracy(c.preds, c.truths);
    mismatches += MacroF1(c.preds, c.truths, c.classes) != testing::OracleMacroF1(c.preds, c.truths, c.classes);
  }
  v.require(mismatches == 0, std::to_string(mismatches) + " mismatches against the oracles");
  const std::vector<int> truths = {0, 1, 0, 1, 0, 1, 0, 1};
  const std::vector<int> all_a(8, 0);
  const double f1 = MacroF1(all_a, truths, 2);
  v.require(std::abs(f1 - 1.0 / 3.0) < 1e-15, "all-one-class macro-F1 " + Fmt("%.6f", f1));
  v.note("1000 trials exact, all-one-class macro-F1 " + Fmt("%.6f", f1));
  return v;
}

struct SynthRun {
  ExperimentConfig cfg;
  Dataset dataset;
  SymptomKnowledgeBase kb;
  std::map<std::string, std::string> noise_symptoms;
};

SynthRun MakeSynthRun(const TempDir& tmp, const std::vector<std::string>& overrides) {
  SynthRun run;
  run.cfg = ParseConfig("", overrides);
  const ToyEncoder enc(run.cfg.encoder);
  const SynthResult r = SynthesizeDataset(run.cfg.synth, enc);
  WriteSynthetic(r, tmp.path());
  run.dataset = LoadDataset(tmp.path() / "manifest.json");
  run.kb = LoadKb(tmp.path() / "kb.json");
  run.noise_symptoms = r.noise_symptoms;
  return run;
}

Verdict AblationTrend() {
  Verdict v;
  int ordered = 0;
  int attention_ok = 0;
  std::string table;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TempDir tmp("accept_trend");
    const SynthRun run = MakeSynthRun(tmp, {"seed=" + std::to_string(seed), "encoder.dim=32", "synth.per_class=1000",
                                            "synth.noise=0.3", "synth.inject_noise_symptom=true",
                                            "synth.symptoms_per_class=4"});
    const ToyEncoder enc(run.cfg.encoder);
    const ExperimentResult r = RunAblation(run.dataset, run.kb, run.cfg.classifier, enc);
    const double zs = r.arm("zero_shot").accuracy;
    const double mean = r.arm("cop_mean").accuracy;
    const double mep = r.arm("cop_mep").accuracy;
    const bool order = zs <= mean && mean <= mep;
    ordered += order;

    bool below = true;
    std::string weights;
    for (const auto& [cat, w] : r.arm("cop_mep").attention_weights) {
      const auto& symptoms = run.kb.at(cat).texts();
      const auto pos = std::find(symptoms.begin(), symptoms.end(), run.noise_symptoms.at(cat)) - symptoms.begin();
      const double wn = w.at(static_cast<std::size_t>(pos));
      below = below && wn < 1.0 / static_cast<double>(w.size());
      weights += (weights.empty() ? "" : "/") + Fmt("%.3f", wn);
    }
    attention_ok += below;
    table += "\n    seed " + std::to_string(seed) + ": zero_shot " + Fmt("%.4f", zs) + " mep_only " +
             Fmt("%.4f", r.arm("mep_only").accuracy) + " cop_max " + Fmt("%.4f", r.arm("cop_max").accuracy) +
             " cop_mean " + Fmt("%.4f", mean) + " cop_mep " + Fmt("%.4f", mep) + (order ? " [order ok]" : " [order violated]") +
             " noise-symptom weight " + weights + (below ? " < 1/k" : " >= 1/k");
  }
  v.require(ordered >= 4, "ordering held on " + std::to_string(ordered) + "/5 seeds");
  v.require(attention_ok == 5, "noise-symptom weight < 1/k on " + std::to_string(attention_ok) + "/5 seeds");
  v.note("ordering " + std::to_string(ordered) + "/5, attention " + std::to_string(attention_ok) + "/5" + table);
  return v;
}

Verdict FaithfulnessTrend() {
  Verdict v;
  int held = 0;
  std::string table;
  std::string zero_shot_table;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TempDir tmp("accept_faith");
    const std::string dir = tmp.path().string();
    std::ostringstream out;
    std::ostringstream err;
    if (cli::Run({"-q", "synth", "--out", dir, "--seed", std::to_string(seed), "--dim", "32", "--per-class", "100"},
                 out, err) != 0) {
      v.require(false, "synth failed: " + err.str());
      return v;
    }
    const ExperimentConfig cfg = LoadConfig(tmp.path() / "config.json");
    const ToyEncoder enc(cfg.encoder);
    const Dataset ds = LoadDataset(cfg.data_path);
    const SymptomKnowledgeBase kb = LoadKb(cfg.kb_path);
    const auto variants = LoadVariants(tmp.path() / "variants");
    const ExperimentResult r = RunFaithfulness(ds, kb, variants, cfg.classifier, enc, "cop_mep");
    const double correct = r.arms.front().accuracy;
    bool ok = variants.size() == 3;
    std::string line = "\n    seed " + std::to_string(seed) + ": llm " + Fmt("%.4f", correct);
    for (std::size_t i = 1; i < r.arms.size(); ++i) {
      ok = ok && correct >= r.arms[i].accuracy;
      line += " " + r.arms[i].kb_variant + " " + Fmt("%.4f", r.arms[i].accuracy);
    }
    held += ok;
    table += line + (ok ? "" : " [violated]");

    const ExperimentResult zs = RunFaithfulness(ds, kb, variants, cfg.classifier, enc, "zero_shot");
    zero_shot_table += "\n    seed " + std::to_string(seed) + " (zero-shot pipeline, informational):";
    for (const auto& a : zs.arms) zero_shot_table += " " + a.kb_variant + " " + Fmt("%.4f", a.accuracy);
  }
  v.require(held >= 4, "correct knowledge best on " + std::to_string(held) + "/5 seeds");
  v.note("held on " + std::to_string(held) + "/5" + table + zero_shot_table);
  return v;
}

Verdict VsgPipeline() {
  Verdict v;
  TempDir tmp("accept_vsg");
  FixtureLlmClient llm(std::string(VIP_FIXTURE_DIR) + "/llm");
  LlmCache cache(tmp.path() / "cache");
  const std::vector<std::string> categories = {"melanoma", "nevus"};
  const SymptomKnowledgeBase kb = GenerateKnowledgeBase(categories, "dermoscopic images", llm, cache);
  bool schema_ok = true;
  try {
    SaveKb(kb, tmp.path() / "kb.json");
    schema_ok = LoadKb(tmp.path() / "kb.json", categories) == kb;
  } catch (const Error&) {
    schema_ok = false;
  }
  v.require(schema_ok, "generated knowledge base failed schema round trip");
  const auto nevus = kb.at("nevus").texts();
  v.require(std::find(nevus.begin(), nevus.end(), "consistent brown color") != nevus.end() &&
                std::find(nevus.begin(), nevus.end(), "clear edges") != nevus.end(),
            "fixture phrases missing from nevus entry");

  auto items = [](std::initializer_list<const char*> texts) {
    std::vector<VisualSymptom> out;
    for (const char* t : texts) out.push_back({t, SymptomStage::kCoarse, "c"});
    return out;
  };
  const SymptomSet exact = RefineSet(items({"A", "B", "C"}), items({"B", "C", "D"}), 1.0);
  v.require(exact.texts() == std::vector<std::string>{"B", "C"} && !exact.fallback_used,
            "exact intersection at threshold 1.0");
  const SymptomSet jac = RefineSet(items({"dark brown color", "sharp border"}), items({"brown color"}), 0.5);
  v.require(jac.texts() == std::vector<std::string>{"dark brown color"}, "Jaccard example at threshold 0.5");

  const int cold_calls = llm.calls();
  FixtureLlmClient warm(std::string(VIP_FIXTURE_DIR) + "/llm");
  const SymptomKnowledgeBase again = GenerateKnowledgeBase(categories, "dermoscopic images", warm, cache);
  v.require(warm.calls() == 0, "warm run issued " + std::to_string(warm.calls()) + " calls");
  v.require(again == kb, "warm run changed the knowledge base");
  v.note("cold calls " + std::to_string(cold_calls) + ", warm calls " + std::to_string(warm.calls()));
  return v;
}

Verdict EndToEndDeterminism() {
  Verdict v;
  TempDir tmp("accept_e2e");
  auto pipeline = [&](const std::string& name) -> std::string {
    const std::string dir = (tmp.path() / name).string();
    std::ostringstream out;
    std::ostringstream err;
    const std::vector<std::vector<std::string>> steps = {
        {"-q", "synth", "--out", dir, "--seed", "11", "--dim", "32", "--per-class", "100", "--noise", "0.3"},
        {"-q", "train", "--config", dir + "/config.json", "--out", dir + "/run"},
        {"-q", "eval", "--config", dir + "/config.json", "--out", dir + "/run", "--ckpt", dir + "/run/checkpoint.json"},
    };
    for (const auto& step : steps) {
      if (cli::Run(step, out, err) != 0) {
        v.require(false, step[0] + " failed: " + err.str());
        return {};
      }
    }
    return ReadFile(tmp.path() / name / "run" / "metrics.json");
  };
  const std::string first = pipeline("a");
  const std::string second = pipeline("b");
  if (!v.pass) return v;
  v.require(first == second, "metrics.json differs between runs");
  if (v.pass) v.note("metrics.json " + std::to_string(first.size()) + " bytes, identical across two runs");
  return v;
}

}  // namespace
}  // namespace vip

int main() {
  using namespace vip;
  const std::vector<Criterion> criteria = {
      {1, "equation fidelity", 1.0, EquationFidelity},
      {2, "gradient suite", 30.0, GradientSuite},
      {3, "reduction identity", 0.0, ReductionIdentity},
      {4, "invariance suite", 0.0, InvarianceSuite},
      {5, "metric oracles", 0.0, MetricOracles},
      {6, "ablation trend", 180.0, AblationTrend},
      {7, "knowledge faithfulness trend", 180.0, FaithfulnessTrend},
      {8, "symptom generation pipeline", 0.0, VsgPipeline},
      {9, "end-to-end determinism", 0.0, EndToEndDeterminism},
  };
  const auto start = Clock::now();
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Verdict verdict;
    try {
      verdict = c.run();
    } catch (const std::exception& e) {
      verdict.require(false, std::string("exception: ") + e.what());
    }
    const double elapsed = Seconds(t0);
    if (c.budget_seconds > 0.0) {
      verdict.require(elapsed < c.budget_seconds, "exceeded " + Fmt("%.0f", c.budget_seconds) + " s budget");
    }
    if (c.id == 9) {
      const double total = Seconds(start);
      verdict.require(total < 300.0, "suite took " + Fmt("%.1f", total) + " s");
      verdict.note("suite total " + Fmt("%.1f", total) + " s");
    }
    std::printf("%s criterion %d (%s) [%.2f s]: %s\n", verdict.pass ? "PASS" : "FAIL", c.id, c.name, elapsed,
                verdict.detail.c_str());
    std::fflush(stdout);
    failures += !verdict.pass;
  }
  return failures == 0 ? 0 : 1;
}
