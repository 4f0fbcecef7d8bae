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

#include "cli_app.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <regex>
#include <sstream>

#include "vip/classifier.hpp"
#include "vip/config.hpp"
#include "vip/data.hpp"
#include "vip/encoder.hpp"
#include "vip/error.hpp"
#include "vip/evaluation.hpp"
#include "vip/knowledge_base.hpp"
#include "vip/llm_client.hpp"
#include "vip/util.hpp"

namespace vip::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {}

  void quiet(bool q) { quiet_ = q; }

  void info(const std::string& event, json fields = json::object()) {
    if (quiet_) return;
    fields["level"] = "info";
    fields["event"] = event;
    err_ << fields.dump() << "\n";
  }

  void error(const std::string& kind, const std::string& message, json extra = json::object()) {
    extra["level"] = "error";
    extra["error"] = kind;
    extra["message"] = message;
    err_ << extra.dump() << "\n";
  }

 private:
  std::ostream& err_;
  bool quiet_ = false;
};

// Options shared by every command. Flags are turned into config overrides so
// that they win over file values.
struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
  std::string kb;

  ExperimentConfig resolve() const {
    std::vector<std::string> overrides = sets;
    if (seed) overrides.push_back("seed=" + std::to_string(*seed));
    if (!out.empty()) overrides.push_back("output.dir=" + json(out).dump());
    if (!data.empty()) overrides.push_back("data.path=" + json(data).dump());
    if (!kb.empty()) overrides.push_back("kb.path=" + json(kb).dump());
    const std::string text = config_path.empty() ? std::string() : ReadFile(config_path);
    return ParseConfig(text, overrides);
  }
};

void AddCommon(CLI::App* cmd, Common& c, bool with_data) {
  cmd->add_option("--config", c.config_path, "Experiment config file (JSON)");
  cmd->add_option("--set", c.sets, "Override a config key, e.g. classifier.epochs=10");
  cmd->add_option("--seed", c.seed, "Root seed for all randomness");
  cmd->add_option("--out", c.out, "Output directory");
  if (with_data) {
    cmd->add_option("--data", c.data, "Dataset manifest");
    cmd->add_option("--kb", c.kb, "Knowledge-base file");
  }
}

std::string Require(const std::string& value, const std::string& key) {
  if (value.empty()) throw ConfigError(key, "required (set it in the config or pass the flag)");
  return value;
}

std::unique_ptr<ToyEncoder> MakeEncoder(const ExperimentConfig& cfg) {
  return std::make_unique<ToyEncoder>(cfg.encoder);
}

void CheckDatasetEncoder(const Dataset& ds, const DualEncoder& encoder) {
  const auto it = ds.manifest.metadata.find("encoder_digest");
  if (it == ds.manifest.metadata.end()) return;
  const std::string have = HexU64(encoder.parameter_digest());
  if (it->second != have) {
    throw ValidationError("dataset features were built with encoder " + it->second +
                              " but the config builds encoder " + have +
                              "; use the config written next to the dataset",
                          {"encoder"});
  }
}

struct Loaded {
  ExperimentConfig cfg;
  std::unique_ptr<ToyEncoder> encoder;
  Dataset dataset;
  SymptomKnowledgeBase kb;
};

Loaded LoadInputs(const Common& common, Log& log) {
  Loaded l;
  l.cfg = common.resolve();
  l.encoder = MakeEncoder(l.cfg);
  l.dataset = LoadDataset(Require(l.cfg.data_path, "data.path"));
  CheckDatasetEncoder(l.dataset, *l.encoder);
  l.kb = LoadKb(Require(l.cfg.kb_path, "kb.path"), l.dataset.manifest.categories);
  log.info("inputs_loaded", {{"data", l.cfg.data_path},
                             {"kb", l.cfg.kb_path},
                             {"train", l.dataset.train.size()},
                             {"val", l.dataset.val.size()},
                             {"test", l.dataset.test.size()},
                             {"config_digest", ConfigDigest(l.cfg)}});
  return l;
}

void Write(Log& log, const fs::path& path, const std::string& contents) {
  WriteFileAtomic(path, contents);
  log.info("wrote", {{"path", path.string()}});
}

std::string FormatMetric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// --- mock LLM -------------------------------------------------------------

const std::vector<std::string>& MockNouns() {
  static const std::vector<std::string> kNouns = {"border", "patch", "region", "texture", "spot",
                                                  "margin", "network", "area", "pattern", "shadow"};
  return kNouns;
}

std::string MockResponse(const LlmRequest& request) {
  static const std::regex kCoarse("detect (.+?) in ");
  static const std::regex kRefine("of this (.+?) image");
  std::smatch m;
  bool refine = false;
  std::string category;
  if (std::regex_search(request.prompt, m, kCoarse)) {
    category = m[1];
  } else if (std::regex_search(request.prompt, m, kRefine)) {
    category = m[1];
    refine = true;
  } else {
    return "- no visual features available";
  }
  Rng rng(DeriveSeed(Fnv1a64(category), "mock-llm"));
  const auto& pairs = SyntheticAntonymPairs();
  std::vector<std::string> phrases;
  while (phrases.size() < 8) {
    const auto& pair = pairs[rng.below(pairs.size())];
    const std::string phrase = (rng.below(2) ? pair.first : pair.second) + " " +
                               MockNouns()[rng.below(MockNouns().size())];
    if (std::find(phrases.begin(), phrases.end(), phrase) == phrases.end()) phrases.push_back(phrase);
  }
  std::string out;
  const std::size_t begin = refine ? 2 : 0;
  for (std::size_t i = begin; i < begin + 6; ++i) out += "- " + phrases[i] + "\n";
  return out;
}

std::unique_ptr<LlmClient> MakeLlm(const ExperimentConfig& cfg) {
  const std::string& spec = cfg.llm_model;
  if (spec == "mock") return std::make_unique<MockLlmClient>("mock", MockResponse);
  if (spec.rfind("fixture:", 0) == 0) return std::make_unique<FixtureLlmClient>(spec.substr(8));
  return std::make_unique<HttpLlmClient>(spec, cfg.llm_base_url);
}

// --- commands -------------------------------------------------------------

struct GenSymptomsArgs {
  Common common;
  std::vector<std::string> categories;
  std::string modality;
  std::string kb_out;
  std::string llm;
  std::optional<double> threshold;
  std::string cache;
  std::string grid_dir;
  bool refresh = false;
  bool parallel = false;
};

int GenSymptoms(const GenSymptomsArgs& a, std::ostream& out, Log& log) {
  Common common = a.common;
  if (a.threshold) common.sets.push_back("kb.match_threshold=" + json(*a.threshold).dump());
  if (!a.llm.empty()) common.sets.push_back("kb.llm_model=" + json(a.llm).dump());
  if (!a.cache.empty()) common.sets.push_back("kb.cache_dir=" + json(a.cache).dump());
  const ExperimentConfig cfg = common.resolve();
  const std::string cache_dir =
      cfg.llm_cache_dir.empty() ? (fs::path(cfg.output_dir) / "llm_cache").string() : cfg.llm_cache_dir;
  auto llm = MakeLlm(cfg);
  LlmCache cache(cache_dir);
  GenerateOptions opts;
  opts.match_threshold = cfg.match_threshold;
  opts.refresh = a.refresh;
  opts.parallel = a.parallel;
  if (!a.grid_dir.empty()) {
    for (const auto& c : a.categories) {
      const fs::path dir = fs::path(a.grid_dir) / c;
      if (!fs::is_directory(dir)) continue;
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      opts.grid_images[c] = files;
    }
  }
  log.info("gen_symptoms_start", {{"categories", a.categories}, {"model", llm->model_id()}, {"cache", cache_dir}});
  const SymptomKnowledgeBase kb = GenerateKnowledgeBase(a.categories, a.modality, *llm, cache, opts);
  const fs::path kb_out = a.kb_out.empty() ? fs::path(cfg.output_dir) / "kb.json" : fs::path(a.kb_out);
  SaveKb(kb, kb_out);
  log.info("wrote", {{"path", kb_out.string()}});
  for (const auto& [cat, set] : kb.entries) {
    out << cat << (set.fallback_used ? " (coarse fallback)" : "") << "\n";
    for (const auto& s : set.symptoms) out << "  - " << s.text << "\n";
  }
  return kExitOk;
}

struct SynthArgs {
  Common common;
  std::optional<int> classes, per_class, dim, k;
  std::optional<double> noise;
  bool noise_symptom = false;
};

std::vector<KnowledgeVariant> SyntheticVariants(const SynthResult& r) {
  const std::string& target = r.manifest.categories.front();
  const std::size_t k = r.kb.at(target).size();
  std::vector<KnowledgeVariant> out;

  KnowledgeVariant ood{"out_of_domain", target, {}, {}};
  const auto& food = OutOfDomainPhrases();
  for (std::size_t i = 0; i < k && i < food.size(); ++i) ood.symptoms.push_back(food[i]);
  out.push_back(ood);

  KnowledgeVariant useless{"useless", target, {}, {}};
  for (std::size_t i = 0; i < k && i < r.uninformative_phrases.size(); ++i) {
    useless.symptoms.push_back(r.uninformative_phrases[i]);
  }
  if (!useless.symptoms.empty()) out.push_back(useless);

  out.push_back(KnowledgeVariant{"antonym", target, {}, MakeAntonymTable(SyntheticAntonymPairs())});
  return out;
}

int Synth(const SynthArgs& a, std::ostream& out, Log& log) {
  Common common = a.common;
  if (a.classes) common.sets.push_back("synth.classes=" + std::to_string(*a.classes));
  if (a.per_class) common.sets.push_back("synth.per_class=" + std::to_string(*a.per_class));
  if (a.k) common.sets.push_back("synth.symptoms_per_class=" + std::to_string(*a.k));
  if (a.dim) common.sets.push_back("encoder.dim=" + std::to_string(*a.dim));
  if (a.noise) common.sets.push_back("synth.noise=" + json(*a.noise).dump());
  if (a.noise_symptom) common.sets.push_back("synth.inject_noise_symptom=true");
  ExperimentConfig cfg = common.resolve();
  const auto encoder = MakeEncoder(cfg);
  const SynthResult result = SynthesizeDataset(cfg.synth, *encoder);
  const fs::path dir = cfg.output_dir;
  WriteSynthetic(result, dir);
  for (const auto& v : SyntheticVariants(result)) {
    Write(log, dir / "variants" / (v.name + ".json"), SerializeVariant(v));
  }
  // A config pointing at the generated files, so later commands can run with
  // just --config.
  cfg.data_path = (dir / "manifest.json").string();
  cfg.kb_path = (dir / "kb.json").string();
  Write(log, dir / "config.json", ConfigToJson(cfg));
  out << "synthetic dataset: " << result.manifest.categories.size() << " classes, "
      << result.manifest.splits.train.size() << "/" << result.manifest.splits.val.size() << "/"
      << result.manifest.splits.test.size() << " train/val/test in " << dir.string() << "\n";
  return kExitOk;
}

ExperimentResult SingleArmResult(const std::string& experiment, const std::string& arm,
                                 const ExperimentConfig& cfg, const ClassRepresentationSet& reps,
                                 const SplitEvaluation& eval, bool trained, int context_length) {
  ExperimentResult r;
  r.experiment = experiment;
  r.seed = cfg.seed;
  r.config_digest = ConfigDigest(cfg);
  ArmResult a;
  a.arm = arm;
  a.merge_mode = MergeModeName(reps.mode);
  a.context_length = context_length;
  a.trained = trained;
  a.accuracy = eval.accuracy;
  a.macro_f1 = eval.macro_f1;
  for (std::size_t c = 0; c < reps.attention_weights.size(); ++c) {
    const RowVector& w = reps.attention_weights[c];
    a.attention_weights[reps.categories[c]] = std::vector<double>(w.data(), w.data() + w.size());
  }
  r.arms.push_back(std::move(a));
  return r;
}

int TrainCmd(const Common& common, std::ostream& out, Log& log) {
  Loaded in = LoadInputs(common, log);
  const fs::path dir = in.cfg.output_dir;
  std::string jsonl;
  const TrainState state = Train(in.dataset, in.kb, in.cfg.classifier, *in.encoder, [&](const EpochRecord& rec) {
    jsonl += EpochRecordJson(rec) + "\n";
    log.info("epoch", json::parse(EpochRecordJson(rec)));
  });
  Checkpoint ckpt;
  ckpt.config_digest = ConfigDigest(in.cfg);
  ckpt.encoder_digest = HexU64(in.encoder->parameter_digest());
  ckpt.normalize_features = in.cfg.classifier.normalize_features;
  ckpt.state = state.params;
  Write(log, dir / "checkpoint.json", SerializeCheckpoint(ckpt));
  Write(log, dir / "train_log.jsonl", jsonl);
  Write(log, dir / "config.resolved.json", ConfigToJson(in.cfg));
  const json summary = {{"best_epoch", state.best_epoch},
                        {"best_val_acc", state.best_val_accuracy},
                        {"best_val_loss", state.best_val_loss},
                        {"epochs_run", state.epochs_run},
                        {"config_digest", ckpt.config_digest},
                        {"seed", in.cfg.seed}};
  Write(log, dir / "train_summary.json", summary.dump(2) + "\n");
  out << "best epoch " << state.best_epoch << "  val ACC " << FormatMetric(state.best_val_accuracy) << "\n";
  return kExitOk;
}

int EvalCmd(const Common& common, const std::string& ckpt_path, std::ostream& out, Log& log) {
  Loaded in = LoadInputs(common, log);
  const Checkpoint ckpt = LoadCheckpoint(Require(ckpt_path, "--ckpt"));
  if (ckpt.encoder_digest != HexU64(in.encoder->parameter_digest())) {
    throw ValidationError("checkpoint was trained with encoder " + ckpt.encoder_digest +
                              " which differs from the configured encoder",
                          {"encoder_digest"});
  }
  const auto reps = ClassRepresentations(in.kb, in.dataset.manifest.categories, ckpt.state, *in.encoder);
  const auto eval = EvaluateSamples(reps, in.dataset.test, *in.encoder, ckpt.normalize_features);
  ExperimentResult r = SingleArmResult("eval", "checkpoint", in.cfg, reps, eval, true, ckpt.state.context.length());
  r.config_digest = ckpt.config_digest;
  Write(log, fs::path(in.cfg.output_dir) / "metrics.json", SerializeResult(r));
  out << "ACC " << FormatMetric(eval.accuracy) << "  F1 " << FormatMetric(eval.macro_f1) << "\n";
  return kExitOk;
}

int ZeroShotCmd(const Common& common, std::ostream& out, Log& log) {
  Loaded in = LoadInputs(common, log);
  const auto reps = ZeroShotRepresentations(in.kb, in.dataset.manifest.categories, *in.encoder,
                                            in.cfg.classifier.zero_shot_normalize);
  const auto eval = EvaluateSamples(reps, in.dataset.test, *in.encoder, true);
  const ExperimentResult r = SingleArmResult("zero_shot", "zero_shot", in.cfg, reps, eval, false, 0);
  Write(log, fs::path(in.cfg.output_dir) / "zero_shot.json", SerializeResult(r));
  out << "ACC " << FormatMetric(eval.accuracy) << "  F1 " << FormatMetric(eval.macro_f1) << "\n";
  return kExitOk;
}

void PrintArms(const ExperimentResult& r, std::ostream& out) {
  for (const auto& a : r.arms) {
    std::string name = a.kb_variant == "llm" ? a.arm : a.arm + "/" + a.kb_variant;
    name.resize(std::max<std::size_t>(name.size(), 24), ' ');
    out << name << " ACC " << FormatMetric(a.accuracy) << "  F1 " << FormatMetric(a.macro_f1) << "\n";
  }
}

int AblateCmd(const Common& common, const std::vector<std::string>& arms, std::ostream& out, Log& log) {
  Loaded in = LoadInputs(common, log);
  for (const auto& arm : arms) {
    const auto& known = AblationArms();
    if (std::find(known.begin(), known.end(), arm) == known.end()) {
      throw UsageError("unknown arm '" + arm + "'");
    }
  }
  ExperimentResult r = RunAblation(in.dataset, in.kb, in.cfg.classifier, *in.encoder, arms);
  r.config_digest = ConfigDigest(in.cfg);
  Write(log, fs::path(in.cfg.output_dir) / "ablation.json", SerializeResult(r));
  PrintArms(r, out);
  return kExitOk;
}

int FaithfulnessCmd(const Common& common, const std::string& variants_dir, const std::string& arm,
                    std::ostream& out, Log& log) {
  Loaded in = LoadInputs(common, log);
  const auto variants = LoadVariants(Require(variants_dir, "--variants"));
  ExperimentResult r = RunFaithfulness(in.dataset, in.kb, variants, in.cfg.classifier, *in.encoder, arm);
  r.config_digest = ConfigDigest(in.cfg);
  Write(log, fs::path(in.cfg.output_dir) / "faithfulness.json", SerializeResult(r));
  PrintArms(r, out);
  return kExitOk;
}

int ExplainCmd(const Common& common, const std::string& sample, const std::string& ckpt_path,
               std::ostream& out, Log& log) {
  Loaded in = LoadInputs(common, log);
  std::optional<PromptState> state;
  bool normalize = true;
  if (!ckpt_path.empty()) {
    const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
    state = ckpt.state;
    normalize = ckpt.normalize_features;
  }
  const ExplanationReport report =
      Explain(in.dataset, Require(sample, "--sample"), in.kb, state, *in.encoder, normalize);
  const fs::path dir = in.cfg.output_dir;
  const std::string text = RenderExplanationText(report);
  Write(log, dir / ("explain_" + sample + ".txt"), text);
  Write(log, dir / ("explain_" + sample + ".svg"), RenderExplanationSvg(report));
  out << text;
  return kExitOk;
}

int ReportCmd(const Common& common, const std::vector<std::string>& results, const std::string& title,
              std::ostream& out, Log& log) {
  const ExperimentConfig cfg = common.resolve();
  if (results.empty()) throw UsageError("report needs at least one --results file");
  std::vector<ExperimentResult> runs;
  for (const auto& f : results) runs.push_back(ParseResult(ReadFile(f)));
  const auto summary = AggregateRuns(runs);
  const std::string text = RenderSummaryText(summary);
  const fs::path dir = cfg.output_dir;
  Write(log, dir / "summary.txt", text);
  Write(log, dir / "summary.svg", RenderSummarySvg(summary, title));
  out << text;
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Log log(err);
  CLI::App app{"Visual-symptom prompt tuning toolkit", "vip"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress info logs");

  GenSymptomsArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-symptoms", "Query an LLM for per-category visual symptoms");
  AddCommon(gen_cmd, gen.common, false);
  gen_cmd->add_option("--categories", gen.categories, "Category names")->required()->delimiter(',');
  gen_cmd->add_option("--modality", gen.modality, "Imaging modality, e.g. 'chest X-ray images'")->required();
  gen_cmd->add_option("--kb-out", gen.kb_out, "Knowledge-base output path");
  gen_cmd->add_option("--llm", gen.llm, "Model id, 'mock', or 'fixture:DIR'");
  gen_cmd->add_option("--threshold", gen.threshold, "Word-Jaccard match threshold in [0, 1]");
  gen_cmd->add_option("--cache", gen.cache, "Exchange cache directory");
  gen_cmd->add_option("--grid-dir", gen.grid_dir, "Directory with one sub-directory of grid images per category");
  gen_cmd->add_flag("--refresh", gen.refresh, "Ignore cached exchanges");
  gen_cmd->add_flag("--parallel", gen.parallel, "Query categories concurrently");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic dataset and knowledge base");
  AddCommon(synth_cmd, synth.common, false);
  synth_cmd->add_option("--classes", synth.classes, "Number of classes");
  synth_cmd->add_option("--per-class", synth.per_class, "Samples per class");
  synth_cmd->add_option("--k", synth.k, "Symptoms per class");
  synth_cmd->add_option("--dim", synth.dim, "Feature dimension");
  synth_cmd->add_option("--noise", synth.noise, "Image feature noise level");
  synth_cmd->add_flag("--noise-symptom", synth.noise_symptom, "Replace one symptom per class with noise");

  Common train;
  auto* train_cmd = app.add_subcommand("train", "Learn context and merge prompts");
  AddCommon(train_cmd, train, true);

  Common eval;
  std::string eval_ckpt;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  AddCommon(eval_cmd, eval, true);
  eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint file")->required();

  Common zs;
  auto* zs_cmd = app.add_subcommand("zero-shot", "Evaluate the untrained mean-of-symptoms classifier");
  AddCommon(zs_cmd, zs, true);

  Common ablate;
  std::vector<std::string> arms;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run the ablation arms under one seed");
  AddCommon(ablate_cmd, ablate, true);
  ablate_cmd->add_option("--arms", arms, "Subset of arms")->delimiter(',');

  Common faith;
  std::string variants_dir;
  std::string faith_arm = "cop_mep";
  auto* faith_cmd = app.add_subcommand("faithfulness", "Compare knowledge variants");
  AddCommon(faith_cmd, faith, true);
  faith_cmd->add_option("--variants", variants_dir, "Directory of variant files")->required();
  faith_cmd->add_option("--arm", faith_arm, "Pipeline used for every variant");

  Common explain;
  std::string sample;
  std::string explain_ckpt;
  auto* explain_cmd = app.add_subcommand("explain", "Per-symptom similarities for one sample");
  AddCommon(explain_cmd, explain, true);
  explain_cmd->add_option("--sample", sample, "Sample id")->required();
  explain_cmd->add_option("--ckpt", explain_ckpt, "Checkpoint (zero-shot when omitted)");

  Common report;
  std::vector<std::string> results;
  std::string title = "Accuracy by arm";
  auto* report_cmd = app.add_subcommand("report", "Aggregate metrics files into a summary and plot");
  AddCommon(report_cmd, report, false);
  report_cmd->add_option("--results", results, "Metrics files")->required();
  report_cmd->add_option("--title", title, "Plot title");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    log.error("usage", e.what());
    return kExitUsage;
  }
  log.quiet(quiet);

  try {
    if (gen_cmd->parsed()) return GenSymptoms(gen, out, log);
    if (synth_cmd->parsed()) return Synth(synth, out, log);
    if (train_cmd->parsed()) return TrainCmd(train, out, log);
    if (eval_cmd->parsed()) return EvalCmd(eval, eval_ckpt, out, log);
    if (zs_cmd->parsed()) return ZeroShotCmd(zs, out, log);
    if (ablate_cmd->parsed()) return AblateCmd(ablate, arms, out, log);
    if (faith_cmd->parsed()) return FaithfulnessCmd(faith, variants_dir, faith_arm, out, log);
    if (explain_cmd->parsed()) return ExplainCmd(explain, sample, explain_ckpt, out, log);
    if (report_cmd->parsed()) return ReportCmd(report, results, title, out, log);
    throw InternalInvariant("no command selected");
  } catch (const ConfigError& e) {
    log.error(ErrorKindName(e.kind()), e.what(), {{"key_path", e.key_path()}});
  } catch (const ValidationError& e) {
    log.error(ErrorKindName(e.kind()), e.what(), {{"fields", e.fields()}});
  } catch (const UsageError& e) {
    log.error(ErrorKindName(e.kind()), e.what());
    return kExitUsage;
  } catch (const Error& e) {
    log.error(ErrorKindName(e.kind()), e.what());
  } catch (const std::exception& e) {
    log.error("internal", e.what());
  }
  return kExitFailure;
}

}  // namespace vip::cli
