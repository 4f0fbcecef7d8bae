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

#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "gradient_checks.hpp"
#include "metric_oracles.hpp"
#include "test_helpers.hpp"
#include "vip/data.hpp"
#include "vip/error.hpp"
#include "vip/evaluation.hpp"

namespace vip {
namespace {

using testing::TempDir;

struct ToySet {
  Dataset dataset;
  SymptomKnowledgeBase kb;
};

ToySet MakeToySet(const DualEncoder& enc, std::uint64_t seed, double noise = 0.0) {
  TempDir tmp("eval_synth");
  SynthSpec spec;
  spec.per_class = 20;
  spec.noise = noise;
  spec.seed = seed;
  WriteSynthetic(SynthesizeDataset(spec, enc), tmp.path());
  return {LoadDataset(tmp.path() / "manifest.json"), LoadKb(tmp.path() / "kb.json")};
}

TEST_CASE("accuracy basics") {
  const std::vector<int> t = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  CHECK(Accuracy(t, t) == 1.0);
  std::vector<int> half = t;
  for (int i = 0; i < 5; ++i) half[i] = 1 - half[i];
  CHECK(Accuracy(half, t) == 0.5);
  const std::vector<int> shorter = {0};
  CHECK_THROWS_AS(Accuracy(shorter, t), InvalidArgument);
  CHECK_THROWS_AS(Accuracy(std::vector<int>{}, std::vector<int>{}), InvalidArgument);
}

TEST_CASE("macro-F1 hand cases") {
  const std::vector<int> t = {0, 1, 0, 1, 0, 1};
  CHECK(MacroF1(t, t, 2) == 1.0);
  const std::vector<int> all_a(6, 0);
  CHECK(MacroF1(all_a, t, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  // Class 2 is never predicted and never true: it still counts, with F1 0.
  const std::vector<int> truth3 = {0, 1, 0, 1};
  CHECK(MacroF1(truth3, truth3, 3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  const std::vector<std::string> cats = {"a", "b"};
  const std::vector<std::string> ps = {"a", "a", "b"};
  const std::vector<std::string> ts = {"a", "b", "b"};
  CHECK(MacroF1(ps, ts, cats) == doctest::Approx(2.0 / 3.0));
  CHECK(Accuracy(ps, ts) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("metrics agree with brute-force oracles") {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = testing::RandomPredictionSet(rng, trial);
    CHECK(Accuracy(c.preds, c.truths) == testing::OracleAccuracy(c.preds, c.truths));
    CHECK(MacroF1(c.preds, c.truths, c.classes) == testing::OracleMacroF1(c.preds, c.truths, c.classes));
  }
}

TEST_CASE("confusion counts are consistent") {
  const std::vector<int> p = {0, 2, 1, 1, 0};
  const std::vector<int> t = {0, 1, 1, 2, 2};
  const auto cc = ConfusionCounts::Count(p, t, 3);
  for (int c = 0; c < 3; ++c) CHECK(cc.tp[c] + cc.fp[c] + cc.fn[c] + cc.tn[c] == cc.total);
  CHECK(cc.tp[1] == 1);
  CHECK(cc.fp[1] == 1);
  CHECK(cc.fn[2] == 2);
}

TEST_CASE("result serialization round trip") {
  ExperimentResult r;
  r.experiment = "ablation";
  r.seed = 7;
  r.config_digest = "d";
  ArmResult a;
  a.arm = "cop_mep";
  a.merge_mode = "attention";
  a.context_length = 4;
  a.trained = true;
  a.accuracy = 0.875;
  a.macro_f1 = 0.5;
  a.attention_weights["x"] = {0.25, 0.75};
  r.arms.push_back(a);
  const std::string text = SerializeResult(r);
  CHECK(SerializeResult(ParseResult(text)) == text);
  CHECK(ParseResult(text).arm("cop_mep").attention_weights.at("x")[1] == 0.75);
  CHECK_THROWS_AS(r.arm("nope"), NotFound);
}

TEST_CASE("ablation runs the requested arms deterministically") {
  const ToyEncoder enc(testing::ToyEncoderConfig(16, 2));
  const ToySet toy = MakeToySet(enc, 3, 0.2);
  ClassifierConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 3;
  const ExperimentResult all = RunAblation(toy.dataset, toy.kb, cfg, enc);
  REQUIRE(all.arms.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(all.arms[i].arm == AblationArms()[i]);
  CHECK_FALSE(all.arm("zero_shot").trained);
  CHECK(all.arm("mep_only").context_length == 0);
  CHECK(all.arm("cop_max").merge_mode == "max");
  CHECK(all.arm("cop_mep").attention_weights.size() == 2);
  for (const auto& a : all.arms) CHECK(a.kb_variant == "llm");

  CHECK(SerializeResult(RunAblation(toy.dataset, toy.kb, cfg, enc)) == SerializeResult(all));

  const std::vector<std::string> one = {"cop_mean"};
  const ExperimentResult single = RunAblation(toy.dataset, toy.kb, cfg, enc, one);
  REQUIRE(single.arms.size() == 1);
  CHECK(single.arms[0].arm == "cop_mean");
  CHECK(single.arms[0].accuracy == all.arm("cop_mean").accuracy);
  const std::vector<std::string> bad = {"cop_median"};
  CHECK_THROWS_AS(RunAblation(toy.dataset, toy.kb, cfg, enc, bad), InvalidArgument);
}

TEST_CASE("antonym flipping") {
  const std::vector<std::pair<std::string, std::string>> pairs = {{"dark", "light"}, {"thick", "thin"}};
  const AntonymTable table = MakeAntonymTable(pairs);
  CHECK(table.at("light") == "dark");
  CHECK(FlipAntonyms("dark thick rim", table) == "light thin rim");
  CHECK(FlipAntonyms("thin-walled, light", table) == "thick-walled, dark");
}

TEST_CASE("knowledge variants") {
  const ToyEncoder enc(testing::ToyEncoderConfig(16, 2));
  const ToySet toy = MakeToySet(enc, 4);
  const std::string target = toy.dataset.manifest.categories[0];

  KnowledgeVariant replace{"out_of_domain", target, {"sweet ripe mango", "crispy fried bread"}, {}};
  const SymptomKnowledgeBase kb1 = replace.apply(toy.kb);
  CHECK(kb1.at(target).texts() == replace.symptoms);
  CHECK(kb1.at(toy.dataset.manifest.categories[1]) == toy.kb.at(toy.dataset.manifest.categories[1]));
  CHECK(ParseVariant(SerializeVariant(replace)).symptoms == replace.symptoms);

  KnowledgeVariant flip{"antonym", target, {}, MakeAntonymTable(SyntheticAntonymPairs())};
  const auto flipped = flip.apply(toy.kb).at(target).texts();
  const auto original = toy.kb.at(target).texts();
  REQUIRE(flipped.size() <= original.size());
  CHECK(flipped != original);

  KnowledgeVariant missing{"x", "no_such_category", {"a b"}, {}};
  CHECK_THROWS_AS(missing.apply(toy.kb), ValidationError);
}

TEST_CASE("faithfulness keeps the baseline bit-identical") {
  const ToyEncoder enc(testing::ToyEncoderConfig(16, 2));
  const ToySet toy = MakeToySet(enc, 5);
  ClassifierConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 5;
  const std::string target = toy.dataset.manifest.categories[0];
  const std::vector<KnowledgeVariant> variants = {
      {"identity", target, toy.kb.at(target).texts(), {}},
      {"out_of_domain", target, std::vector<std::string>(OutOfDomainPhrases().begin(), OutOfDomainPhrases().begin() + 3), {}},
  };
  const ExperimentResult r = RunFaithfulness(toy.dataset, toy.kb, variants, cfg, enc);
  REQUIRE(r.arms.size() == 3);
  CHECK(r.arms[0].kb_variant == "llm");
  CHECK(r.arms[1].kb_variant == "identity");
  CHECK(r.arms[1].accuracy == r.arms[0].accuracy);
  CHECK(r.arms[1].macro_f1 == r.arms[0].macro_f1);
  CHECK(r.arms[1].attention_weights == r.arms[0].attention_weights);
  CHECK(r.arms[2].accuracy <= r.arms[0].accuracy);

  const std::vector<KnowledgeVariant> broken = {{"bad", "nope", {"a"}, {}}};
  CHECK_THROWS_AS(RunFaithfulness(toy.dataset, toy.kb, broken, cfg, enc), ValidationError);
}

TEST_CASE("explanations are consistent with the classifier") {
  const ToyEncoder enc(testing::ToyEncoderConfig(16, 2));
  const ToySet toy = MakeToySet(enc, 6, 0.3);
  const auto& cats = toy.dataset.manifest.categories;
  std::size_t rows = 0;
  for (const auto& c : cats) rows += toy.kb.at(c).size();

  const auto zero_shot = ZeroShotRepresentations(toy.kb, cats, enc);
  for (const auto& s : toy.dataset.test) {
    const ExplanationReport rep = Explain(toy.dataset, s.id, toy.kb, std::nullopt, enc);
    std::size_t listed = 0;
    for (const auto& list : rep.per_category) {
      listed += list.size();
      for (std::size_t i = 0; i < list.size(); ++i) {
        CHECK(list[i].similarity >= -1.0);
        CHECK(list[i].similarity <= 1.0);
        if (i > 0) CHECK(list[i - 1].similarity >= list[i].similarity);
      }
    }
    CHECK(listed == rows);
    const ClassScores scores = ScoreImage(enc.encode_image(s.payload), zero_shot, true);
    for (std::size_t c = 0; c < cats.size(); ++c) {
      CHECK(rep.aggregate[c] == doctest::Approx(scores.values(static_cast<Eigen::Index>(c))).epsilon(1e-12));
    }
    CHECK(rep.predicted == Predict(scores));
    const auto top = std::max_element(rep.aggregate.begin(), rep.aggregate.end()) - rep.aggregate.begin();
    CHECK(rep.predicted == cats[static_cast<std::size_t>(top)]);
  }
  CHECK_THROWS_AS(Explain(toy.dataset, "missing-id", toy.kb, std::nullopt, enc), NotFound);

  const std::string text = RenderExplanationText(Explain(toy.dataset, toy.dataset.test[0].id, toy.kb, std::nullopt, enc));
  CHECK(text.find(toy.dataset.test[0].id) != std::string::npos);
}

TEST_CASE("a sample equal to a symptom feature ranks that symptom first") {
  const ToyEncoder enc(testing::ToyEncoderConfig(16, 2));
  ToySet toy = MakeToySet(enc, 7);
  const std::string cat = toy.dataset.manifest.categories[1];
  const std::string phrase = toy.kb.at(cat).texts()[1];
  toy.dataset.test[0].payload = enc.encode_phrase(phrase);
  const ExplanationReport rep = Explain(toy.dataset, toy.dataset.test[0].id, toy.kb, std::nullopt, enc);
  CHECK(rep.per_category[1].front().symptom == phrase);
  CHECK(rep.per_category[1].front().similarity == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("summaries aggregate mean and sample std") {
  auto run = [](double acc) {
    ExperimentResult r;
    ArmResult a;
    a.arm = "cop_mep";
    a.accuracy = acc;
    a.macro_f1 = acc / 2.0;
    r.arms.push_back(a);
    return r;
  };
  const std::vector<ExperimentResult> runs = {run(0.8), run(0.9), run(1.0)};
  const auto summary = AggregateRuns(runs);
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].runs == 3);
  CHECK(summary[0].accuracy_mean == doctest::Approx(0.9));
  CHECK(summary[0].accuracy_std == doctest::Approx(0.1));
  CHECK(summary[0].f1_std == doctest::Approx(0.05));
  CHECK(RenderSummaryText(summary).find("cop_mep") != std::string::npos);
  const std::string svg = RenderSummarySvg(summary, "a < b & c");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
}

}  // namespace
}  // namespace vip
