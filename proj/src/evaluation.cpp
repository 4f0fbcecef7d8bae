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

#include "vip/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vip/error.hpp"
#include "vip/util.hpp"

namespace vip {

using nlohmann::json;

namespace {

void RequireSameLength(std::size_t a, std::size_t b) {
  if (a != b) {
    throw InvalidArgument("metrics: " + std::to_string(a) + " predictions for " + std::to_string(b) + " labels");
  }
  if (a == 0) throw InvalidArgument("metrics: empty prediction set");
}

std::vector<int> ToIndices(std::span<const std::string> labels, std::span<const std::string> categories) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    const auto it = std::find(categories.begin(), categories.end(), l);
    if (it == categories.end()) throw UnknownCategory(l);
    out.push_back(static_cast<int>(it - categories.begin()));
  }
  return out;
}

}  // namespace

ConfusionCounts ConfusionCounts::Count(std::span<const int> preds, std::span<const int> truths,
                                       int num_classes) {
  RequireSameLength(preds.size(), truths.size());
  if (num_classes < 1) throw InvalidArgument("metrics: need at least one class");
  const auto n = static_cast<std::size_t>(num_classes);
  ConfusionCounts cc{std::vector<std::int64_t>(n, 0), std::vector<std::int64_t>(n, 0),
                     std::vector<std::int64_t>(n, 0), std::vector<std::int64_t>(n, 0),
                     static_cast<std::int64_t>(preds.size())};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    const int t = truths[i];
    if (p < 0 || p >= num_classes || t < 0 || t >= num_classes) {
      throw InvalidArgument("metrics: class index out of range");
    }
    if (p == t) {
      ++cc.tp[static_cast<std::size_t>(p)];
    } else {
      ++cc.fp[static_cast<std::size_t>(p)];
      ++cc.fn[static_cast<std::size_t>(t)];
    }
  }
  for (std::size_t c = 0; c < n; ++c) cc.tn[c] = cc.total - cc.tp[c] - cc.fp[c] - cc.fn[c];
  return cc;
}

double ConfusionCounts::f1(int cls) const {
  const auto c = static_cast<std::size_t>(cls);
  const std::int64_t denom = 2 * tp[c] + fp[c] + fn[c];
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
}

double Accuracy(std::span<const int> preds, std::span<const int> truths) {
  RequireSameLength(preds.size(), truths.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == truths[i];
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double Accuracy(std::span<const std::string> preds, std::span<const std::string> truths) {
  RequireSameLength(preds.size(), truths.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == truths[i];
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double MacroF1(std::span<const int> preds, std::span<const int> truths, int num_classes) {
  const ConfusionCounts cc = ConfusionCounts::Count(preds, truths, num_classes);
  double sum = 0.0;
  for (int c = 0; c < num_classes; ++c) sum += cc.f1(c);
  return sum / num_classes;
}

double MacroF1(std::span<const std::string> preds, std::span<const std::string> truths,
               std::span<const std::string> categories) {
  RequireSameLength(preds.size(), truths.size());
  const auto p = ToIndices(preds, categories);
  const auto t = ToIndices(truths, categories);
  return MacroF1(p, t, static_cast<int>(categories.size()));
}

SplitEvaluation EvaluateSamples(const ClassRepresentationSet& reps, std::span<const Sample> samples,
                                const DualEncoder& encoder, bool normalize_features) {
  SplitEvaluation out;
  for (const auto& s : samples) {
    out.predictions.push_back(PredictIndex(ScoreImage(encoder.encode_image(s.payload), reps, normalize_features)));
    out.truths.push_back(s.label);
  }
  out.accuracy = Accuracy(out.predictions, out.truths);
  out.macro_f1 = MacroF1(out.predictions, out.truths, static_cast<int>(reps.categories.size()));
  return out;
}

const ArmResult& ExperimentResult::arm(const std::string& name) const {
  for (const auto& a : arms) {
    if (a.arm == name) return a;
  }
  throw NotFound("experiment has no arm '" + name + "'");
}

std::string SerializeResult(const ExperimentResult& r) {
  json arms = json::array();
  for (const auto& a : r.arms) {
    json arm = {{"arm", a.arm},
                {"kb_variant", a.kb_variant},
                {"merge_mode", a.merge_mode},
                {"context_length", a.context_length},
                {"trained", a.trained},
                {"acc", a.accuracy},
                {"f1", a.macro_f1}};
    if (!a.attention_weights.empty()) arm["attention_weights"] = a.attention_weights;
    arms.push_back(std::move(arm));
  }
  const json j = {{"experiment", r.experiment},
                  {"seed", r.seed},
                  {"config_digest", r.config_digest},
                  {"arms", arms}};
  return j.dump(2) + "\n";
}

ExperimentResult ParseResult(std::string_view text) {
  try {
    const json j = json::parse(text);
    ExperimentResult r;
    r.experiment = j.at("experiment").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_digest = j.at("config_digest").get<std::string>();
    for (const auto& a : j.at("arms")) {
      ArmResult arm;
      arm.arm = a.at("arm").get<std::string>();
      arm.kb_variant = a.value("kb_variant", "llm");
      arm.merge_mode = a.value("merge_mode", "");
      arm.context_length = a.value("context_length", 0);
      arm.trained = a.value("trained", false);
      arm.accuracy = a.at("acc").get<double>();
      arm.macro_f1 = a.at("f1").get<double>();
      if (a.contains("attention_weights")) {
        arm.attention_weights = a["attention_weights"].get<std::map<std::string, std::vector<double>>>();
      }
      r.arms.push_back(std::move(arm));
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("metrics file schema violation: ") + e.what(), {"$"});
  }
}

const std::vector<std::string>& AblationArms() {
  static const std::vector<std::string> kArms = {"zero_shot", "mep_only", "cop_max", "cop_mean", "cop_mep"};
  return kArms;
}

ArmResult RunArm(const std::string& arm, const Dataset& dataset, const SymptomKnowledgeBase& kb,
                 const ClassifierConfig& cfg, const DualEncoder& encoder) {
  if (dataset.test.empty()) throw InvalidArgument("evaluation needs a nonempty test split");
  const auto& categories = dataset.manifest.categories;
  ArmResult out;
  out.arm = arm;
  if (arm == "zero_shot") {
    const auto reps = ZeroShotRepresentations(kb, categories, encoder, cfg.zero_shot_normalize);
    const auto eval = EvaluateSamples(reps, dataset.test, encoder, true);
    out.merge_mode = "mean";
    out.accuracy = eval.accuracy;
    out.macro_f1 = eval.macro_f1;
    return out;
  }
  ClassifierConfig arm_cfg = cfg;
  if (arm == "mep_only") {
    arm_cfg.context_length = 0;
    arm_cfg.merge_mode = MergeMode::kAttention;
  } else if (arm == "cop_max") {
    arm_cfg.merge_mode = MergeMode::kMax;
  } else if (arm == "cop_mean") {
    arm_cfg.merge_mode = MergeMode::kMean;
  } else if (arm == "cop_mep") {
    arm_cfg.merge_mode = MergeMode::kAttention;
  } else {
    throw InvalidArgument("unknown ablation arm '" + arm + "'");
  }
  const TrainState state = Train(dataset, kb, arm_cfg, encoder);
  const auto reps = ClassRepresentations(kb, categories, state.params, encoder);
  const auto eval = EvaluateSamples(reps, dataset.test, encoder, arm_cfg.normalize_features);
  out.merge_mode = MergeModeName(arm_cfg.merge_mode);
  out.context_length = arm_cfg.context_length;
  out.trained = true;
  out.accuracy = eval.accuracy;
  out.macro_f1 = eval.macro_f1;
  for (std::size_t c = 0; c < reps.attention_weights.size(); ++c) {
    const RowVector& w = reps.attention_weights[c];
    out.attention_weights[categories[c]] = std::vector<double>(w.data(), w.data() + w.size());
  }
  return out;
}

ExperimentResult RunAblation(const Dataset& dataset, const SymptomKnowledgeBase& kb,
                             const ClassifierConfig& cfg, const DualEncoder& encoder,
                             std::span<const std::string> arms) {
  ExperimentResult result;
  result.experiment = "ablation";
  result.seed = cfg.seed;
  const std::vector<std::string> wanted =
      arms.empty() ? AblationArms() : std::vector<std::string>(arms.begin(), arms.end());
  for (const auto& arm : wanted) result.arms.push_back(RunArm(arm, dataset, kb, cfg, encoder));
  return result;
}

AntonymTable MakeAntonymTable(std::span<const std::pair<std::string, std::string>> pairs) {
  AntonymTable table;
  for (const auto& [a, b] : pairs) {
    table[ToLower(a)] = ToLower(b);
    table[ToLower(b)] = ToLower(a);
  }
  return table;
}

std::string FlipAntonyms(std::string_view text, const AntonymTable& table) {
  std::string out;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    const auto it = table.find(ToLower(word));
    out += it == table.end() ? word : it->second;
    word.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80) {
      word.push_back(c);
    } else {
      flush();
      out.push_back(c);
    }
  }
  flush();
  return out;
}

SymptomKnowledgeBase KnowledgeVariant::apply(const SymptomKnowledgeBase& kb) const {
  const auto it = kb.entries.find(category);
  if (it == kb.entries.end()) {
    throw ValidationError("variant '" + name + "' targets category '" + category +
                              "' which the knowledge base lacks",
                          {"category"});
  }
  SymptomKnowledgeBase out = kb;
  SymptomSet& set = out.entries[category];
  std::vector<std::string> texts;
  if (!symptoms.empty()) {
    texts = symptoms;
  } else if (!antonyms.empty()) {
    for (const auto& s : it->second.symptoms) texts.push_back(FlipAntonyms(s.text, antonyms));
  } else {
    throw ValidationError("variant '" + name + "' supplies neither symptoms nor an antonym table", {"symptoms"});
  }
  set.symptoms.clear();
  set.fallback_used = false;
  std::set<std::string> seen;
  for (const auto& t : texts) {
    if (!seen.insert(NormalizeText(t)).second) continue;
    set.symptoms.push_back(VisualSymptom{t, SymptomStage::kRefined, category});
  }
  set.validate();
  return out;
}

KnowledgeVariant ParseVariant(std::string_view text) {
  try {
    const json j = json::parse(text);
    KnowledgeVariant v;
    v.name = j.at("name").get<std::string>();
    v.category = j.at("category").get<std::string>();
    v.symptoms = j.value("symptoms", std::vector<std::string>{});
    v.antonyms = j.value("antonyms", AntonymTable{});
    return v;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("variant file schema violation: ") + e.what(), {"$"});
  }
}

std::string SerializeVariant(const KnowledgeVariant& v) {
  json j = {{"name", v.name}, {"category", v.category}};
  if (!v.symptoms.empty()) j["symptoms"] = v.symptoms;
  if (!v.antonyms.empty()) j["antonyms"] = v.antonyms;
  return j.dump(2) + "\n";
}

std::vector<KnowledgeVariant> LoadVariants(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw NotFound("variants directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<KnowledgeVariant> out;
  for (const auto& f : files) out.push_back(ParseVariant(ReadFile(f)));
  return out;
}

ExperimentResult RunFaithfulness(const Dataset& dataset, const SymptomKnowledgeBase& kb,
                                 std::span<const KnowledgeVariant> variants, const ClassifierConfig& cfg,
                                 const DualEncoder& encoder, const std::string& arm) {
  // Validate every variant before spending time on training.
  std::vector<SymptomKnowledgeBase> kbs;
  for (const auto& v : variants) kbs.push_back(v.apply(kb));
  ExperimentResult result;
  result.experiment = "faithfulness";
  result.seed = cfg.seed;
  ArmResult base = RunArm(arm, dataset, kb, cfg, encoder);
  base.kb_variant = "llm";
  result.arms.push_back(std::move(base));
  for (std::size_t i = 0; i < variants.size(); ++i) {
    ArmResult r = RunArm(arm, dataset, kbs[i], cfg, encoder);
    r.kb_variant = variants[i].name;
    result.arms.push_back(std::move(r));
  }
  return result;
}

ExplanationReport Explain(const Dataset& dataset, const std::string& sample_id,
                          const SymptomKnowledgeBase& kb, const std::optional<PromptState>& state,
                          const DualEncoder& encoder, bool normalize_features) {
  const Sample& sample = dataset.find(sample_id);
  const auto& categories = dataset.manifest.categories;
  const ClassRepresentationSet reps = state ? ClassRepresentations(kb, categories, *state, encoder)
                                            : ZeroShotRepresentations(kb, categories, encoder, true);
  const FeatureVector f = encoder.encode_image(sample.payload);
  const bool normalize = state ? normalize_features : true;
  const ClassScores scores = ScoreImage(f, reps, normalize);

  ExplanationReport report;
  report.sample_id = sample_id;
  report.categories = categories;
  report.truth = categories[static_cast<std::size_t>(sample.label)];
  report.predicted = Predict(scores);
  const double fn = f.norm();
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const SymptomSet& set = kb.at(categories[c]);
    const TextFeatureMatrix& t = reps.text_features[c];
    std::vector<SymptomSimilarity> rows;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const RowVector row = t.row(static_cast<Eigen::Index>(i));
      const double denom = fn * row.norm();
      if (!(denom > 0.0)) throw DegenerateFeature("zero-norm feature in explanation");
      rows.push_back({set.symptoms[i].text, f.dot(row) / denom});
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const SymptomSimilarity& a, const SymptomSimilarity& b) { return a.similarity > b.similarity; });
    report.per_category.push_back(std::move(rows));
    report.aggregate.push_back(scores.values(static_cast<Eigen::Index>(c)));
  }
  return report;
}

std::string RenderExplanationText(const ExplanationReport& r) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "sample " << r.sample_id << "  predicted=" << r.predicted << "  truth=" << r.truth << "\n";
  for (std::size_t c = 0; c < r.categories.size(); ++c) {
    out << "\n[" << r.categories[c] << "]  score=" << r.aggregate[c] << "\n";
    for (const auto& s : r.per_category[c]) out << "  " << s.similarity << "  " << s.symptom << "\n";
  }
  return out.str();
}

std::string RenderExplanationSvg(const ExplanationReport& r) {
  std::vector<std::string> labels;
  std::vector<double> values;
  for (std::size_t c = 0; c < r.categories.size(); ++c) {
    for (const auto& s : r.per_category[c]) {
      labels.push_back(r.categories[c] + ": " + s.symptom);
      values.push_back(s.similarity);
    }
  }
  return RenderBarChartSvg("sample " + r.sample_id + " (predicted " + r.predicted + ", truth " + r.truth + ")",
                           labels, values);
}

std::vector<ArmSummary> AggregateRuns(std::span<const ExperimentResult> runs) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ArmResult*>> by_arm;
  for (const auto& run : runs) {
    for (const auto& a : run.arms) {
      const std::string key = a.kb_variant == "llm" ? a.arm : a.arm + "/" + a.kb_variant;
      if (!by_arm.contains(key)) order.push_back(key);
      by_arm[key].push_back(&a);
    }
  }
  std::vector<ArmSummary> out;
  for (const auto& key : order) {
    const auto& rs = by_arm[key];
    ArmSummary s;
    s.arm = key;
    s.runs = rs.size();
    for (const auto* r : rs) {
      s.accuracy_mean += r->accuracy;
      s.f1_mean += r->macro_f1;
    }
    s.accuracy_mean /= static_cast<double>(rs.size());
    s.f1_mean /= static_cast<double>(rs.size());
    if (rs.size() > 1) {
      for (const auto* r : rs) {
        s.accuracy_std += (r->accuracy - s.accuracy_mean) * (r->accuracy - s.accuracy_mean);
        s.f1_std += (r->macro_f1 - s.f1_mean) * (r->macro_f1 - s.f1_mean);
      }
      s.accuracy_std = std::sqrt(s.accuracy_std / static_cast<double>(rs.size() - 1));
      s.f1_std = std::sqrt(s.f1_std / static_cast<double>(rs.size() - 1));
    }
    out.push_back(s);
  }
  return out;
}

std::string RenderSummaryText(std::span<const ArmSummary> summary) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "arm                          runs  ACC (mean/std)     F1 (mean/std)\n";
  for (const auto& s : summary) {
    std::string name = s.arm;
    name.resize(std::max<std::size_t>(name.size(), 28), ' ');
    out << name << " " << s.runs << "     " << s.accuracy_mean << " / " << s.accuracy_std << "   "
        << s.f1_mean << " / " << s.f1_std << "\n";
  }
  return out.str();
}

std::string RenderSummarySvg(std::span<const ArmSummary> summary, const std::string& title) {
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& s : summary) {
    labels.push_back(s.arm + " ACC");
    values.push_back(s.accuracy_mean);
  }
  return RenderBarChartSvg(title, labels, values);
}

}  // namespace vip
