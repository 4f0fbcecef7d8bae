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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vip/classifier.hpp"

namespace vip {

struct ConfusionCounts {
  std::vector<std::int64_t> tp, fp, fn, tn;
  std::int64_t total = 0;

  static ConfusionCounts Count(std::span<const int> preds, std::span<const int> truths, int num_classes);
  double f1(int cls) const;
};

double Accuracy(std::span<const int> preds, std::span<const int> truths);
double Accuracy(std::span<const std::string> preds, std::span<const std::string> truths);
/// Unweighted mean of per-class F1 = 2TP / (2TP + FP + FN) over every class,
/// counting a class with an empty denominator as 0.
double MacroF1(std::span<const int> preds, std::span<const int> truths, int num_classes);
double MacroF1(std::span<const std::string> preds, std::span<const std::string> truths,
               std::span<const std::string> categories);

struct SplitEvaluation {
  std::vector<int> predictions;
  std::vector<int> truths;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

SplitEvaluation EvaluateSamples(const ClassRepresentationSet& reps, std::span<const Sample> samples,
                                const DualEncoder& encoder, bool normalize_features);

struct ArmResult {
  std::string arm;
  std::string kb_variant = "llm";
  std::string merge_mode;
  int context_length = 0;
  bool trained = false;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  /// Learned softmax weights per category (attention arms only).
  std::map<std::string, std::vector<double>> attention_weights;
};

struct ExperimentResult {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<ArmResult> arms;

  const ArmResult& arm(const std::string& name) const;  // throws NotFound
};

std::string SerializeResult(const ExperimentResult& result);
ExperimentResult ParseResult(std::string_view text);

/// Ablation arms in reporting order.
const std::vector<std::string>& AblationArms();

/// Trains (where needed) and evaluates one named arm on the test split.
ArmResult RunArm(const std::string& arm, const Dataset& dataset, const SymptomKnowledgeBase& kb,
                 const ClassifierConfig& cfg, const DualEncoder& encoder);

/// Runs the requested arms (all when empty) under one seed.
ExperimentResult RunAblation(const Dataset& dataset, const SymptomKnowledgeBase& kb,
                             const ClassifierConfig& cfg, const DualEncoder& encoder,
                             std::span<const std::string> arms = {});

using AntonymTable = std::map<std::string, std::string>;

/// Symmetric table from pairs.
AntonymTable MakeAntonymTable(std::span<const std::pair<std::string, std::string>> pairs);
/// Replaces every word found in the table, keeping the rest of the phrase.
std::string FlipAntonyms(std::string_view text, const AntonymTable& table);

struct KnowledgeVariant {
  std::string name;
  std::string category;
  /// Replacement phrases; when empty and `antonyms` is set, the category's
  /// existing phrases are antonym-flipped instead.
  std::vector<std::string> symptoms;
  AntonymTable antonyms;

  SymptomKnowledgeBase apply(const SymptomKnowledgeBase& kb) const;
};

KnowledgeVariant ParseVariant(std::string_view text);
std::string SerializeVariant(const KnowledgeVariant& variant);
std::vector<KnowledgeVariant> LoadVariants(const std::filesystem::path& dir);

/// Evaluates the unchanged knowledge ("llm") and every variant with the same
/// arm and seed.
ExperimentResult RunFaithfulness(const Dataset& dataset, const SymptomKnowledgeBase& kb,
                                 std::span<const KnowledgeVariant> variants, const ClassifierConfig& cfg,
                                 const DualEncoder& encoder, const std::string& arm = "cop_mep");

struct SymptomSimilarity {
  std::string symptom;
  double similarity = 0.0;
};

struct ExplanationReport {
  std::string sample_id;
  std::string predicted;
  std::string truth;
  std::vector<std::string> categories;
  std::vector<std::vector<SymptomSimilarity>> per_category;  // sorted descending
  std::vector<double> aggregate;                             // classifier score per category
};

/// Per-symptom cosine similarities for one sample. Without `state` the
/// zero-shot representation is used.
ExplanationReport Explain(const Dataset& dataset, const std::string& sample_id,
                          const SymptomKnowledgeBase& kb, const std::optional<PromptState>& state,
                          const DualEncoder& encoder, bool normalize_features = true);
std::string RenderExplanationText(const ExplanationReport& report);
std::string RenderExplanationSvg(const ExplanationReport& report);

struct ArmSummary {
  std::string arm;
  std::size_t runs = 0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double f1_mean = 0.0;
  double f1_std = 0.0;
};

/// Mean and sample standard deviation per arm across run records (e.g. one
/// record per backbone).
std::vector<ArmSummary> AggregateRuns(std::span<const ExperimentResult> runs);
std::string RenderSummaryText(std::span<const ArmSummary> summary);
std::string RenderSummarySvg(std::span<const ArmSummary> summary, const std::string& title);

/// Horizontal bar chart; values are expected in [-1, 1].
std::string RenderBarChartSvg(const std::string& title, std::span<const std::string> labels,
                              std::span<const double> values);

/// Reference Pneumonia accuracies reported for the five arms with a CLIP backbone
/// (documentation only; not test targets).
struct PublishedArm {
  const char* arm;
  double pneumonia_accuracy;
};
inline constexpr PublishedArm kPublishedPneumoniaArms[] = {
    {"zero_shot", 0.5861}, {"mep_only", 0.8486}, {"cop_max", 0.8390},
    {"cop_mean", 0.8550},  {"cop_mep", 0.8669},
};

}  // namespace vip
