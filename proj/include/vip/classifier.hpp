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
#include <functional>
#include <string>
#include <vector>

#include "vip/data.hpp"
#include "vip/encoder.hpp"
#include "vip/knowledge_base.hpp"
#include "vip/prompt_modules.hpp"

namespace vip {

struct ClassifierConfig {
  double temperature = 0.01;  // gamma; logits are score / gamma
  bool learnable_temperature = false;
  bool normalize_features = true;
  double learning_rate = 0.001;
  int epochs = 50;
  double momentum = 0.9;
  bool cosine_decay = true;
  int batch_size = 32;
  double weight_decay = 0.0;
  int context_length = 4;  // M; 0 disables the context prompt
  MergeMode merge_mode = MergeMode::kAttention;
  /// Zero-shot path: L2-normalize each symptom feature before averaging.
  bool zero_shot_normalize = true;
  PromptInit init;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Trainable prompt parameters plus temperature state. Logits are
/// score * exp(log_scale), so gamma = exp(-log_scale).
struct PromptState {
  ContextPrompt context;
  MergePrompt merge;
  double log_scale = 0.0;
  MergeMode mode = MergeMode::kAttention;
  bool learnable_temperature = false;

  double temperature() const;
  bool operator==(const PromptState& other) const;
};

PromptState InitPromptState(const std::vector<std::string>& categories, int dim,
                            const ClassifierConfig& cfg);

struct ClassScores {
  std::vector<std::string> categories;
  RowVector values;

  double at(const std::string& category) const;
};

/// Per-category text features and, for mean/attention merging, the merged
/// class representations s^c (one row per category).
struct ClassRepresentationSet {
  std::vector<std::string> categories;
  MergeMode mode = MergeMode::kMean;
  std::vector<TextFeatureMatrix> text_features;
  std::vector<RowVector> attention_weights;  // attention mode only
  Matrix representations;                    // empty in max mode

  int index_of(const std::string& category) const;
};

/// tokenize -> embed -> compose with context -> encode -> merge, per category.
ClassRepresentationSet ClassRepresentations(const SymptomKnowledgeBase& kb,
                                            const std::vector<std::string>& categories,
                                            const PromptState& state, const DualEncoder& encoder);
/// Zero-shot set: no context, mean of (optionally normalized) symptom features.
ClassRepresentationSet ZeroShotRepresentations(const SymptomKnowledgeBase& kb,
                                               const std::vector<std::string>& categories,
                                               const DualEncoder& encoder, bool normalize_symptoms = true);

ClassScores ScoreImage(const FeatureVector& image, const ClassRepresentationSet& set,
                       bool normalize_features);
ClassScores ClassScoresFor(const FeatureVector& image, const ClassRepresentationSet& set,
                           const ClassifierConfig& cfg);

/// Arg-max; the first category in order wins exact ties.
std::string Predict(const ClassScores& scores);
int PredictIndex(const ClassScores& scores);

/// -log softmax(score / gamma)[truth], evaluated with a max-shifted log-sum-exp.
double CrossEntropyLoss(const ClassScores& scores, const std::string& truth, double temperature);
double CrossEntropyLoss(const ClassScores& scores, const std::string& truth, const ClassifierConfig& cfg);

std::string ZeroShotPredict(const FeatureVector& image, const SymptomKnowledgeBase& kb,
                            const std::vector<std::string>& categories, const DualEncoder& encoder,
                            bool normalize_symptoms = true);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double val_loss = 0.0;
  double learning_rate = 0.0;
  double temperature = 0.0;
};

std::string EpochRecordJson(const EpochRecord& record);

struct TrainState {
  PromptState params;  // best-validation snapshot
  PromptState final_params;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  double best_val_loss = 0.0;
  std::vector<EpochRecord> log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Jointly optimizes the context prompt, merge prompt, and (optionally) the
/// log-temperature with momentum SGD; encoder weights stay frozen. The
/// snapshot with the best validation accuracy (then lowest validation loss)
/// is returned in `params`.
TrainState Train(const Dataset& dataset, const SymptomKnowledgeBase& kb, const ClassifierConfig& cfg,
                 const DualEncoder& encoder, const EpochCallback& on_epoch = {});

/// Scalar training loss of one batch, used by gradient checks.
struct LossWithGrads {
  double loss = 0.0;
  Matrix d_context;
  Matrix d_grouping;
  Matrix d_w_q;
  Matrix d_w_k;
  double d_log_scale = 0.0;
};
LossWithGrads BatchLoss(const PromptState& state, const SymptomKnowledgeBase& kb,
                        const std::vector<std::string>& categories, const DualEncoder& encoder,
                        const Matrix& images, const std::vector<int>& labels, bool normalize_features);

struct Checkpoint {
  static constexpr int kVersion = 1;
  int version = kVersion;
  std::string config_digest;
  std::string encoder_digest;
  bool normalize_features = true;
  PromptState state;

  bool operator==(const Checkpoint&) const = default;
};

std::string SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint ParseCheckpoint(std::string_view text);
void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace vip
