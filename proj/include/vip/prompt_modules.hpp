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

#include <string>
#include <vector>

#include "vip/autograd.hpp"
#include "vip/encoder.hpp"

namespace vip {

/// M x d learnable context tokens shared across every category and symptom.
struct ContextPrompt {
  Matrix tokens;

  int length() const { return static_cast<int>(tokens.rows()); }
};

/// Per-category grouping tokens (row i belongs to categories[i]) and the
/// shared query/key projections.
struct MergePrompt {
  std::vector<std::string> categories;
  Matrix grouping;
  Matrix w_q;
  Matrix w_k;

  int index_of(const std::string& category) const;  // throws UnknownCategory
  RowVector grouping_token(const std::string& category) const;
};

/// k x d text features of one category's symptoms.
using TextFeatureMatrix = Matrix;

struct ClassRepresentation {
  std::string category;
  RowVector feature;
};

enum class MergeMode { kAttention, kMean, kMax };
const char* MergeModeName(MergeMode mode);
MergeMode ParseMergeMode(const std::string& name);

struct PromptInit {
  double context_std = 0.02;
  double grouping_std = 0.02;
  double projection_noise_std = 0.01;
};

ContextPrompt InitContextPrompt(int length, int dim, std::uint64_t seed, const PromptInit& init = {});
MergePrompt InitMergePrompt(const std::vector<std::string>& categories, int dim, std::uint64_t seed,
                            const PromptInit& init = {});

/// [p_1..p_M ; e] with the symptom rows truncated from the tail so that the
/// result fits in `context_limit`.
ad::Var ComposeTextInput(ad::Var context, ad::Var symptom_embedding, int context_limit);
EmbeddingSequence ComposeTextInput(const ContextPrompt& ctx, const EmbeddingSequence& symptom,
                                   int context_limit);

struct AttentionMerge {
  ad::Var feature;  // 1 x d
  ad::Var weights;  // 1 x k
};

/// s = g + softmax((g W_q)(T W_k)^T / sqrt(d)) T.
AttentionMerge MergeAttention(ad::Var grouping, ad::Var w_q, ad::Var w_k, ad::Var features);
ClassRepresentation MergeAttention(const MergePrompt& mep, const std::string& category,
                                   const TextFeatureMatrix& features);
/// Softmax weights of the attention merge, in row order of `features`.
RowVector MergeAttentionWeights(const MergePrompt& mep, const std::string& category,
                                const TextFeatureMatrix& features);

ad::Var MergeMean(ad::Var features);
ClassRepresentation MergeMean(const TextFeatureMatrix& features);

/// Row of `features` with the highest cosine similarity to the image feature
/// (first row wins ties).
ClassRepresentation MergeMax(const TextFeatureMatrix& features, const FeatureVector& image);
Eigen::Index MergeMaxIndex(const TextFeatureMatrix& features, const FeatureVector& image);

}  // namespace vip
