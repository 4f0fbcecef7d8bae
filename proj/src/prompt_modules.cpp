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

#include "vip/prompt_modules.hpp"

#include <cmath>

#include "vip/error.hpp"
#include "vip/util.hpp"

namespace vip {

namespace {

void RequireRows(const Matrix& m, const char* op) {
  if (m.rows() == 0) throw InvalidArgument(std::string(op) + ": feature matrix has k = 0 rows");
}

double Cosine(const RowVector& a, const RowVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw DegenerateFeature("cosine of a zero-norm vector");
  return a.dot(b) / (na * nb);
}

}  // namespace

int MergePrompt::index_of(const std::string& category) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == category) return static_cast<int>(i);
  }
  throw UnknownCategory(category);
}

RowVector MergePrompt::grouping_token(const std::string& category) const {
  return grouping.row(index_of(category));
}

const char* MergeModeName(MergeMode mode) {
  switch (mode) {
    case MergeMode::kAttention: return "attention";
    case MergeMode::kMean: return "mean";
    case MergeMode::kMax: return "max";
  }
  return "attention";
}

MergeMode ParseMergeMode(const std::string& name) {
  if (name == "attention" || name == "mep") return MergeMode::kAttention;
  if (name == "mean") return MergeMode::kMean;
  if (name == "max") return MergeMode::kMax;
  throw InvalidArgument("unknown merge mode '" + name + "' (expected attention, mean, or max)");
}

ContextPrompt InitContextPrompt(int length, int dim, std::uint64_t seed, const PromptInit& init) {
  if (length < 0) throw InvalidArgument("context prompt length must be >= 0");
  Rng rng(DeriveSeed(seed, "context-prompt"));
  ContextPrompt ctx{Matrix(length, dim)};
  for (Eigen::Index i = 0; i < ctx.tokens.size(); ++i) ctx.tokens.data()[i] = rng.normal() * init.context_std;
  return ctx;
}

MergePrompt InitMergePrompt(const std::vector<std::string>& categories, int dim, std::uint64_t seed,
                            const PromptInit& init) {
  Rng rng(DeriveSeed(seed, "merge-prompt"));
  MergePrompt mep;
  mep.categories = categories;
  mep.grouping = Matrix(static_cast<Eigen::Index>(categories.size()), dim);
  for (Eigen::Index i = 0; i < mep.grouping.size(); ++i) mep.grouping.data()[i] = rng.normal() * init.grouping_std;
  auto near_identity = [&] {
    Matrix w = Matrix::Identity(dim, dim);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] += rng.normal() * init.projection_noise_std;
    return w;
  };
  mep.w_q = near_identity();
  mep.w_k = near_identity();
  return mep;
}

ad::Var ComposeTextInput(ad::Var context, ad::Var symptom_embedding, int context_limit) {
  if (context.rows() > 0 && context.cols() != symptom_embedding.cols()) {
    throw InvalidArgument("compose_text_input: context width " + std::to_string(context.cols()) +
                          " != symptom embedding width " + std::to_string(symptom_embedding.cols()));
  }
  const Eigen::Index m = context.rows();
  if (m >= context_limit) {
    throw InvalidArgument("compose_text_input: context length leaves no room for symptom tokens");
  }
  const Eigen::Index keep = std::min<Eigen::Index>(symptom_embedding.rows(), context_limit - m);
  ad::Var symptom = keep == symptom_embedding.rows()
                        ? symptom_embedding
                        : ad::slice_rows(symptom_embedding, 0, keep);
  if (m == 0) return symptom;
  const ad::Var parts[] = {context, symptom};
  return ad::concat_rows(parts);
}

EmbeddingSequence ComposeTextInput(const ContextPrompt& ctx, const EmbeddingSequence& symptom,
                                   int context_limit) {
  ad::Tape tape;
  return ComposeTextInput(tape.constant(ctx.tokens), tape.constant(symptom), context_limit).value();
}

AttentionMerge MergeAttention(ad::Var grouping, ad::Var w_q, ad::Var w_k, ad::Var features) {
  RequireRows(features.value(), "merge_attention");
  const Eigen::Index d = features.cols();
  if (grouping.rows() != 1 || grouping.cols() != d || w_q.rows() != d || w_q.cols() != d ||
      w_k.rows() != d || w_k.cols() != d) {
    throw InvalidArgument("merge_attention: parameter shapes do not match feature width " +
                          std::to_string(d));
  }
  const ad::Var query = ad::matmul(grouping, w_q);   // 1 x d
  const ad::Var keys = ad::matmul(features, w_k);    // k x d
  const ad::Var scores = ad::scale(ad::matmul_nt(query, keys), 1.0 / std::sqrt(static_cast<double>(d)));
  const ad::Var weights = ad::softmax_rows(scores);  // 1 x k
  return {ad::add(grouping, ad::matmul(weights, features)), weights};
}

ClassRepresentation MergeAttention(const MergePrompt& mep, const std::string& category,
                                   const TextFeatureMatrix& features) {
  const int idx = mep.index_of(category);
  RequireRows(features, "merge_attention");
  ad::Tape tape;
  const auto merged = MergeAttention(tape.constant(mep.grouping.row(idx)), tape.constant(mep.w_q),
                                     tape.constant(mep.w_k), tape.constant(features));
  return {category, merged.feature.value().row(0)};
}

RowVector MergeAttentionWeights(const MergePrompt& mep, const std::string& category,
                                const TextFeatureMatrix& features) {
  const int idx = mep.index_of(category);
  RequireRows(features, "merge_attention");
  ad::Tape tape;
  const auto merged = MergeAttention(tape.constant(mep.grouping.row(idx)), tape.constant(mep.w_q),
                                     tape.constant(mep.w_k), tape.constant(features));
  return merged.weights.value().row(0);
}

ad::Var MergeMean(ad::Var features) {
  RequireRows(features.value(), "merge_mean");
  return ad::mean_rows(features);
}

ClassRepresentation MergeMean(const TextFeatureMatrix& features) {
  RequireRows(features, "merge_mean");
  return {"", features.colwise().mean()};
}

Eigen::Index MergeMaxIndex(const TextFeatureMatrix& features, const FeatureVector& image) {
  RequireRows(features, "merge_max");
  if (features.cols() != image.size()) throw InvalidArgument("merge_max: dimension mismatch");
  Eigen::Index best = 0;
  double best_sim = Cosine(features.row(0), image);
  for (Eigen::Index i = 1; i < features.rows(); ++i) {
    const double sim = Cosine(features.row(i), image);
    if (sim > best_sim) {
      best = i;
      best_sim = sim;
    }
  }
  return best;
}

ClassRepresentation MergeMax(const TextFeatureMatrix& features, const FeatureVector& image) {
  return {"", features.row(MergeMaxIndex(features, image))};
}

}  // namespace vip
