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

#include <algorithm>
#include <string>
#include <vector>

#include "test_helpers.hpp"
#include "vip/classifier.hpp"
#include "vip/encoder.hpp"
#include "vip/knowledge_base.hpp"
#include "vip/prompt_modules.hpp"

// Analytic-vs-numeric gradient comparisons shared by the unit suites and the
// acceptance binary. Each returns the worst elementwise relative error.
namespace vip::testing {

inline constexpr double kFdStep = 1e-5;

/// merge_attention w.r.t. g, W_q, W_k and T, on a random linear readout.
inline double MergeAttentionGradError(std::uint64_t seed, int d, int k) {
  Rng rng(seed);
  const Matrix g0 = RandomMatrix(rng, 1, d);
  const Matrix wq0 = RandomMatrix(rng, d, d);
  const Matrix wk0 = RandomMatrix(rng, d, d);
  const Matrix t0 = RandomMatrix(rng, k, d);
  const Matrix readout = RandomMatrix(rng, 1, d);

  auto eval = [&](const Matrix& g, const Matrix& wq, const Matrix& wk, const Matrix& t) {
    ad::Tape tape;
    const auto m = MergeAttention(tape.constant(g), tape.constant(wq), tape.constant(wk), tape.constant(t));
    return (m.feature.value().array() * readout.array()).sum();
  };

  ad::Tape tape;
  ad::Var g = tape.parameter(g0);
  ad::Var wq = tape.parameter(wq0);
  ad::Var wk = tape.parameter(wk0);
  ad::Var t = tape.parameter(t0);
  const auto merged = MergeAttention(g, wq, wk, t);
  tape.backward(ad::sum(ad::matmul_nt(merged.feature, tape.constant(readout))));

  double worst = 0.0;
  worst = std::max(worst, MaxRelError(g.grad(), NumericGrad([&](const Matrix& x) { return eval(x, wq0, wk0, t0); }, g0)));
  worst = std::max(worst, MaxRelError(wq.grad(), NumericGrad([&](const Matrix& x) { return eval(g0, x, wk0, t0); }, wq0)));
  worst = std::max(worst, MaxRelError(wk.grad(), NumericGrad([&](const Matrix& x) { return eval(g0, wq0, x, t0); }, wk0)));
  worst = std::max(worst, MaxRelError(t.grad(), NumericGrad([&](const Matrix& x) { return eval(g0, wq0, wk0, x); }, t0)));
  return worst;
}

/// compose_text_input followed by encode_text, w.r.t. the context tokens.
inline double ComposeGradError(const DualEncoder& encoder, std::uint64_t seed, int m, int len) {
  Rng rng(seed);
  const int d = encoder.dim();
  const Matrix ctx0 = RandomMatrix(rng, m, d, 0.5);
  const Matrix symptom = RandomMatrix(rng, len, d);
  const Matrix readout = RandomMatrix(rng, 1, d);

  auto eval = [&](const Matrix& ctx) {
    return (encoder.encode_text(ComposeTextInput(ContextPrompt{ctx}, symptom, encoder.context_limit()))
                .array() *
            readout.array())
        .sum();
  };
  ad::Tape tape;
  ad::Var ctx = tape.parameter(ctx0);
  const ad::Var composed = ComposeTextInput(ctx, tape.constant(symptom), encoder.context_limit());
  tape.backward(ad::sum(ad::matmul_nt(encoder.encode_text(tape, composed), tape.constant(readout))));
  return MaxRelError(ctx.grad(), NumericGrad(eval, ctx0, kFdStep));
}

/// encode_text w.r.t. every input row.
inline double EncodeTextGradError(const DualEncoder& encoder, std::uint64_t seed, int len) {
  Rng rng(seed);
  const Matrix x0 = RandomMatrix(rng, len, encoder.dim());
  ad::Tape tape;
  ad::Var x = tape.parameter(x0);
  tape.backward(ad::sum(encoder.encode_text(tape, x)));
  return MaxRelError(x.grad(),
                     NumericGrad([&](const Matrix& in) { return encoder.encode_text(in).sum(); }, x0, kFdStep));
}

/// Two-category knowledge base with up to three phrases each.
inline SymptomKnowledgeBase TinyKb() {
  SymptomKnowledgeBase kb;
  kb.modality = "toy";
  auto add = [&](const std::string& c, std::vector<std::string> texts) {
    SymptomSet set{c, "toy", {}, false};
    for (auto& t : texts) set.symptoms.push_back({t, SymptomStage::kRefined, c});
    kb.entries[c] = set;
  };
  add("alpha", {"dark round spot", "thick rim", "bright core"});
  add("beta", {"pale streak", "thin faint line"});
  return kb;
}

/// End-to-end training loss w.r.t. every trainable parameter, including the
/// log-temperature.
inline double EndToEndGradError(const DualEncoder& encoder, std::uint64_t seed, int m, MergeMode mode,
                                bool normalize = true) {
  const SymptomKnowledgeBase kb = TinyKb();
  const std::vector<std::string> categories = {"alpha", "beta"};
  ClassifierConfig cfg;
  cfg.context_length = m;
  cfg.merge_mode = mode;
  cfg.learnable_temperature = true;
  cfg.temperature = 0.1;
  cfg.seed = seed;
  cfg.init.context_std = 0.5;
  cfg.init.grouping_std = 0.5;
  cfg.init.projection_noise_std = 0.3;
  const PromptState base = InitPromptState(categories, encoder.dim(), cfg);
  Rng rng(seed + 17);
  const Matrix images = RandomMatrix(rng, 3, encoder.dim());
  const std::vector<int> labels = {0, 1, 1};

  const LossWithGrads analytic = BatchLoss(base, kb, categories, encoder, images, labels, normalize);
  auto loss_with = [&](auto&& mutate) {
    return [&, mutate](const Matrix& x) {
      PromptState s = base;
      mutate(s, x);
      return BatchLoss(s, kb, categories, encoder, images, labels, normalize).loss;
    };
  };

  double worst = 0.0;
  if (m > 0) {
    worst = std::max(worst, MaxRelError(analytic.d_context,
                                        NumericGrad(loss_with([](PromptState& s, const Matrix& x) { s.context.tokens = x; }),
                                                    base.context.tokens, kFdStep)));
  }
  if (mode == MergeMode::kAttention) {
    worst = std::max(worst, MaxRelError(analytic.d_grouping,
                                        NumericGrad(loss_with([](PromptState& s, const Matrix& x) { s.merge.grouping = x; }),
                                                    base.merge.grouping, kFdStep)));
    worst = std::max(worst, MaxRelError(analytic.d_w_q,
                                        NumericGrad(loss_with([](PromptState& s, const Matrix& x) { s.merge.w_q = x; }),
                                                    base.merge.w_q, kFdStep)));
    worst = std::max(worst, MaxRelError(analytic.d_w_k,
                                        NumericGrad(loss_with([](PromptState& s, const Matrix& x) { s.merge.w_k = x; }),
                                                    base.merge.w_k, kFdStep)));
  }
  Matrix scale(1, 1);
  scale << base.log_scale;
  Matrix d_scale(1, 1);
  d_scale << analytic.d_log_scale;
  worst = std::max(worst, MaxRelError(d_scale,
                                      NumericGrad(loss_with([](PromptState& s, const Matrix& x) { s.log_scale = x(0, 0); }),
                                                  scale, kFdStep)));
  return worst;
}

inline EncoderConfig ToyEncoderConfig(int dim, std::uint64_t seed = 0) {
  EncoderConfig cfg;
  cfg.dim = dim;
  cfg.vocab_size = 512;
  cfg.seed = seed;
  return cfg;
}

}  // namespace vip::testing
