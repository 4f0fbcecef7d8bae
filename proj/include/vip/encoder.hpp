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
#include <string>
#include <string_view>
#include <vector>

#include "vip/autograd.hpp"

namespace vip {

enum class ImageMode { kPassthrough, kToy };

struct EncoderConfig {
  int dim = 512;
  int vocab_size = 8192;
  int context_limit = 77;
  int depth = 2;
  int heads = 4;
  int ffn_width = 0;  // 0 means 2 * dim
  double position_scale = 0.5;
  ImageMode image_mode = ImageMode::kPassthrough;
  int image_input_dim = 0;  // toy mode only; 0 means dim
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct TokenSequence {
  std::vector<int> ids;
  std::size_t size() const { return ids.size(); }
};

/// L x d matrix of token embeddings.
using EmbeddingSequence = Matrix;
/// d-dim feature; also a row of a text-feature matrix.
using FeatureVector = RowVector;

/// Frozen dual-encoder contract. Implementations are immutable after
/// construction, so concurrent read-only use is safe. Gradient state lives in
/// the caller's Tape.
class DualEncoder {
 public:
  virtual ~DualEncoder() = default;

  virtual int dim() const = 0;
  virtual int context_limit() const = 0;

  virtual TokenSequence tokenize(std::string_view text) const = 0;
  virtual EmbeddingSequence embed_tokens(const TokenSequence& tokens) const = 0;
  /// Differentiable text encoding of an (L x d) embedding node into 1 x d.
  /// The returned graph references encoder weights; keep the encoder alive
  /// until the tape is done.
  virtual ad::Var encode_text(ad::Tape& tape, ad::Var embeddings) const = 0;
  virtual FeatureVector encode_image(const RowVector& input) const = 0;
  /// Digest over every frozen parameter.
  virtual std::uint64_t parameter_digest() const = 0;

  FeatureVector encode_text(const EmbeddingSequence& embeddings) const;
  /// tokenize -> embed -> encode, without any context prompt.
  FeatureVector encode_phrase(std::string_view text) const;
};

/// Hashing tokenizer + small pre-LN transformer text tower with sinusoidal
/// positions, read out at the final position (the role of CLIP's end-of-text
/// token), and a toy or passthrough image tower.
class ToyEncoder final : public DualEncoder {
 public:
  explicit ToyEncoder(const EncoderConfig& config);

  int dim() const override { return config_.dim; }
  int context_limit() const override { return config_.context_limit; }
  const EncoderConfig& config() const { return config_; }

  TokenSequence tokenize(std::string_view text) const override;
  EmbeddingSequence embed_tokens(const TokenSequence& tokens) const override;
  ad::Var encode_text(ad::Tape& tape, ad::Var embeddings) const override;
  using DualEncoder::encode_text;
  FeatureVector encode_image(const RowVector& input) const override;
  std::uint64_t parameter_digest() const override;

  const Matrix& embedding_table() const { return token_embedding_; }

 private:
  struct Block {
    Matrix w_q, w_k, w_v, w_o;
    Matrix w_up, w_down;
  };

  ad::Var attention(ad::Var x, const Block& block) const;

  EncoderConfig config_;
  Matrix token_embedding_;
  Matrix positions_;
  std::vector<Block> blocks_;
  Matrix projection_;
  Matrix image_projection_;
};

}  // namespace vip
