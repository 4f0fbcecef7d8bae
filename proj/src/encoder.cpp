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

#include "vip/encoder.hpp"

#include <cctype>
#include <cmath>

#include "vip/error.hpp"
#include "vip/util.hpp"

namespace vip {

namespace {

Matrix Gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal() * stddev;
  }
  return m;
}

Matrix SinusoidalPositions(int length, int dim, double scale) {
  Matrix pe(length, dim);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < dim; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
      const double angle = pos * freq;
      pe(pos, i) = scale * ((i % 2 == 0) ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

void HashMatrix(std::uint64_t& h, const Matrix& m) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
  h = Fnv1a64(std::span(bytes, static_cast<std::size_t>(m.size()) * sizeof(double)), h);
}

}  // namespace

void EncoderConfig::validate() const {
  if (dim < 2) throw ConfigError("encoder.dim", "must be >= 2");
  if (vocab_size < 1) throw ConfigError("encoder.vocab_size", "must be >= 1");
  if (context_limit < 1) throw ConfigError("encoder.context_limit", "must be >= 1");
  if (depth < 0) throw ConfigError("encoder.depth", "must be >= 0");
  if (heads < 1 || dim % heads != 0) {
    throw ConfigError("encoder.heads", "must be positive and divide encoder.dim");
  }
  if (ffn_width < 0) throw ConfigError("encoder.ffn_width", "must be >= 0");
  if (image_input_dim < 0) throw ConfigError("encoder.image_input_dim", "must be >= 0");
  if (!std::isfinite(position_scale)) throw ConfigError("encoder.position_scale", "must be finite");
}

FeatureVector DualEncoder::encode_text(const EmbeddingSequence& embeddings) const {
  ad::Tape tape;
  const ad::Var out = encode_text(tape, tape.constant(embeddings));
  return out.value().row(0);
}

FeatureVector DualEncoder::encode_phrase(std::string_view text) const {
  return encode_text(embed_tokens(tokenize(text)));
}

ToyEncoder::ToyEncoder(const EncoderConfig& config) : config_(config) {
  config_.validate();
  const int d = config_.dim;
  const int ffn = config_.ffn_width > 0 ? config_.ffn_width : 2 * d;
  Rng rng(DeriveSeed(config_.seed, "toy-encoder"));
  token_embedding_ = Gaussian(rng, config_.vocab_size, d, 1.0);
  positions_ = SinusoidalPositions(config_.context_limit, d, config_.position_scale);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (int l = 0; l < config_.depth; ++l) {
    Block b;
    b.w_q = Gaussian(rng, d, d, s);
    b.w_k = Gaussian(rng, d, d, s);
    b.w_v = Gaussian(rng, d, d, s);
    b.w_o = Gaussian(rng, d, d, s);
    b.w_up = Gaussian(rng, d, ffn, s);
    b.w_down = Gaussian(rng, ffn, d, 1.0 / std::sqrt(static_cast<double>(ffn)));
    blocks_.push_back(std::move(b));
  }
  projection_ = Gaussian(rng, d, d, s);
  if (config_.image_mode == ImageMode::kToy) {
    const int in = config_.image_input_dim > 0 ? config_.image_input_dim : d;
    image_projection_ = Gaussian(rng, in, d, 1.0 / std::sqrt(static_cast<double>(in)));
  }
}

TokenSequence ToyEncoder::tokenize(std::string_view text) const {
  TokenSequence seq;
  std::string word;
  auto flush = [&] {
    if (!word.empty() && seq.ids.size() < static_cast<std::size_t>(config_.context_limit)) {
      seq.ids.push_back(static_cast<int>(Fnv1a64(word) % static_cast<std::uint64_t>(config_.vocab_size)));
    }
    word.clear();
  };
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      word.push_back(static_cast<char>(std::tolower(u)));
    } else {
      flush();
    }
  }
  flush();
  if (seq.ids.empty()) throw InvalidArgument("tokenize: text has no tokens");
  return seq;
}

EmbeddingSequence ToyEncoder::embed_tokens(const TokenSequence& tokens) const {
  if (tokens.ids.size() > static_cast<std::size_t>(config_.context_limit)) {
    throw InternalInvariant("embed_tokens: sequence longer than context limit");
  }
  EmbeddingSequence rows(static_cast<Eigen::Index>(tokens.size()), config_.dim);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int id = tokens.ids[i];
    if (id < 0 || id >= config_.vocab_size) {
      throw InternalInvariant("embed_tokens: token id " + std::to_string(id) + " out of range");
    }
    rows.row(static_cast<Eigen::Index>(i)) = token_embedding_.row(id);
  }
  return rows;
}

ad::Var ToyEncoder::attention(ad::Var x, const Block& block) const {
  const ad::Var q = ad::matmul(x, block.w_q);
  const ad::Var k = ad::matmul(x, block.w_k);
  const ad::Var v = ad::matmul(x, block.w_v);
  const int head_dim = config_.dim / config_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<ad::Var> heads;
  heads.reserve(static_cast<std::size_t>(config_.heads));
  for (int h = 0; h < config_.heads; ++h) {
    const ad::Var qh = ad::slice_cols(q, h * head_dim, head_dim);
    const ad::Var kh = ad::slice_cols(k, h * head_dim, head_dim);
    const ad::Var vh = ad::slice_cols(v, h * head_dim, head_dim);
    const ad::Var weights = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt));
    heads.push_back(ad::matmul(weights, vh));
  }
  return ad::matmul(ad::concat_cols(heads), block.w_o);
}

ad::Var ToyEncoder::encode_text(ad::Tape& tape, ad::Var embeddings) const {
  const Eigen::Index len = embeddings.rows();
  if (len == 0) throw InvalidArgument("encode_text: zero rows");
  if (len > config_.context_limit) {
    throw InvalidArgument("encode_text: " + std::to_string(len) + " rows exceed context limit " +
                          std::to_string(config_.context_limit));
  }
  if (embeddings.cols() != config_.dim) {
    throw InvalidArgument("encode_text: embedding width " + std::to_string(embeddings.cols()) +
                          " != dim " + std::to_string(config_.dim));
  }
  ad::Var x = ad::add(embeddings, tape.constant(positions_.topRows(len)));
  for (const Block& block : blocks_) {
    x = ad::add(x, attention(ad::layer_norm_rows(x), block));
    const ad::Var hidden = ad::tanh(ad::matmul(ad::layer_norm_rows(x), block.w_up));
    x = ad::add(x, ad::matmul(hidden, block.w_down));
  }
  return ad::matmul(ad::layer_norm_rows(ad::slice_rows(x, len - 1, 1)), projection_);
}

FeatureVector ToyEncoder::encode_image(const RowVector& input) const {
  if (config_.image_mode == ImageMode::kPassthrough) {
    if (input.size() != config_.dim) {
      throw InvalidArgument("encode_image: passthrough feature has " +
                            std::to_string(input.size()) + " entries, expected " +
                            std::to_string(config_.dim));
    }
    return input;
  }
  if (input.size() != image_projection_.rows()) {
    throw InvalidArgument("encode_image: toy image has " + std::to_string(input.size()) +
                          " entries, expected " + std::to_string(image_projection_.rows()));
  }
  return (input * image_projection_).array().tanh().matrix();
}

std::uint64_t ToyEncoder::parameter_digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  HashMatrix(h, token_embedding_);
  HashMatrix(h, positions_);
  for (const Block& b : blocks_) {
    for (const Matrix* m : {&b.w_q, &b.w_k, &b.w_v, &b.w_o, &b.w_up, &b.w_down}) HashMatrix(h, *m);
  }
  HashMatrix(h, projection_);
  HashMatrix(h, image_projection_);
  return h;
}

}  // namespace vip
