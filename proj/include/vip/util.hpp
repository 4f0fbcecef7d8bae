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
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vip {

/// Seeded generator whose output depends only on the mt19937_64 bit stream,
/// so sampled values are identical across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream seed from a root seed and a label.
std::uint64_t DeriveSeed(std::uint64_t root, std::string_view label);

std::uint64_t Fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t Fnv1a64(std::string_view text);
std::string Sha256Hex(std::string_view data);
std::string HexU64(std::uint64_t v);

/// Lowercase, strip punctuation, collapse whitespace, trim.
std::string NormalizeText(std::string_view text);
/// Lowercase and collapse runs of whitespace; punctuation is kept.
std::string CollapseWhitespace(std::string_view text);
std::set<std::string> WordSet(std::string_view text);
std::vector<std::string> SplitWords(std::string_view text);
std::string ToLower(std::string_view text);

std::string ReadFile(const std::filesystem::path& path);
/// Writes via a sibling temp file and rename so readers never see partial data.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace vip
