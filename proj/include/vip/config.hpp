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
#include <string>
#include <string_view>
#include <vector>

#include "vip/classifier.hpp"
#include "vip/data.hpp"
#include "vip/encoder.hpp"

namespace vip {

/// Resolved experiment configuration. The on-disk form is a JSON object with
/// one section per module; see docs/config.md for the schema.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  EncoderConfig encoder;
  ClassifierConfig classifier;
  SynthSpec synth;

  std::string kb_path;
  double match_threshold = 0.5;
  std::string llm_model = "mock";
  std::string llm_base_url = "https://api.openai.com";
  std::string llm_cache_dir;

  std::string data_path;
  std::string output_dir = "out";

  /// Copies `seed` into every seeded section except the encoder, whose seed
  /// names a fixed set of frozen weights.
  void propagate_seed();
  void validate() const;
};

/// Canonical JSON form with every key present.
std::string ConfigToJson(const ExperimentConfig& cfg);

/// Parses a config document on top of the defaults. Unknown keys and type
/// mismatches raise ConfigError with the dotted key path.
ExperimentConfig ParseConfig(std::string_view text);

/// Applies "dotted.key=value" overrides; the value is read as JSON when it
/// parses, otherwise as a string.
ExperimentConfig ParseConfig(std::string_view text, const std::vector<std::string>& overrides);
ExperimentConfig LoadConfig(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// SHA-256 of the canonical form, ignoring filesystem paths. Independent of
/// key order in the source document.
std::string ConfigDigest(const ExperimentConfig& cfg);

}  // namespace vip
