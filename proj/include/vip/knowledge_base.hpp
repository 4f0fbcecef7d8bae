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

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vip/llm_client.hpp"

namespace vip {

enum class SymptomStage { kCoarse, kRefined };

struct VisualSymptom {
  std::string text;
  SymptomStage stage = SymptomStage::kCoarse;
  std::string category;

  bool operator==(const VisualSymptom&) const = default;
};

struct SymptomSet {
  std::string category;
  std::string modality;
  std::vector<VisualSymptom> symptoms;
  bool fallback_used = false;

  std::vector<std::string> texts() const;
  std::size_t size() const { return symptoms.size(); }
  /// k >= 1, nonempty texts, pairwise distinct after normalization, and no
  /// text mentioning the category name.
  void validate() const;

  bool operator==(const SymptomSet&) const = default;
};

struct SymptomKnowledgeBase {
  std::string modality;
  std::map<std::string, std::string> generator_metadata;
  std::map<std::string, SymptomSet> entries;

  const SymptomSet& at(const std::string& category) const;
  void validate() const;
  /// Entries must cover exactly `labels`; raises ValidationError naming the
  /// first mismatched category.
  void validate_coverage(std::span<const std::string> labels) const;

  bool operator==(const SymptomKnowledgeBase&) const = default;
};

/// Text-only query for the coarse symptom set.
std::string RenderCoarsePrompt(std::string_view category, std::string_view modality);
/// Vision query issued with a grid of example images.
std::string RenderRefinePrompt(std::string_view category);
extern const std::string_view kCoarseTemplate;
extern const std::string_view kRefineTemplate;
inline constexpr std::string_view kTemplateVersion = "vsg-v1";

/// Bullet items (-, *, U+2022, or "N.") in order of appearance, whitespace
/// collapsed, duplicates (after normalization) dropped.
std::vector<VisualSymptom> ParseSymptomList(std::string_view response);

/// Jaccard overlap of normalized word sets; 0 when both are empty.
double WordJaccard(std::string_view a, std::string_view b);

/// Keeps coarse items whose best word-set Jaccard against the refinement is
/// at least `match_threshold`. An empty result falls back to the full coarse
/// set with `fallback_used` set.
SymptomSet RefineSet(std::span<const VisualSymptom> coarse,
                     std::span<const VisualSymptom> refinement, double match_threshold);

bool MentionsCategory(std::string_view text, std::string_view category);

struct GenerateOptions {
  double match_threshold = 0.5;
  bool refresh = false;
  bool parallel = false;
  /// Per-category image grids attached to the refinement query.
  std::map<std::string, std::vector<std::filesystem::path>> grid_images;
};

SymptomKnowledgeBase GenerateKnowledgeBase(std::span<const std::string> categories,
                                           std::string_view modality, LlmClient& llm,
                                           LlmCache& cache, const GenerateOptions& options = {});

std::string SerializeKb(const SymptomKnowledgeBase& kb);
SymptomKnowledgeBase ParseKb(std::string_view text);
void SaveKb(const SymptomKnowledgeBase& kb, const std::filesystem::path& path);
SymptomKnowledgeBase LoadKb(const std::filesystem::path& path);
/// Loads and checks coverage against the dataset labels.
SymptomKnowledgeBase LoadKb(const std::filesystem::path& path, std::span<const std::string> labels);

}  // namespace vip
