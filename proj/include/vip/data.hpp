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
#include <string>
#include <utility>
#include <vector>

#include "vip/encoder.hpp"
#include "vip/knowledge_base.hpp"

namespace vip {

enum class PayloadMode { kFeatureFile, kImageDir };

struct Splits {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;

  bool operator==(const Splits&) const = default;
};

/// Dataset description. `categories` order is the tie-break order for
/// prediction. Payload paths are relative to the manifest's directory.
struct DatasetManifest {
  std::vector<std::string> categories;
  Splits splits;
  std::map<std::string, std::string> labels;  // sample id -> category
  PayloadMode payload_mode = PayloadMode::kFeatureFile;
  std::string feature_file;  // feature-file mode
  std::string index_file;    // feature-file mode
  std::string image_dir;     // image-dir mode: <image_dir>/<id>.bin, one-row feature files
  std::map<std::string, std::string> metadata;

  int label_index(const std::string& id) const;
  int category_index(const std::string& category) const;
  /// Disjoint splits, unique ids, labels within categories, every split id labelled.
  void validate() const;

  bool operator==(const DatasetManifest&) const = default;
};

std::string SerializeManifest(const DatasetManifest& manifest);
DatasetManifest ParseManifest(std::string_view text);
DatasetManifest LoadManifest(const std::filesystem::path& path);
void SaveManifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Feature-matrix file: 8-byte magic "VIPFEAT1", uint64 rows, uint64 cols, then
/// rows*cols IEEE-754 float64 values in row-major order; all little-endian.
/// The companion index is UTF-8 text, one "<id>\t<row>" line per sample.
struct FeatureTable {
  std::vector<std::string> ids;
  Matrix rows;

  RowVector row(const std::string& id) const;
  std::map<std::string, Eigen::Index> index() const;
};

std::string EncodeFeatureMatrix(const Matrix& rows);
Matrix DecodeFeatureMatrix(std::string_view bytes);
void SaveFeatureTable(const FeatureTable& table, const std::filesystem::path& matrix_path,
                      const std::filesystem::path& index_path);
FeatureTable LoadFeatureTable(const std::filesystem::path& matrix_path,
                              const std::filesystem::path& index_path);

struct Sample {
  std::string id;
  RowVector payload;
  int label = 0;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;

  const std::vector<Sample>& split(const std::string& name) const;
  const Sample& find(const std::string& id) const;  // throws NotFound
};

/// Loads a manifest and resolves every split id to its payload.
Dataset LoadDataset(const std::filesystem::path& manifest_path);

/// Seeded shuffle then split; the validation share is floor((1 - ratio) * n)
/// and the training share takes the remainder. With `labels`, the split is
/// stratified per label.
std::pair<std::vector<std::string>, std::vector<std::string>> SplitTrainVal(
    const std::vector<std::string>& ids, double ratio, std::uint64_t seed,
    const std::map<std::string, std::string>* stratify_labels = nullptr);

struct SynthSpec {
  int classes = 2;
  int per_class = 60;
  int symptoms_per_class = 4;  // k, including the noise symptom when injected
  bool inject_noise_symptom = false;
  double margin = 0.05;
  double noise = 0.0;  // per-coordinate std of the isotropic Gaussian added to image features
  double test_fraction = 0.3;
  double train_ratio = 0.9;
  std::uint64_t seed = 0;
};

struct SynthResult {
  DatasetManifest manifest;
  FeatureTable features;
  SymptomKnowledgeBase kb;
  /// category -> injected noise symptom text (empty when none injected).
  std::map<std::string, std::string> noise_symptoms;
  /// Low-information phrases from the same vocabulary, usable as "useless"
  /// knowledge for the first category.
  std::vector<std::string> uninformative_phrases;
};

/// Builds class anchors in the encoder's text-feature space, symptom phrases
/// clustered along each anchor, and image features = class target + N(0, noise^2 I).
/// Raises ConstructionError when the class anchors cannot be separated by
/// `margin` in cosine distance.
SynthResult SynthesizeDataset(const SynthSpec& spec, const DualEncoder& encoder);

/// Writes manifest.json, features.bin, features.idx and kb.json under `dir`.
void WriteSynthetic(const SynthResult& result, const std::filesystem::path& dir);

/// Adjective antonym pairs used by the synthetic vocabulary.
const std::vector<std::pair<std::string, std::string>>& SyntheticAntonymPairs();
/// Out-of-domain (food) phrases for knowledge-faithfulness variants.
const std::vector<std::string>& OutOfDomainPhrases();

}  // namespace vip
