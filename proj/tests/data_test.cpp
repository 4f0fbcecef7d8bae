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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "gradient_checks.hpp"
#include "test_helpers.hpp"
#include "vip/classifier.hpp"
#include "vip/data.hpp"
#include "vip/error.hpp"
#include "vip/util.hpp"

namespace vip {
namespace {

using testing::RandomMatrix;
using testing::TempDir;

std::vector<std::string> Ids(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// Manifest over a feature table with the requested split sizes.
DatasetManifest SizedManifest(const TempDir& tmp, int train, int val, int test,
                              std::vector<std::string> categories) {
  DatasetManifest m;
  m.categories = std::move(categories);
  m.splits = {Ids("tr", train), Ids("va", val), Ids("te", test)};
  FeatureTable table;
  Rng rng(1);
  for (const auto* split : {&m.splits.train, &m.splits.val, &m.splits.test}) {
    for (const auto& id : *split) {
      m.labels[id] = m.categories[table.ids.size() % m.categories.size()];
      table.ids.push_back(id);
    }
  }
  table.rows = RandomMatrix(rng, static_cast<Eigen::Index>(table.ids.size()), 4);
  SaveFeatureTable(table, tmp.path() / "f.bin", tmp.path() / "f.idx");
  m.feature_file = "f.bin";
  m.index_file = "f.idx";
  return m;
}

TEST_CASE("well-formed manifests load and report split sizes") {
  TempDir tmp("data_manifest");
  const DatasetManifest two = SizedManifest(tmp, 6, 2, 4, {"normal", "pneumonia"});
  SaveManifest(two, tmp.path() / "m.json");
  CHECK(LoadManifest(tmp.path() / "m.json") == two);

  DatasetManifest derm = SizedManifest(tmp, 346, 161, 320, {"melanoma", "nevus"});
  derm.metadata["source"] = "derm7pt";
  SaveManifest(derm, tmp.path() / "derm.json");
  const Dataset ds = LoadDataset(tmp.path() / "derm.json");
  CHECK(ds.train.size() == 346);
  CHECK(ds.val.size() == 161);
  CHECK(ds.test.size() == 320);
  CHECK(ds.manifest.categories == std::vector<std::string>{"melanoma", "nevus"});
  CHECK(ds.find("te3").label == ds.manifest.label_index("te3"));
}

TEST_CASE("manifest validation names offenders") {
  TempDir tmp("data_bad");
  DatasetManifest m = SizedManifest(tmp, 4, 1, 2, {"a", "b"});
  m.splits.test.push_back("tr0");
  try {
    m.validate();
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("'tr0'") != std::string::npos);
  }

  m = SizedManifest(tmp, 4, 1, 2, {"a", "b"});
  m.labels["tr1"] = "c";
  CHECK_THROWS_AS(m.validate(), ValidationError);

  m = SizedManifest(tmp, 4, 1, 2, {"a", "b"});
  m.splits.train.push_back("ghost");
  m.labels["ghost"] = "a";
  SaveManifest(m, tmp.path() / "m.json");
  try {
    LoadDataset(tmp.path() / "m.json");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::find(e.fields().begin(), e.fields().end(), "ghost") != e.fields().end());
  }
  CHECK_THROWS_AS(LoadManifest(tmp.path() / "absent.json"), NotFound);
  CHECK_THROWS_AS(ParseManifest(R"({"categories": [], "bogus": 1})"), ValidationError);
}

TEST_CASE("split_train_val sizes follow the floor convention") {
  auto [tr, va] = SplitTrainVal(Ids("x", 100), 0.9, 1);
  CHECK(tr.size() == 90);
  CHECK(va.size() == 10);

  const int n = 5232;
  const auto split = SplitTrainVal(Ids("p", n), 0.9, 7);
  CHECK(split.second.size() == static_cast<std::size_t>(std::floor(0.1 * n)));
  CHECK(split.first.size() == 4709);
  CHECK(split.second.size() == 523);
}

TEST_CASE("split_train_val is seeded, disjoint and complete") {
  const auto ids = Ids("s", 57);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = SplitTrainVal(ids, 0.8, seed);
    CHECK(a == SplitTrainVal(ids, 0.8, seed));
    std::set<std::string> all(a.first.begin(), a.first.end());
    for (const auto& id : a.second) CHECK(all.insert(id).second);
    CHECK(all.size() == ids.size());
  }
  CHECK(SplitTrainVal(ids, 0.8, 1) != SplitTrainVal(ids, 0.8, 2));
  CHECK_THROWS_AS(SplitTrainVal({}, 0.9, 1), InvalidArgument);
  CHECK_THROWS_AS(SplitTrainVal(ids, 1.0, 1), InvalidArgument);
}

TEST_CASE("stratified split keeps every label in validation") {
  const auto ids = Ids("s", 40);
  std::map<std::string, std::string> labels;
  for (int i = 0; i < 40; ++i) labels[ids[i]] = i < 30 ? "a" : "b";
  const auto [tr, va] = SplitTrainVal(ids, 0.9, 3, &labels);
  int b = 0;
  for (const auto& id : va) b += labels[id] == "b";
  CHECK(b >= 1);
  CHECK(tr.size() + va.size() == 40);
}

TEST_CASE("feature matrix encoding round trip") {
  Rng rng(4);
  const Matrix m = RandomMatrix(rng, 3, 5);
  const std::string bytes = EncodeFeatureMatrix(m);
  CHECK(bytes.size() == 8 + 16 + 15 * 8);
  CHECK(bytes.substr(0, 8) == "VIPFEAT1");
  CHECK(DecodeFeatureMatrix(bytes) == m);
  CHECK_THROWS_AS(DecodeFeatureMatrix(bytes.substr(0, 30)), ValidationError);
  CHECK_THROWS_AS(DecodeFeatureMatrix("NOTMAGIC"), ValidationError);
}

TEST_CASE("noiseless synthetic data is solved by zero-shot") {
  const ToyEncoder enc(testing::ToyEncoderConfig(16, 1));
  SynthSpec spec;
  spec.classes = 2;
  spec.per_class = 20;
  spec.seed = 3;
  const SynthResult r = SynthesizeDataset(spec, enc);
  CHECK(r.features.ids.size() == 40);
  CHECK(r.kb.entries.size() == 2);
  CHECK_NOTHROW(r.manifest.validate());
  const auto reps = ZeroShotRepresentations(r.kb, r.manifest.categories, enc);
  int correct = 0;
  for (std::size_t i = 0; i < r.features.ids.size(); ++i) {
    const std::string& id = r.features.ids[i];
    const auto scores = ScoreImage(r.features.rows.row(static_cast<Eigen::Index>(i)), reps, true);
    correct += PredictIndex(scores) == r.manifest.label_index(id);
  }
  CHECK(correct == 40);
}

TEST_CASE("synthetic output is byte-identical for a seed") {
  const ToyEncoder enc(testing::ToyEncoderConfig(16, 1));
  SynthSpec spec;
  spec.per_class = 15;
  spec.noise = 0.3;
  spec.inject_noise_symptom = true;
  spec.seed = 8;
  TempDir a("synth_a");
  TempDir b("synth_b");
  WriteSynthetic(SynthesizeDataset(spec, enc), a.path());
  WriteSynthetic(SynthesizeDataset(spec, enc), b.path());
  for (const char* f : {"manifest.json", "features.bin", "features.idx", "kb.json"}) {
    CAPTURE(f);
    CHECK(ReadFile(a.path() / f) == ReadFile(b.path() / f));
  }
  spec.seed = 9;
  TempDir c("synth_c");
  WriteSynthetic(SynthesizeDataset(spec, enc), c.path());
  CHECK(ReadFile(a.path() / "features.bin") != ReadFile(c.path() / "features.bin"));
}

TEST_CASE("noise symptom is injected once per class") {
  const ToyEncoder enc(testing::ToyEncoderConfig(16, 1));
  SynthSpec spec;
  spec.inject_noise_symptom = true;
  spec.seed = 2;
  const SynthResult r = SynthesizeDataset(spec, enc);
  for (const auto& c : r.manifest.categories) {
    const auto texts = r.kb.at(c).texts();
    CHECK(texts.size() == 4);
    CHECK(texts.back() == r.noise_symptoms.at(c));
  }
}

TEST_CASE("infeasible synthesis requests raise") {
  const ToyEncoder enc(testing::ToyEncoderConfig(4, 1));
  SynthSpec spec;
  spec.classes = 5;  // more classes than dimensions
  CHECK_THROWS_AS(SynthesizeDataset(spec, enc), ConstructionError);
  spec.classes = 2;
  spec.margin = 0.0;
  CHECK_THROWS_AS(SynthesizeDataset(spec, enc), InvalidArgument);
  spec.margin = 5.0;
  CHECK_THROWS_AS(SynthesizeDataset(spec, enc), ConstructionError);
}

}  // namespace
}  // namespace vip
