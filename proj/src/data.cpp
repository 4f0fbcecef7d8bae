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

#include "vip/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vip/error.hpp"
#include "vip/util.hpp"

namespace vip {

using nlohmann::json;

namespace {

constexpr char kFeatureMagic[8] = {'V', 'I', 'P', 'F', 'E', 'A', 'T', '1'};

void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t GetU64(std::string_view bytes, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return v;
}

const char* PayloadName(PayloadMode m) {
  return m == PayloadMode::kImageDir ? "image-dir" : "feature-file";
}

}  // namespace

int DatasetManifest::category_index(const std::string& category) const {
  const auto it = std::find(categories.begin(), categories.end(), category);
  if (it == categories.end()) throw UnknownCategory(category);
  return static_cast<int>(it - categories.begin());
}

int DatasetManifest::label_index(const std::string& id) const {
  const auto it = labels.find(id);
  if (it == labels.end()) throw NotFound("no label for sample '" + id + "'");
  return category_index(it->second);
}

void DatasetManifest::validate() const {
  std::vector<std::string> bad;
  if (categories.empty()) bad.push_back("categories");
  const std::set<std::string> cats(categories.begin(), categories.end());
  if (cats.size() != categories.size()) bad.push_back("categories (duplicate)");
  std::map<std::string, std::string> seen;  // id -> split
  auto scan = [&](const std::vector<std::string>& ids, const char* split) {
    for (const auto& id : ids) {
      auto [it, inserted] = seen.emplace(id, split);
      if (!inserted) {
        bad.push_back(std::string("splits: '") + id + "' in both " + it->second + " and " + split);
      }
      const auto lab = labels.find(id);
      if (lab == labels.end()) {
        bad.push_back(std::string("splits.") + split + ": dangling id '" + id + "'");
      } else if (!cats.contains(lab->second)) {
        bad.push_back("labels." + id + ": unknown label '" + lab->second + "'");
      }
    }
  };
  scan(splits.train, "train");
  scan(splits.val, "val");
  scan(splits.test, "test");
  if (payload_mode == PayloadMode::kFeatureFile && (feature_file.empty() || index_file.empty())) {
    bad.push_back("payload.features/payload.index");
  }
  if (payload_mode == PayloadMode::kImageDir && image_dir.empty()) bad.push_back("payload.image_dir");
  if (!bad.empty()) {
    std::string msg = "invalid dataset manifest:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ValidationError(msg, bad);
  }
}

std::string SerializeManifest(const DatasetManifest& m) {
  json payload = {{"mode", PayloadName(m.payload_mode)}};
  if (m.payload_mode == PayloadMode::kFeatureFile) {
    payload["features"] = m.feature_file;
    payload["index"] = m.index_file;
  } else {
    payload["image_dir"] = m.image_dir;
  }
  const json j = {{"categories", m.categories},
                  {"splits", {{"train", m.splits.train}, {"val", m.splits.val}, {"test", m.splits.test}}},
                  {"labels", m.labels},
                  {"payload", payload},
                  {"metadata", m.metadata}};
  return j.dump(2) + "\n";
}

DatasetManifest ParseManifest(std::string_view text) {
  DatasetManifest m;
  try {
    const json j = json::parse(text);
    for (const auto& [key, _] : j.items()) {
      if (key != "categories" && key != "splits" && key != "labels" && key != "payload" &&
          key != "metadata") {
        throw ValidationError("manifest: unknown key '" + key + "'", {key});
      }
    }
    m.categories = j.at("categories").get<std::vector<std::string>>();
    const json& s = j.at("splits");
    m.splits.train = s.value("train", std::vector<std::string>{});
    m.splits.val = s.value("val", std::vector<std::string>{});
    m.splits.test = s.value("test", std::vector<std::string>{});
    m.labels = j.at("labels").get<std::map<std::string, std::string>>();
    const json& p = j.at("payload");
    const std::string mode = p.at("mode").get<std::string>();
    if (mode == "feature-file") {
      m.payload_mode = PayloadMode::kFeatureFile;
      m.feature_file = p.at("features").get<std::string>();
      m.index_file = p.at("index").get<std::string>();
    } else if (mode == "image-dir") {
      m.payload_mode = PayloadMode::kImageDir;
      m.image_dir = p.at("image_dir").get<std::string>();
    } else {
      throw ValidationError("manifest: unknown payload mode '" + mode + "'", {"payload.mode"});
    }
    if (j.contains("metadata")) m.metadata = j["metadata"].get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest schema violation: ") + e.what(), {"$"});
  }
  m.validate();
  return m;
}

DatasetManifest LoadManifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw NotFound("manifest: " + path.string());
  return ParseManifest(ReadFile(path));
}

void SaveManifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  manifest.validate();
  WriteFileAtomic(path, SerializeManifest(manifest));
}

RowVector FeatureTable::row(const std::string& id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw NotFound("feature row for '" + id + "'");
  return rows.row(it - ids.begin());
}

std::map<std::string, Eigen::Index> FeatureTable::index() const {
  std::map<std::string, Eigen::Index> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = static_cast<Eigen::Index>(i);
  return out;
}

std::string EncodeFeatureMatrix(const Matrix& rows) {
  std::string out(kFeatureMagic, sizeof(kFeatureMagic));
  PutU64(out, static_cast<std::uint64_t>(rows.rows()));
  PutU64(out, static_cast<std::uint64_t>(rows.cols()));
  out.reserve(out.size() + static_cast<std::size_t>(rows.size()) * 8);
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) PutU64(out, std::bit_cast<std::uint64_t>(rows(r, c)));
  }
  return out;
}

Matrix DecodeFeatureMatrix(std::string_view bytes) {
  if (bytes.size() < 24 || std::memcmp(bytes.data(), kFeatureMagic, 8) != 0) {
    throw ValidationError("feature file: bad magic or truncated header", {"header"});
  }
  const std::uint64_t rows = GetU64(bytes, 8);
  const std::uint64_t cols = GetU64(bytes, 16);
  if (cols != 0 && rows > (bytes.size() - 24) / 8 / cols) {
    throw ValidationError("feature file: payload shorter than header declares", {"payload"});
  }
  if (bytes.size() != 24 + rows * cols * 8) {
    throw ValidationError("feature file: size does not match header", {"payload"});
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t at = 24;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c, at += 8) m(r, c) = std::bit_cast<double>(GetU64(bytes, at));
  }
  return m;
}

void SaveFeatureTable(const FeatureTable& table, const std::filesystem::path& matrix_path,
                      const std::filesystem::path& index_path) {
  if (static_cast<Eigen::Index>(table.ids.size()) != table.rows.rows()) {
    throw InvalidArgument("feature table: id count does not match row count");
  }
  WriteFileAtomic(matrix_path, EncodeFeatureMatrix(table.rows));
  std::string index;
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    index += table.ids[i] + "\t" + std::to_string(i) + "\n";
  }
  WriteFileAtomic(index_path, index);
}

FeatureTable LoadFeatureTable(const std::filesystem::path& matrix_path,
                              const std::filesystem::path& index_path) {
  FeatureTable table;
  table.rows = DecodeFeatureMatrix(ReadFile(matrix_path));
  table.ids.assign(static_cast<std::size_t>(table.rows.rows()), "");
  std::istringstream in(ReadFile(index_path));
  std::string line;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ValidationError("feature index: malformed line '" + line + "'", {"index"});
    const std::string id = line.substr(0, tab);
    std::size_t row = 0;
    try {
      row = std::stoul(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ValidationError("feature index: bad row in '" + line + "'", {"index"});
    }
    if (row >= table.ids.size()) throw ValidationError("feature index: row out of range for '" + id + "'", {id});
    if (!seen.insert(id).second) throw ValidationError("feature index: duplicate id '" + id + "'", {id});
    table.ids[row] = id;
  }
  return table;
}

const std::vector<Sample>& Dataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw InvalidArgument("unknown split '" + name + "'");
}

const Sample& Dataset::find(const std::string& id) const {
  for (const auto* s : {&train, &val, &test}) {
    for (const auto& sample : *s) {
      if (sample.id == id) return sample;
    }
  }
  throw NotFound("sample '" + id + "' is not in the dataset");
}

Dataset LoadDataset(const std::filesystem::path& manifest_path) {
  Dataset ds;
  ds.manifest = LoadManifest(manifest_path);
  const auto base = manifest_path.parent_path();
  std::map<std::string, RowVector> payloads;
  std::vector<std::string> dangling;
  auto all_ids = ds.manifest.splits.train;
  all_ids.insert(all_ids.end(), ds.manifest.splits.val.begin(), ds.manifest.splits.val.end());
  all_ids.insert(all_ids.end(), ds.manifest.splits.test.begin(), ds.manifest.splits.test.end());
  if (ds.manifest.payload_mode == PayloadMode::kFeatureFile) {
    const FeatureTable table =
        LoadFeatureTable(base / ds.manifest.feature_file, base / ds.manifest.index_file);
    const auto index = table.index();
    for (const auto& id : all_ids) {
      const auto it = index.find(id);
      if (it == index.end()) {
        dangling.push_back(id);
      } else {
        payloads[id] = table.rows.row(it->second);
      }
    }
  } else {
    for (const auto& id : all_ids) {
      const auto path = base / ds.manifest.image_dir / (id + ".bin");
      if (!std::filesystem::exists(path)) {
        dangling.push_back(id);
        continue;
      }
      const Matrix m = DecodeFeatureMatrix(ReadFile(path));
      if (m.rows() != 1) throw ValidationError("image payload must hold one row: " + path.string(), {id});
      payloads[id] = m.row(0);
    }
  }
  if (!dangling.empty()) {
    std::string msg = "manifest ids without payload:";
    for (const auto& id : dangling) msg += " " + id;
    throw ValidationError(msg, dangling);
  }
  auto fill = [&](const std::vector<std::string>& ids, std::vector<Sample>& out) {
    for (const auto& id : ids) out.push_back(Sample{id, payloads[id], ds.manifest.label_index(id)});
  };
  fill(ds.manifest.splits.train, ds.train);
  fill(ds.manifest.splits.val, ds.val);
  fill(ds.manifest.splits.test, ds.test);
  return ds;
}

std::pair<std::vector<std::string>, std::vector<std::string>> SplitTrainVal(
    const std::vector<std::string>& ids, double ratio, std::uint64_t seed,
    const std::map<std::string, std::string>* stratify_labels) {
  if (ids.empty()) throw InvalidArgument("split_train_val: empty id list");
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("split_train_val: ratio must lie in (0, 1)");
  Rng rng(DeriveSeed(seed, "split-train-val"));
  // The epsilon absorbs representation error in (1 - ratio) * n, e.g. 0.1 * 100.
  auto val_count = [ratio](std::size_t n) {
    return static_cast<std::size_t>(std::floor((1.0 - ratio) * static_cast<double>(n) + 1e-9));
  };
  std::vector<std::string> train;
  std::vector<std::string> val;
  auto split_group = [&](std::vector<std::string> group) {
    rng.shuffle(group);
    const std::size_t nv = val_count(group.size());
    val.insert(val.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(nv));
    train.insert(train.end(), group.begin() + static_cast<std::ptrdiff_t>(nv), group.end());
  };
  if (stratify_labels == nullptr) {
    split_group(ids);
  } else {
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& id : ids) {
      const auto it = stratify_labels->find(id);
      if (it == stratify_labels->end()) throw NotFound("split_train_val: no label for '" + id + "'");
      groups[it->second].push_back(id);
    }
    for (auto& [label, group] : groups) split_group(std::move(group));
  }
  return {std::move(train), std::move(val)};
}

const std::vector<std::pair<std::string, std::string>>& SyntheticAntonymPairs() {
  static const std::vector<std::pair<std::string, std::string>> kPairs = {
      {"dark", "light"},         {"smooth", "rough"},        {"sharp", "blurred"},
      {"regular", "irregular"},  {"large", "small"},         {"dense", "sparse"},
      {"thick", "thin"},         {"bright", "dull"},         {"uniform", "patchy"},
      {"round", "elongated"},    {"symmetric", "asymmetric"}, {"raised", "flat"},
      {"solid", "hollow"},       {"clustered", "scattered"}, {"warm", "cool"},
      {"opaque", "translucent"}, {"coarse", "fine"},         {"wet", "dry"},
      {"central", "peripheral"}, {"single", "multiple"},
  };
  return kPairs;
}

const std::vector<std::string>& OutOfDomainPhrases() {
  static const std::vector<std::string> kPhrases = {
      "crispy golden toast",  "ripe yellow banana",    "creamy tomato soup",
      "sliced green apple",   "melted cheese topping", "roasted coffee beans",
      "fresh garden salad",   "sweet chocolate cake",  "grilled salmon fillet",
      "steamed white rice",   "spicy noodle broth",    "sugared glazed donut",
  };
  return kPhrases;
}

namespace {

const std::vector<std::string>& SyntheticNouns() {
  static const std::vector<std::string> kNouns = {
      "patches", "borders", "lines",   "spots",    "dots",     "streaks", "nodules", "margins",
      "shadows", "rings",   "globules", "networks", "veils",   "areas",   "edges",   "regions",
      "clusters", "folds",  "grains",  "bands",    "blotches", "speckles", "fibers", "crusts",
  };
  return kNouns;
}

}  // namespace

SynthResult SynthesizeDataset(const SynthSpec& spec, const DualEncoder& encoder) {
  if (spec.classes < 2) throw InvalidArgument("synthesize: need at least 2 classes");
  if (spec.per_class < 1) throw InvalidArgument("synthesize: per_class must be >= 1");
  const int clean_k = spec.symptoms_per_class - (spec.inject_noise_symptom ? 1 : 0);
  if (clean_k < 1) throw InvalidArgument("synthesize: symptoms_per_class leaves no informative symptom");
  if (!(spec.margin > 0.0)) throw InvalidArgument("synthesize: margin must be > 0");
  if (!(spec.noise >= 0.0)) throw InvalidArgument("synthesize: noise must be >= 0");
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0)) {
    throw InvalidArgument("synthesize: test_fraction must lie in [0, 1)");
  }
  const int d = encoder.dim();
  if (spec.classes > d || spec.classes > static_cast<int>(SyntheticNouns().size())) {
    throw ConstructionError("synthesize: " + std::to_string(spec.classes) +
                            " class anchors do not fit in dimension " + std::to_string(d) + " with " +
                            std::to_string(SyntheticNouns().size()) + " phrase families");
  }
  Rng rng(DeriveSeed(spec.seed, "synthesize"));

  // Candidate phrase pool: every "<adjective> <noun>" combination, encoded once.
  std::vector<std::string> pool;
  for (const auto& [a, b] : SyntheticAntonymPairs()) {
    for (const auto& noun : SyntheticNouns()) {
      pool.push_back(a + " " + noun);
      pool.push_back(b + " " + noun);
    }
  }
  rng.shuffle(pool);
  const auto n_pool = static_cast<Eigen::Index>(pool.size());
  if (n_pool < static_cast<Eigen::Index>(spec.classes) * spec.symptoms_per_class * 2) {
    throw ConstructionError("synthesize: phrase pool too small for requested symptom count");
  }
  Matrix unit(n_pool, d);
  for (Eigen::Index j = 0; j < n_pool; ++j) {
    const RowVector f = encoder.encode_phrase(pool[static_cast<std::size_t>(j)]);
    unit.row(j) = f / f.norm();
  }
  const RowVector centre = unit.colwise().mean();
  Matrix centred = unit.rowwise() - centre;
  for (Eigen::Index j = 0; j < n_pool; ++j) centred.row(j).normalize();

  // Each class anchor is the centred mean direction of every phrase built on
  // one noun, so a family of phrases lies close to it.
  std::vector<std::size_t> nouns(SyntheticNouns().size());
  for (std::size_t i = 0; i < nouns.size(); ++i) nouns[i] = i;
  rng.shuffle(nouns);
  Matrix anchors(spec.classes, d);
  for (int c = 0; c < spec.classes; ++c) {
    const std::string suffix = " " + SyntheticNouns()[nouns[static_cast<std::size_t>(c)]];
    RowVector v = RowVector::Zero(d);
    for (Eigen::Index j = 0; j < n_pool; ++j) {
      const std::string& phrase = pool[static_cast<std::size_t>(j)];
      if (phrase.ends_with(suffix)) v += centred.row(j);
    }
    for (int p = 0; p < c; ++p) v -= v.dot(anchors.row(p)) * anchors.row(p);
    if (!(v.norm() > 1e-9)) throw ConstructionError("synthesize: degenerate class anchor");
    anchors.row(c) = v / v.norm();
  }
  const Matrix alignment = centred * anchors.transpose();
  auto in_family = [&](const std::string& phrase) {
    for (int c = 0; c < spec.classes; ++c) {
      if (phrase.ends_with(" " + SyntheticNouns()[nouns[static_cast<std::size_t>(c)]])) return true;
    }
    return false;
  };
  // Noise symptoms come from outside every class family and from the quarter
  // of phrases least aligned with any anchor, so they carry no class signal.
  std::vector<Eigen::Index> noise_candidates;
  for (Eigen::Index j = 0; j < n_pool; ++j) {
    if (!in_family(pool[static_cast<std::size_t>(j)])) noise_candidates.push_back(j);
  }
  std::stable_sort(noise_candidates.begin(), noise_candidates.end(), [&](Eigen::Index a, Eigen::Index b) {
    return alignment.row(a).cwiseAbs().maxCoeff() < alignment.row(b).cwiseAbs().maxCoeff();
  });
  noise_candidates.resize(noise_candidates.size() / 4);
  std::sort(noise_candidates.begin(), noise_candidates.end());  // pool x classes

  std::vector<bool> used(static_cast<std::size_t>(n_pool), false);
  SynthResult out;
  out.kb.modality = "synthetic feature space";
  out.kb.generator_metadata = {{"model", "synthetic"},
                               {"template_version", std::string(kTemplateVersion)},
                               {"seed", std::to_string(spec.seed)}};
  Matrix targets(spec.classes, d);
  for (int c = 0; c < spec.classes; ++c) {
    const std::string category = "condition_" + std::to_string(c);
    out.manifest.categories.push_back(category);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_pool));
    for (Eigen::Index j = 0; j < n_pool; ++j) order[static_cast<std::size_t>(j)] = j;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return alignment(a, c) > alignment(b, c);
    });
    SymptomSet set;
    set.category = category;
    set.modality = out.kb.modality;
    RowVector clean_mean = RowVector::Zero(d);
    for (Eigen::Index j : order) {
      if (static_cast<int>(set.symptoms.size()) == clean_k) break;
      if (used[static_cast<std::size_t>(j)]) continue;
      used[static_cast<std::size_t>(j)] = true;
      set.symptoms.push_back({pool[static_cast<std::size_t>(j)], SymptomStage::kRefined, category});
      clean_mean += unit.row(j);
    }
    clean_mean /= clean_k;
    // The class target keeps only the anchor-aligned part of the clean
    // symptoms, so each phrase also carries idiosyncratic directions that
    // images do not share.
    const double along = (clean_mean - centre).dot(anchors.row(c));
    const RowVector target = centre + along * anchors.row(c);
    targets.row(c) = target / target.norm();
    if (spec.inject_noise_symptom) {
      Eigen::Index j = 0;
      do {
        j = noise_candidates[rng.below(noise_candidates.size())];
      } while (used[static_cast<std::size_t>(j)]);
      used[static_cast<std::size_t>(j)] = true;
      set.symptoms.push_back({pool[static_cast<std::size_t>(j)], SymptomStage::kRefined, category});
      out.noise_symptoms[category] = pool[static_cast<std::size_t>(j)];
    }
    out.kb.entries[category] = std::move(set);
  }
  // Noiseless images must be classified correctly by the zero-shot rule with
  // room to spare.
  Matrix zero_shot(spec.classes, d);
  for (int c = 0; c < spec.classes; ++c) {
    RowVector z = RowVector::Zero(d);
    for (const auto& s : out.kb.entries.at(out.manifest.categories[static_cast<std::size_t>(c)]).symptoms) {
      const RowVector f = encoder.encode_phrase(s.text);
      z += f / f.norm();
    }
    zero_shot.row(c) = z / z.norm();
  }
  const Matrix cos = targets * zero_shot.transpose();
  for (int c = 0; c < spec.classes; ++c) {
    for (int o = 0; o < spec.classes; ++o) {
      if (o == c) continue;
      const double gap = cos(c, c) - cos(c, o);
      if (gap < spec.margin) {
        throw ConstructionError("synthesize: class " + std::to_string(c) + " target beats class " +
                                std::to_string(o) + " by only " + std::to_string(gap) +
                                " cosine (margin " + std::to_string(spec.margin) + ") in dimension " +
                                std::to_string(d));
      }
    }
  }

  std::vector<Eigen::Index> spare;
  for (Eigen::Index j = 0; j < n_pool; ++j) {
    if (!used[static_cast<std::size_t>(j)]) spare.push_back(j);
  }
  std::stable_sort(spare.begin(), spare.end(), [&](Eigen::Index a, Eigen::Index b) {
    return alignment.row(a).cwiseAbs().maxCoeff() < alignment.row(b).cwiseAbs().maxCoeff();
  });
  for (std::size_t i = 0; i < spare.size() && i < static_cast<std::size_t>(spec.symptoms_per_class); ++i) {
    out.uninformative_phrases.push_back(pool[static_cast<std::size_t>(spare[i])]);
  }

  const int total = spec.classes * spec.per_class;
  out.features.rows = Matrix(total, d);
  std::vector<std::string> pool_ids;
  for (int c = 0; c < spec.classes; ++c) {
    std::vector<std::string> class_ids;
    for (int i = 0; i < spec.per_class; ++i) {
      const int row = c * spec.per_class + i;
      char id[32];
      std::snprintf(id, sizeof(id), "s%06d", row);
      RowVector f = targets.row(c);
      for (int k = 0; k < d; ++k) f(k) += spec.noise * rng.normal();
      out.features.rows.row(row) = f;
      out.features.ids.emplace_back(id);
      out.manifest.labels[id] = out.manifest.categories[static_cast<std::size_t>(c)];
      class_ids.emplace_back(id);
    }
    rng.shuffle(class_ids);
    const auto n_test = static_cast<std::size_t>(
        std::floor(spec.test_fraction * static_cast<double>(spec.per_class) + 1e-9));
    out.manifest.splits.test.insert(out.manifest.splits.test.end(), class_ids.begin(),
                                    class_ids.begin() + static_cast<std::ptrdiff_t>(n_test));
    pool_ids.insert(pool_ids.end(), class_ids.begin() + static_cast<std::ptrdiff_t>(n_test), class_ids.end());
  }
  auto [train, val] = SplitTrainVal(pool_ids, spec.train_ratio, spec.seed, &out.manifest.labels);
  out.manifest.splits.train = std::move(train);
  out.manifest.splits.val = std::move(val);
  out.manifest.payload_mode = PayloadMode::kFeatureFile;
  out.manifest.feature_file = "features.bin";
  out.manifest.index_file = "features.idx";
  out.manifest.metadata = {{"generator", "synth"},
                           {"seed", std::to_string(spec.seed)},
                           {"noise", json(spec.noise).dump()},
                           {"margin", json(spec.margin).dump()},
                           {"encoder_digest", HexU64(encoder.parameter_digest())}};
  out.manifest.validate();
  out.kb.validate();
  return out;
}

void WriteSynthetic(const SynthResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SaveFeatureTable(result.features, dir / result.manifest.feature_file, dir / result.manifest.index_file);
  SaveManifest(result.manifest, dir / "manifest.json");
  SaveKb(result.kb, dir / "kb.json");
}

}  // namespace vip
