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

#include "vip/config.hpp"

#include <json.hpp>

#include "vip/error.hpp"
#include "vip/util.hpp"

namespace vip {

using nlohmann::json;

namespace {

std::string Join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

const char* TypeName(const json& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_object()) return "table";
  if (v.is_array()) return "array";
  return "null";
}

void CheckType(const json& expected, const json& got, const std::string& path) {
  const bool want_int = expected.is_number_integer() || expected.is_number_unsigned();
  bool ok = false;
  if (expected.is_boolean()) ok = got.is_boolean();
  else if (want_int) ok = got.is_number_integer() || got.is_number_unsigned();
  else if (expected.is_number()) ok = got.is_number();
  else if (expected.is_string()) ok = got.is_string();
  if (!ok) {
    throw ConfigError(path, std::string("expected ") + TypeName(expected) + ", got " + TypeName(got));
  }
  if (expected.is_number_unsigned() && got.is_number_integer() && got.get<std::int64_t>() < 0) {
    throw ConfigError(path, "must be non-negative");
  }
}

// Overlays `src` onto `dst`, where `dst` holds the full default document.
void Merge(json& dst, const json& src, const std::string& prefix) {
  if (!src.is_object()) {
    throw ConfigError(prefix.empty() ? "<root>" : prefix, std::string("expected table, got ") + TypeName(src));
  }
  for (const auto& [key, value] : src.items()) {
    const std::string path = Join(prefix, key);
    if (!dst.contains(key)) throw ConfigError(path, "unknown key");
    json& slot = dst[key];
    if (slot.is_object()) {
      Merge(slot, value, path);
    } else {
      CheckType(slot, value, path);
      slot = value;
    }
  }
}

json ToJson(const ExperimentConfig& c) {
  const EncoderConfig& e = c.encoder;
  const ClassifierConfig& k = c.classifier;
  const SynthSpec& s = c.synth;
  return json{
      {"seed", c.seed},
      {"encoder",
       {{"dim", e.dim},
        {"vocab_size", e.vocab_size},
        {"context_limit", e.context_limit},
        {"depth", e.depth},
        {"heads", e.heads},
        {"ffn_width", e.ffn_width},
        {"position_scale", e.position_scale},
        {"image_mode", e.image_mode == ImageMode::kToy ? "toy" : "passthrough"},
        {"image_input_dim", e.image_input_dim},
        {"seed", e.seed}}},
      {"classifier",
       {{"temperature", k.temperature},
        {"learnable_temperature", k.learnable_temperature},
        {"normalize_features", k.normalize_features},
        {"learning_rate", k.learning_rate},
        {"epochs", k.epochs},
        {"momentum", k.momentum},
        {"cosine_decay", k.cosine_decay},
        {"batch_size", k.batch_size},
        {"weight_decay", k.weight_decay},
        {"context_length", k.context_length},
        {"merge_mode", MergeModeName(k.merge_mode)},
        {"zero_shot_normalize", k.zero_shot_normalize},
        {"init",
         {{"context_std", k.init.context_std},
          {"grouping_std", k.init.grouping_std},
          {"projection_noise_std", k.init.projection_noise_std}}}}},
      {"synth",
       {{"classes", s.classes},
        {"per_class", s.per_class},
        {"symptoms_per_class", s.symptoms_per_class},
        {"inject_noise_symptom", s.inject_noise_symptom},
        {"margin", s.margin},
        {"noise", s.noise},
        {"test_fraction", s.test_fraction},
        {"train_ratio", s.train_ratio}}},
      {"kb",
       {{"path", c.kb_path},
        {"match_threshold", c.match_threshold},
        {"llm_model", c.llm_model},
        {"llm_base_url", c.llm_base_url},
        {"cache_dir", c.llm_cache_dir}}},
      {"data", {{"path", c.data_path}}},
      {"output", {{"dir", c.output_dir}}},
  };
}

ExperimentConfig FromJson(const json& j) {
  ExperimentConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  const json& e = j.at("encoder");
  c.encoder.dim = e.at("dim").get<int>();
  c.encoder.vocab_size = e.at("vocab_size").get<int>();
  c.encoder.context_limit = e.at("context_limit").get<int>();
  c.encoder.depth = e.at("depth").get<int>();
  c.encoder.heads = e.at("heads").get<int>();
  c.encoder.ffn_width = e.at("ffn_width").get<int>();
  c.encoder.position_scale = e.at("position_scale").get<double>();
  const auto mode = e.at("image_mode").get<std::string>();
  if (mode == "toy") c.encoder.image_mode = ImageMode::kToy;
  else if (mode == "passthrough") c.encoder.image_mode = ImageMode::kPassthrough;
  else throw ConfigError("encoder.image_mode", "expected 'passthrough' or 'toy', got '" + mode + "'");
  c.encoder.image_input_dim = e.at("image_input_dim").get<int>();
  c.encoder.seed = e.at("seed").get<std::uint64_t>();

  const json& k = j.at("classifier");
  c.classifier.temperature = k.at("temperature").get<double>();
  c.classifier.learnable_temperature = k.at("learnable_temperature").get<bool>();
  c.classifier.normalize_features = k.at("normalize_features").get<bool>();
  c.classifier.learning_rate = k.at("learning_rate").get<double>();
  c.classifier.epochs = k.at("epochs").get<int>();
  c.classifier.momentum = k.at("momentum").get<double>();
  c.classifier.cosine_decay = k.at("cosine_decay").get<bool>();
  c.classifier.batch_size = k.at("batch_size").get<int>();
  c.classifier.weight_decay = k.at("weight_decay").get<double>();
  c.classifier.context_length = k.at("context_length").get<int>();
  try {
    c.classifier.merge_mode = ParseMergeMode(k.at("merge_mode").get<std::string>());
  } catch (const InvalidArgument& err) {
    throw ConfigError("classifier.merge_mode", err.what());
  }
  c.classifier.zero_shot_normalize = k.at("zero_shot_normalize").get<bool>();
  const json& init = k.at("init");
  c.classifier.init.context_std = init.at("context_std").get<double>();
  c.classifier.init.grouping_std = init.at("grouping_std").get<double>();
  c.classifier.init.projection_noise_std = init.at("projection_noise_std").get<double>();

  const json& s = j.at("synth");
  c.synth.classes = s.at("classes").get<int>();
  c.synth.per_class = s.at("per_class").get<int>();
  c.synth.symptoms_per_class = s.at("symptoms_per_class").get<int>();
  c.synth.inject_noise_symptom = s.at("inject_noise_symptom").get<bool>();
  c.synth.margin = s.at("margin").get<double>();
  c.synth.noise = s.at("noise").get<double>();
  c.synth.test_fraction = s.at("test_fraction").get<double>();
  c.synth.train_ratio = s.at("train_ratio").get<double>();

  const json& kb = j.at("kb");
  c.kb_path = kb.at("path").get<std::string>();
  c.match_threshold = kb.at("match_threshold").get<double>();
  c.llm_model = kb.at("llm_model").get<std::string>();
  c.llm_base_url = kb.at("llm_base_url").get<std::string>();
  c.llm_cache_dir = kb.at("cache_dir").get<std::string>();
  c.data_path = j.at("data").at("path").get<std::string>();
  c.output_dir = j.at("output").at("dir").get<std::string>();
  c.propagate_seed();
  return c;
}

void ApplyOverride(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment, "override must look like key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  // Build a nested single-key document and merge it so that overrides get the
  // same unknown-key and type checks as file values.
  json patch = value;
  std::size_t end = path.size();
  while (true) {
    const auto dot = path.rfind('.', end - 1);
    const std::size_t start = dot == std::string::npos ? 0 : dot + 1;
    patch = json{{path.substr(start, end - start), patch}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  Merge(doc, patch, "");
}

ExperimentConfig Resolve(json doc) {
  ExperimentConfig cfg = FromJson(doc);
  cfg.validate();
  return cfg;
}

}  // namespace

void ExperimentConfig::propagate_seed() {
  classifier.seed = seed;
  synth.seed = seed;
}

void ExperimentConfig::validate() const {
  encoder.validate();
  classifier.validate();
  if (classifier.context_length >= encoder.context_limit) {
    throw ConfigError("classifier.context_length", "must be smaller than encoder.context_limit");
  }
  if (!(match_threshold >= 0.0 && match_threshold <= 1.0)) {
    throw ConfigError("kb.match_threshold", "must lie in [0, 1]");
  }
  if (synth.classes < 2) throw ConfigError("synth.classes", "must be at least 2");
  if (synth.per_class < 4) throw ConfigError("synth.per_class", "must be at least 4");
  if (synth.symptoms_per_class < 1) throw ConfigError("synth.symptoms_per_class", "must be at least 1");
  if (synth.inject_noise_symptom && synth.symptoms_per_class < 2) {
    throw ConfigError("synth.symptoms_per_class", "must be at least 2 with a noise symptom");
  }
  if (synth.noise < 0.0) throw ConfigError("synth.noise", "must be non-negative");
  if (!(synth.test_fraction > 0.0 && synth.test_fraction < 1.0)) {
    throw ConfigError("synth.test_fraction", "must lie in (0, 1)");
  }
  if (!(synth.train_ratio > 0.0 && synth.train_ratio < 1.0)) {
    throw ConfigError("synth.train_ratio", "must lie in (0, 1)");
  }
  if (output_dir.empty()) throw ConfigError("output.dir", "must not be empty");
}

std::string ConfigToJson(const ExperimentConfig& cfg) { return ToJson(cfg).dump(2) + "\n"; }

ExperimentConfig ParseConfig(std::string_view text) { return ParseConfig(text, {}); }

ExperimentConfig ParseConfig(std::string_view text, const std::vector<std::string>& overrides) {
  json doc = ToJson(ExperimentConfig{});
  const bool blank = text.find_first_not_of(" \t\r\n") == std::string_view::npos;
  if (!blank) {
    json user;
    try {
      user = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("<root>", std::string("not a valid config document: ") + e.what());
    }
    Merge(doc, user, "");
  }
  for (const auto& o : overrides) ApplyOverride(doc, o);
  return Resolve(std::move(doc));
}

ExperimentConfig LoadConfig(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  return ParseConfig(ReadFile(path), overrides);
}

std::string ConfigDigest(const ExperimentConfig& cfg) {
  json doc = ToJson(cfg);
  doc["kb"].erase("path");
  doc["kb"].erase("cache_dir");
  doc["kb"].erase("llm_base_url");
  doc.erase("data");
  doc.erase("output");
  // nlohmann::json objects keep keys sorted, so the dump is canonical.
  return Sha256Hex(doc.dump());
}

}  // namespace vip
