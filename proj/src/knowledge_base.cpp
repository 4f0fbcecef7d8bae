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

#include "vip/knowledge_base.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <optional>
#include <set>

#include <json.hpp>

#include "vip/error.hpp"
#include "vip/util.hpp"

namespace vip {

using nlohmann::json;

const std::string_view kCoarseTemplate =
    "Q: I am going to use CLIP, a vision-language model to detect {category} in {modality}. "
    "What are useful medical visual features for diagnosing {category}? Please list in bullet "
    "points and explain in plain words that CLIP understands. Avoid using words such as "
    "{category}.";

const std::string_view kRefineTemplate =
    "Q: Please provide visual features regarding color, shape, and texture of this {category} "
    "image, which contains 16 sub-images.";

namespace {

std::string Substitute(std::string_view tmpl, std::string_view placeholder, std::string_view value) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = tmpl.find(placeholder, pos);
    if (hit == std::string_view::npos) break;
    out.append(tmpl.substr(pos, hit - pos));
    out.append(value);
    pos = hit + placeholder.size();
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::string Trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Returns the item text if `line` starts with a recognized list marker.
std::optional<std::string> StripMarker(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  const std::string_view rest = line.substr(i);
  auto after = [&](std::size_t n) -> std::optional<std::string> {
    if (rest.size() > n && !std::isspace(static_cast<unsigned char>(rest[n]))) return std::nullopt;
    return Trim(rest.substr(std::min(n, rest.size())));
  };
  if (rest.starts_with("-") || rest.starts_with("*")) return after(1);
  if (rest.starts_with("\xE2\x80\xA2")) return after(3);
  std::size_t d = 0;
  while (d < rest.size() && std::isdigit(static_cast<unsigned char>(rest[d]))) ++d;
  if (d > 0 && d < rest.size() && rest[d] == '.') return after(d + 1);
  return std::nullopt;
}


}  // namespace

std::vector<std::string> SymptomSet::texts() const {
  std::vector<std::string> out;
  out.reserve(symptoms.size());
  for (const auto& s : symptoms) out.push_back(s.text);
  return out;
}

bool MentionsCategory(std::string_view text, std::string_view category) {
  if (category.empty()) return false;
  return ToLower(text).find(ToLower(category)) != std::string::npos;
}

void SymptomSet::validate() const {
  const std::string field = "entries." + category + ".symptoms";
  if (symptoms.empty()) throw ValidationError(field + ": symptom set is empty (k = 0)", {field});
  std::set<std::string> seen;
  for (std::size_t i = 0; i < symptoms.size(); ++i) {
    const std::string item = field + "[" + std::to_string(i) + "]";
    const std::string norm = NormalizeText(symptoms[i].text);
    if (CollapseWhitespace(symptoms[i].text).empty()) {
      throw ValidationError(item + ": empty symptom text", {item});
    }
    if (!seen.insert(norm).second) {
      throw ValidationError(item + ": duplicate symptom '" + symptoms[i].text + "'", {item});
    }
    if (MentionsCategory(symptoms[i].text, category)) {
      throw ValidationError(item + ": symptom mentions its category name", {item});
    }
  }
}

const SymptomSet& SymptomKnowledgeBase::at(const std::string& category) const {
  const auto it = entries.find(category);
  if (it == entries.end()) throw UnknownCategory(category);
  return it->second;
}

void SymptomKnowledgeBase::validate() const {
  if (entries.empty()) throw ValidationError("knowledge base has no entries", {"entries"});
  for (const auto& [category, set] : entries) {
    if (set.category != category) {
      throw ValidationError("entry key '" + category + "' disagrees with set category",
                            {"entries." + category});
    }
    set.validate();
  }
}

void SymptomKnowledgeBase::validate_coverage(std::span<const std::string> labels) const {
  const std::set<std::string> wanted(labels.begin(), labels.end());
  for (const auto& label : labels) {
    if (!entries.contains(label)) {
      throw ValidationError("knowledge base has no entry for dataset category '" + label + "'",
                            {"entries." + label});
    }
  }
  for (const auto& [category, set] : entries) {
    if (!wanted.contains(category)) {
      throw ValidationError("knowledge base category '" + category + "' is not a dataset label",
                            {"entries." + category});
    }
  }
}

std::string RenderCoarsePrompt(std::string_view category, std::string_view modality) {
  if (category.empty()) throw InvalidArgument("render_coarse_prompt: empty category");
  if (modality.empty()) throw InvalidArgument("render_coarse_prompt: empty modality");
  return Substitute(Substitute(kCoarseTemplate, "{category}", category), "{modality}", modality);
}

std::string RenderRefinePrompt(std::string_view category) {
  if (category.empty()) throw InvalidArgument("render_refine_prompt: empty category");
  return Substitute(kRefineTemplate, "{category}", category);
}

std::vector<VisualSymptom> ParseSymptomList(std::string_view response) {
  std::vector<VisualSymptom> out;
  std::set<std::string> seen;
  std::size_t pos = 0;
  while (pos <= response.size()) {
    std::size_t end = response.find('\n', pos);
    if (end == std::string_view::npos) end = response.size();
    const auto item = StripMarker(response.substr(pos, end - pos));
    pos = end + 1;
    if (!item) continue;
    std::string text = CollapseWhitespace(*item);
    if (text.empty() || NormalizeText(text).empty()) continue;
    if (!seen.insert(NormalizeText(text)).second) continue;
    out.push_back(VisualSymptom{std::move(text), SymptomStage::kCoarse, ""});
  }
  if (out.empty()) throw EmptyParse("no bullet items found in LLM response", std::string(response));
  return out;
}

double WordJaccard(std::string_view a, std::string_view b) {
  const auto wa = WordSet(a);
  const auto wb = WordSet(b);
  if (wa.empty() && wb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& w : wa) common += wb.count(w);
  return static_cast<double>(common) / static_cast<double>(wa.size() + wb.size() - common);
}

SymptomSet RefineSet(std::span<const VisualSymptom> coarse,
                     std::span<const VisualSymptom> refinement, double match_threshold) {
  if (coarse.empty()) throw InvalidArgument("refine_set: empty coarse list");
  if (!(match_threshold >= 0.0 && match_threshold <= 1.0)) {
    throw InvalidArgument("refine_set: match_threshold must lie in [0, 1]");
  }
  SymptomSet out;
  out.category = coarse.front().category;
  for (const auto& item : coarse) {
    bool keep = match_threshold <= 0.0;
    for (const auto& r : refinement) {
      if (keep) break;
      keep = WordJaccard(item.text, r.text) >= match_threshold;
    }
    if (keep) {
      VisualSymptom kept = item;
      kept.stage = SymptomStage::kRefined;
      out.symptoms.push_back(std::move(kept));
    }
  }
  if (out.symptoms.empty()) {
    out.symptoms.assign(coarse.begin(), coarse.end());
    for (auto& s : out.symptoms) s.stage = SymptomStage::kCoarse;
    out.fallback_used = true;
  }
  return out;
}

namespace {

SymptomSet GenerateOne(const std::string& category, std::string_view modality, LlmClient& llm,
                       LlmCache& cache, const GenerateOptions& options) {
  try {
    const LlmExchange coarse_ex =
        cache.fetch(llm, LlmRequest{RenderCoarsePrompt(category, modality), {}}, options.refresh);
    LlmRequest refine_req{RenderRefinePrompt(category), {}};
    if (const auto it = options.grid_images.find(category); it != options.grid_images.end()) {
      refine_req.attachments = it->second;
    }
    const LlmExchange refine_ex = cache.fetch(llm, refine_req, options.refresh);

    auto tag = [&](std::vector<VisualSymptom> items) {
      std::erase_if(items, [&](const VisualSymptom& s) { return MentionsCategory(s.text, category); });
      for (auto& s : items) s.category = category;
      return items;
    };
    const auto coarse = tag(ParseSymptomList(coarse_ex.response));
    if (coarse.empty()) {
      throw EmptyParse("every coarse item for '" + category + "' names the category",
                       coarse_ex.response);
    }
    std::vector<VisualSymptom> refinement = tag(ParseSymptomList(refine_ex.response));
    SymptomSet set = RefineSet(coarse, refinement, options.match_threshold);
    set.modality = std::string(modality);
    set.validate();
    return set;
  } catch (const TransientError& e) {
    throw TransientError("category '" + category + "': " + e.what());
  } catch (const EmptyParse& e) {
    throw EmptyParse("category '" + category + "': " + e.what(), e.raw_response());
  }
}

}  // namespace

SymptomKnowledgeBase GenerateKnowledgeBase(std::span<const std::string> categories,
                                           std::string_view modality, LlmClient& llm,
                                           LlmCache& cache, const GenerateOptions& options) {
  if (categories.empty()) throw InvalidArgument("generate_knowledge_base: no categories");
  if (modality.empty()) throw InvalidArgument("generate_knowledge_base: empty modality");
  SymptomKnowledgeBase kb;
  kb.modality = std::string(modality);
  kb.generator_metadata = {{"model", llm.model_id()},
                           {"template_version", std::string(kTemplateVersion)},
                           {"match_threshold", json(options.match_threshold).dump()}};
  if (options.parallel) {
    std::vector<std::future<SymptomSet>> jobs;
    for (const auto& c : categories) {
      jobs.push_back(std::async(std::launch::async, [&, c] {
        return GenerateOne(c, modality, llm, cache, options);
      }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) kb.entries[categories[i]] = jobs[i].get();
  } else {
    for (const auto& c : categories) kb.entries[c] = GenerateOne(c, modality, llm, cache, options);
  }
  kb.validate();
  return kb;
}

std::string SerializeKb(const SymptomKnowledgeBase& kb) {
  json entries = json::object();
  for (const auto& [category, set] : kb.entries) {
    entries[category] = {{"symptoms", set.texts()}, {"fallback_used", set.fallback_used}};
  }
  const json j = {{"modality", kb.modality},
                  {"generator_metadata", kb.generator_metadata},
                  {"entries", entries}};
  return j.dump(2) + "\n";
}

SymptomKnowledgeBase ParseKb(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("knowledge base is not valid JSON: ") + e.what(), {"$"});
  }
  std::vector<std::string> bad;
  if (!j.is_object()) throw ValidationError("knowledge base must be a JSON object", {"$"});
  for (const auto& [key, _] : j.items()) {
    if (key != "modality" && key != "generator_metadata" && key != "entries") bad.push_back(key);
  }
  if (!j.contains("modality") || !j["modality"].is_string()) bad.push_back("modality");
  if (!j.contains("generator_metadata") || !j["generator_metadata"].is_object()) {
    bad.push_back("generator_metadata");
  } else {
    for (const auto& [key, value] : j["generator_metadata"].items()) {
      if (!value.is_string()) bad.push_back("generator_metadata." + key);
    }
  }
  if (!j.contains("entries") || !j["entries"].is_object()) {
    bad.push_back("entries");
  } else {
    for (const auto& [category, entry] : j["entries"].items()) {
      const std::string base = "entries." + category;
      if (!entry.is_object()) {
        bad.push_back(base);
        continue;
      }
      for (const auto& [key, _] : entry.items()) {
        if (key != "symptoms" && key != "fallback_used") bad.push_back(base + "." + key);
      }
      if (!entry.contains("fallback_used") || !entry["fallback_used"].is_boolean()) {
        bad.push_back(base + ".fallback_used");
      }
      if (!entry.contains("symptoms") || !entry["symptoms"].is_array() || entry["symptoms"].empty()) {
        bad.push_back(base + ".symptoms");
      } else {
        for (std::size_t i = 0; i < entry["symptoms"].size(); ++i) {
          if (!entry["symptoms"][i].is_string()) {
            bad.push_back(base + ".symptoms[" + std::to_string(i) + "]");
          }
        }
      }
    }
  }
  if (!bad.empty()) {
    std::string msg = "knowledge base schema violation:";
    for (const auto& b : bad) msg += " " + b;
    throw ValidationError(msg, bad);
  }

  SymptomKnowledgeBase kb;
  kb.modality = j["modality"].get<std::string>();
  kb.generator_metadata = j["generator_metadata"].get<std::map<std::string, std::string>>();
  for (const auto& [category, entry] : j["entries"].items()) {
    SymptomSet set;
    set.category = category;
    set.modality = kb.modality;
    set.fallback_used = entry["fallback_used"].get<bool>();
    // Refinement either keeps matched items (refined) or falls back wholesale (coarse).
    const SymptomStage stage = set.fallback_used ? SymptomStage::kCoarse : SymptomStage::kRefined;
    for (const auto& s : entry["symptoms"]) {
      set.symptoms.push_back(VisualSymptom{s.get<std::string>(), stage, category});
    }
    kb.entries[category] = std::move(set);
  }
  kb.validate();
  return kb;
}

void SaveKb(const SymptomKnowledgeBase& kb, const std::filesystem::path& path) {
  kb.validate();
  WriteFileAtomic(path, SerializeKb(kb));
}

SymptomKnowledgeBase LoadKb(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw NotFound("knowledge base file: " + path.string());
  return ParseKb(ReadFile(path));
}

SymptomKnowledgeBase LoadKb(const std::filesystem::path& path, std::span<const std::string> labels) {
  SymptomKnowledgeBase kb = LoadKb(path);
  kb.validate_coverage(labels);
  return kb;
}

}  // namespace vip
