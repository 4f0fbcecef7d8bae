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

#include "vip/llm_client.hpp"

#include <algorithm>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "vip/error.hpp"
#include "vip/util.hpp"

namespace vip {

using nlohmann::json;

namespace {

LlmExchange ParseExchange(const std::string& text, const std::filesystem::path& origin) {
  try {
    const json j = json::parse(text);
    LlmExchange ex;
    ex.model = j.at("model").get<std::string>();
    ex.prompt = j.at("prompt").get<std::string>();
    ex.response = j.at("response").get<std::string>();
    ex.cache_key = j.value("cache_key", "");
    return ex;
  } catch (const json::exception& e) {
    throw ValidationError("malformed exchange record " + origin.string() + ": " + e.what(),
                          {origin.string()});
  }
}

std::string Base64(std::string_view bytes) {
  static constexpr char kTable[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto n = (static_cast<unsigned char>(bytes[i]) << 16) |
                   (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                   static_cast<unsigned char>(bytes[i + 2]);
    out += kTable[(n >> 18) & 63];
    out += kTable[(n >> 12) & 63];
    out += kTable[(n >> 6) & 63];
    out += kTable[n & 63];
  }
  if (i < bytes.size()) {
    unsigned n = static_cast<unsigned char>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) n |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kTable[(n >> 18) & 63];
    out += kTable[(n >> 12) & 63];
    out += (i + 1 < bytes.size()) ? kTable[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

}  // namespace

std::string MockLlmClient::complete(const LlmRequest& request) {
  ++calls_;
  return responder_(request);
}

FixtureLlmClient::FixtureLlmClient(const std::filesystem::path& dir, std::string model)
    : model_(std::move(model)) {
  if (!std::filesystem::is_directory(dir)) throw NotFound("fixture directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    LlmExchange ex = ParseExchange(ReadFile(path), path);
    if (model_.empty()) model_ = ex.model;
    responses_[ex.prompt] = ex.response;
  }
}

std::string FixtureLlmClient::complete(const LlmRequest& request) {
  ++calls_;
  const auto it = responses_.find(request.prompt);
  if (it == responses_.end()) throw TransientError("no recorded response for prompt");
  return it->second;
}

HttpLlmClient::HttpLlmClient(std::string model, std::string base_url)
    : model_(std::move(model)), base_url_(std::move(base_url)) {}

std::string HttpLlmClient::request_body(const LlmRequest& request) const {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  for (const auto& image : request.attachments) {
    const std::string ext = ToLower(image.extension().string());
    const std::string mime = (ext == ".png") ? "image/png" : "image/jpeg";
    content.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:" + mime + ";base64," + Base64(ReadFile(image))}}}});
  }
  json body = {{"model", model_},
               {"temperature", 0},
               {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
  return body.dump();
}

std::string HttpLlmClient::complete(const LlmRequest& request) {
  const char* key = std::getenv("VIP_LLM_API_KEY");
  if (key == nullptr || *key == '\0') {
    throw TransientError("VIP_LLM_API_KEY is not set; cannot reach " + base_url_);
  }
  httplib::Client cli(base_url_);
  cli.set_read_timeout(120, 0);
  const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
  const auto res = cli.Post("/v1/chat/completions", headers, request_body(request),
                            "application/json");
  if (!res) {
    throw TransientError("LLM transport failure: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransientError("LLM endpoint returned HTTP " + std::to_string(res->status));
  }
  try {
    const json j = json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransientError(std::string("unexpected LLM response body: ") + e.what());
  }
}

std::string LlmCacheKey(const std::string& model, const LlmRequest& request) {
  std::string material = model;
  material.push_back('\0');
  material += request.prompt;
  for (const auto& image : request.attachments) {
    material.push_back('\0');
    material += image.filename().string();
  }
  return Sha256Hex(material);
}

std::string SerializeExchange(const LlmExchange& exchange) {
  const json j = {{"cache_key", exchange.cache_key},
                  {"model", exchange.model},
                  {"prompt", exchange.prompt},
                  {"response", exchange.response}};
  return j.dump(2) + "\n";
}

LlmCache::LlmCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::mutex& LlmCache::key_mutex(const std::string& key) {
  std::lock_guard lock(table_mutex_);
  auto& slot = key_mutexes_[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::optional<LlmExchange> LlmCache::get(const std::string& key) const {
  const auto path = dir_ / (key + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  return ParseExchange(ReadFile(path), path);
}

void LlmCache::put(const LlmExchange& exchange) {
  std::lock_guard lock(key_mutex(exchange.cache_key));
  WriteFileAtomic(dir_ / (exchange.cache_key + ".json"), SerializeExchange(exchange));
}

LlmExchange LlmCache::fetch(LlmClient& client, const LlmRequest& request, bool refresh) {
  const std::string key = LlmCacheKey(client.model_id(), request);
  std::lock_guard lock(key_mutex(key));
  if (!refresh) {
    if (auto hit = get(key)) return *hit;
  }
  LlmExchange ex{client.model_id(), request.prompt, client.complete(request), key};
  WriteFileAtomic(dir_ / (key + ".json"), SerializeExchange(ex));
  return ex;
}

}  // namespace vip
