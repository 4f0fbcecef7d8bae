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

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace vip {

struct LlmRequest {
  std::string prompt;
  /// Optional images sent alongside the prompt (vision-capable models only).
  std::vector<std::filesystem::path> attachments;
};

/// Pluggable chat-completion backend. Implementations raise TransientError on
/// transport failures.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string model_id() const = 0;
  virtual std::string complete(const LlmRequest& request) = 0;
};

/// Test double answering through a callback; counts calls.
class MockLlmClient final : public LlmClient {
 public:
  using Responder = std::function<std::string(const LlmRequest&)>;

  MockLlmClient(std::string model, Responder responder)
      : model_(std::move(model)), responder_(std::move(responder)) {}

  std::string model_id() const override { return model_; }
  std::string complete(const LlmRequest& request) override;
  int calls() const { return calls_.load(); }

 private:
  std::string model_;
  Responder responder_;
  std::atomic<int> calls_{0};
};

/// Replays recorded exchanges (files in the LlmCache record format) matched
/// by prompt text. Unknown prompts raise TransientError.
class FixtureLlmClient final : public LlmClient {
 public:
  explicit FixtureLlmClient(const std::filesystem::path& dir, std::string model = "");

  std::string model_id() const override { return model_; }
  std::string complete(const LlmRequest& request) override;
  int calls() const { return calls_.load(); }
  std::size_t size() const { return responses_.size(); }

 private:
  std::string model_;
  std::map<std::string, std::string> responses_;
  std::atomic<int> calls_{0};
};

/// OpenAI-compatible chat-completions client. The credential is read from the
/// VIP_LLM_API_KEY environment variable at call time and never persisted.
class HttpLlmClient final : public LlmClient {
 public:
  HttpLlmClient(std::string model, std::string base_url = "https://api.openai.com");

  std::string model_id() const override { return model_; }
  std::string complete(const LlmRequest& request) override;

  /// Request body as sent on the wire (exposed for tests).
  std::string request_body(const LlmRequest& request) const;

 private:
  std::string model_;
  std::string base_url_;
};

struct LlmExchange {
  std::string model;
  std::string prompt;
  std::string response;
  std::string cache_key;
};

std::string LlmCacheKey(const std::string& model, const LlmRequest& request);

/// Content-addressed exchange store: one pretty-printed JSON record per key
/// under `dir/<key>.json`. Writes to the same key are serialized.
class LlmCache {
 public:
  explicit LlmCache(std::filesystem::path dir);

  std::optional<LlmExchange> get(const std::string& key) const;
  void put(const LlmExchange& exchange);
  const std::filesystem::path& dir() const { return dir_; }

  /// Returns the cached response, or calls the client and records the result.
  /// `refresh` forces a call and overwrites the record.
  LlmExchange fetch(LlmClient& client, const LlmRequest& request, bool refresh = false);

 private:
  std::mutex& key_mutex(const std::string& key);

  std::filesystem::path dir_;
  std::mutex table_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> key_mutexes_;
};

std::string SerializeExchange(const LlmExchange& exchange);

}  // namespace vip
