// Copyright 2026 The Decontext Authors.
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

// Chat-completion backend abstraction: prompt rendering, answer parsing, and
// the LIVE / MOCK / CACHED backends behind a single Gateway.

#ifndef DECONTEXT_GATEWAY_HPP_
#define DECONTEXT_GATEWAY_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "decontext/text.hpp"

namespace decontext {

struct Message {
  std::string role;  // "system", "user" or "assistant"
  std::string content;
  friend bool operator==(const Message&, const Message&) = default;
};

// What a prompt is for. Drives mock matching and tracing; never rendered.
struct PromptTag {
  std::string node;      // edit type name, empty for dataset prompts
  std::string substep;   // bracket | replace | cutoff | clean | rating
  std::string sentence;  // the substep's input text
  int attempt = 0;       // 0-based retry index
};

struct PromptSpec {
  std::string system_instruction;
  // Already-rendered (input, output) demonstration pairs.
  std::vector<std::pair<std::string, std::string>> examples;
  std::string final_input;
  PromptTag tag;
};

// Context sentences on one line. Labelled sentences render as "A: text".
std::string render_context(const Context& context);

// "Context: ...\nSentence: ..." block used by every context-bearing prompt.
std::string render_contexted_input(const Context& context,
                                   std::string_view sentence);

// One system message, alternating user/assistant examples, then the final
// user message. Byte-stable for identical specs.
std::vector<Message> render_prompt(const PromptSpec& spec);

struct GenerationConfig {
  double temperature = 1.0;
  double top_p = 1.0;
  double frequency_penalty = 0.0;
  double presence_penalty = 0.0;
  int max_retries_transport = 3;
  std::string model_name = "gpt-3.5-turbo";
};

std::string sha256_hex(std::string_view data);

// SHA-256 over (model, sampling parameters, messages). Retries (attempt > 0)
// get distinct keys so a warm cache replays each attempt separately.
std::string cache_key(const std::vector<Message>& messages,
                      const GenerationConfig& cfg, int attempt = 0);

// First alphabetic token must be "true" or "false" (any case).
// Throws UnparseableBoolean.
bool parse_boolean(std::string_view response);

// First integer in the response, which must lie in [1, 5].
// Throws UnparseableRating.
int parse_rating(std::string_view response);

enum class BackendKind { kLive, kMock, kCached };

std::string_view to_string(BackendKind kind);

struct HttpRequest {
  std::string url;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Wire access. Implementations throw TransportError when no response was
// received at all.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

std::shared_ptr<Transport> make_https_transport(
    std::chrono::seconds timeout = std::chrono::seconds(120));

struct BackendStats {
  std::uint64_t network_requests = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendKind kind() const = 0;
  virtual std::string complete(const PromptSpec& prompt,
                               const GenerationConfig& cfg) = 0;
  virtual BackendStats stats() const { return {}; }
};

// One scripted answer. Unset match fields are wildcards.
struct MockRule {
  std::optional<std::string> key_hex;
  std::optional<std::string> node;
  std::optional<std::string> substep;
  std::optional<std::string> sentence;
  // Indexed by attempt; the last entry repeats.
  std::vector<std::string> responses;
  // Answer with the prompt's input sentence instead of a fixed response.
  bool echo = false;
};

class MockScript {
 public:
  // JSON-lines: {"match": {...}, "response": s | "responses": [s...] |
  // "echo": true}. Throws ParseError / SchemaError.
  static MockScript Parse(std::istream& in);
  static MockScript Load(const std::filesystem::path& path);

  void add(MockRule rule) { rules_.push_back(std::move(rule)); }
  std::size_t size() const { return rules_.size(); }

  // Exact digest first, then the structured rule matching the most fields.
  // Ties go to the earliest rule.
  const MockRule* find(const PromptTag& tag, const std::string& key_hex) const;

 private:
  std::vector<MockRule> rules_;
};

// Scripted answers only. The transport is held but never used.
class MockBackend final : public Backend {
 public:
  MockBackend(MockScript script, std::shared_ptr<Transport> transport);

  BackendKind kind() const override { return BackendKind::kMock; }
  // Throws MockMiss when no rule matches.
  std::string complete(const PromptSpec& prompt,
                       const GenerationConfig& cfg) override;

 private:
  const MockScript script_;
  std::shared_ptr<Transport> transport_;
};

struct LiveSettings {
  std::string url;
  std::string api_key;
  std::chrono::milliseconds base_backoff{500};
  std::chrono::milliseconds max_backoff{8000};
  // Replaceable for tests.
  std::function<void(std::chrono::milliseconds)> sleep;

  // DECONTEXT_API_URL / DECONTEXT_API_KEY. Missing key throws AuthError.
  static LiveSettings FromEnvironment();
};

std::string build_request_body(const std::vector<Message>& messages,
                               const GenerationConfig& cfg);
// Content of the first choice. Throws TransportError on a malformed body.
std::string extract_response_text(std::string_view body);

class LiveBackend final : public Backend {
 public:
  LiveBackend(LiveSettings settings, std::shared_ptr<Transport> transport);

  BackendKind kind() const override { return BackendKind::kLive; }
  // Retries TransportError, HTTP 408/429/5xx with exponential backoff up to
  // cfg.max_retries_transport times. 401/403 throw AuthError.
  std::string complete(const PromptSpec& prompt,
                       const GenerationConfig& cfg) override;
  BackendStats stats() const override;

 private:
  LiveSettings settings_;
  std::shared_ptr<Transport> transport_;
  std::atomic<std::uint64_t> requests_{0};
};

// Append-only JSON-lines store of {key_hex, model, response, created_at}.
class ResponseCache {
 public:
  // Loads existing records; creates the file's directory when needed.
  explicit ResponseCache(std::filesystem::path path);

  std::optional<std::string> lookup(const std::string& key_hex) const;
  void store(const std::string& key_hex, const std::string& model,
             const std::string& response);
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> entries_;
};

class CachedBackend final : public Backend {
 public:
  CachedBackend(std::unique_ptr<Backend> inner,
                std::shared_ptr<ResponseCache> cache);

  BackendKind kind() const override { return BackendKind::kCached; }
  std::string complete(const PromptSpec& prompt,
                       const GenerationConfig& cfg) override;
  BackendStats stats() const override;

 private:
  std::unique_ptr<Backend> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

struct GatewayCounters {
  std::uint64_t calls = 0;
  std::uint64_t network_requests = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
};

// Entry point for every LLM call. Safe for concurrent use.
class Gateway {
 public:
  explicit Gateway(std::unique_ptr<Backend> backend);

  std::string complete(const PromptSpec& prompt, const GenerationConfig& cfg);
  BackendKind kind() const { return backend_->kind(); }
  GatewayCounters counters() const;

 private:
  std::unique_ptr<Backend> backend_;
  std::atomic<std::uint64_t> calls_{0};
};

}  // namespace decontext

#endif  // DECONTEXT_GATEWAY_HPP_
