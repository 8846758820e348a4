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

#include "decontext/gateway.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "decontext/errors.hpp"

namespace decontext {

using nlohmann::json;

std::string render_context(const Context& context) {
  std::vector<std::string> parts;
  parts.reserve(context.sentences.size());
  for (std::size_t i = 0; i < context.sentences.size(); ++i) {
    const bool labelled = i < context.speaker_labels.size() &&
                          !context.speaker_labels[i].empty();
    parts.push_back(labelled
                        ? context.speaker_labels[i] + ": " + context.sentences[i]
                        : context.sentences[i]);
  }
  return join(parts, " ");
}

std::string render_contexted_input(const Context& context,
                                   std::string_view sentence) {
  std::string out = "Context:";
  if (!context.empty()) out += " " + render_context(context);
  out += "\nSentence: ";
  out += sentence;
  return out;
}

std::vector<Message> render_prompt(const PromptSpec& spec) {
  std::vector<Message> messages;
  messages.reserve(2 + 2 * spec.examples.size());
  messages.push_back({"system", spec.system_instruction});
  for (const auto& [input, output] : spec.examples) {
    messages.push_back({"user", input});
    messages.push_back({"assistant", output});
  }
  messages.push_back({"user", spec.final_input});
  return messages;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  std::ostringstream hex;
  hex << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::setw(2) << static_cast<int>(digest[i]);
  }
  return hex.str();
}

namespace {

json messages_json(const std::vector<Message>& messages) {
  json arr = json::array();
  for (const auto& m : messages) {
    arr.push_back({{"role", m.role}, {"content", m.content}});
  }
  return arr;
}

}  // namespace

std::string cache_key(const std::vector<Message>& messages,
                      const GenerationConfig& cfg, int attempt) {
  json material = {
      {"model", cfg.model_name},
      {"temperature", cfg.temperature},
      {"top_p", cfg.top_p},
      {"frequency_penalty", cfg.frequency_penalty},
      {"presence_penalty", cfg.presence_penalty},
      {"messages", messages_json(messages)},
  };
  if (attempt > 0) material["attempt"] = attempt;
  return sha256_hex(material.dump());
}

bool parse_boolean(std::string_view response) {
  std::size_t i = 0;
  while (i < response.size() &&
         !std::isalpha(static_cast<unsigned char>(response[i]))) {
    ++i;
  }
  std::string word;
  while (i < response.size() &&
         std::isalpha(static_cast<unsigned char>(response[i]))) {
    word.push_back(static_cast<char>(
        std::tolower(static_cast<unsigned char>(response[i]))));
    ++i;
  }
  if (word == "true") return true;
  if (word == "false") return false;
  throw UnparseableBoolean("no leading true/false in: " +
                           std::string(response));
}

int parse_rating(std::string_view response) {
  auto digit = [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) != 0;
  };
  auto it = std::find_if(response.begin(), response.end(), digit);
  if (it == response.end()) {
    throw UnparseableRating("no integer in: " + std::string(response));
  }
  const bool negative = it != response.begin() && *(it - 1) == '-';
  auto end = std::find_if_not(it, response.end(), digit);
  std::string digits(it, end);
  if (negative || digits.size() > 1 || digits[0] < '1' || digits[0] > '5') {
    throw UnparseableRating("rating out of range in: " +
                            std::string(response));
  }
  return digits[0] - '0';
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kLive:
      return "live";
    case BackendKind::kMock:
      return "mock";
    case BackendKind::kCached:
      return "cached";
  }
  return "?";
}

// --- mock -------------------------------------------------------------------

namespace {

std::optional<std::string> optional_string(const json& obj, const char* key,
                                           std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw SchemaError(std::string("field '") + key + "' must be a string",
                      line);
  }
  return it->get<std::string>();
}

}  // namespace

MockScript MockScript::Parse(std::istream& in) {
  MockScript script;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!rec.is_object()) throw SchemaError("record must be an object", line_no);
    MockRule rule;
    if (auto m = rec.find("match"); m != rec.end()) {
      if (!m->is_object()) throw SchemaError("'match' must be an object", line_no);
      rule.key_hex = optional_string(*m, "key_hex", line_no);
      rule.node = optional_string(*m, "node", line_no);
      rule.substep = optional_string(*m, "substep", line_no);
      rule.sentence = optional_string(*m, "sentence", line_no);
    }
    if (auto r = rec.find("response"); r != rec.end()) {
      if (!r->is_string()) throw SchemaError("'response' must be a string", line_no);
      rule.responses.push_back(r->get<std::string>());
    }
    if (auto r = rec.find("responses"); r != rec.end()) {
      if (!r->is_array()) throw SchemaError("'responses' must be an array", line_no);
      for (const auto& v : *r) {
        if (!v.is_string()) throw SchemaError("responses must be strings", line_no);
        rule.responses.push_back(v.get<std::string>());
      }
    }
    rule.echo = rec.value("echo", false);
    if (rule.responses.empty() && !rule.echo) {
      throw SchemaError("record needs 'response', 'responses' or 'echo'",
                        line_no);
    }
    script.add(std::move(rule));
  }
  return script;
}

MockScript MockScript::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mock script " + path.string(), 0);
  return Parse(in);
}

const MockRule* MockScript::find(const PromptTag& tag,
                                 const std::string& key_hex) const {
  for (const auto& rule : rules_) {
    if (rule.key_hex && *rule.key_hex == key_hex) return &rule;
  }
  const MockRule* best = nullptr;
  int best_score = -1;
  const std::string sentence = normalize_whitespace(tag.sentence);
  for (const auto& rule : rules_) {
    if (rule.key_hex) continue;
    int score = 0;
    if (rule.node) {
      if (*rule.node != tag.node) continue;
      ++score;
    }
    if (rule.substep) {
      if (*rule.substep != tag.substep) continue;
      ++score;
    }
    if (rule.sentence) {
      if (normalize_whitespace(*rule.sentence) != sentence) continue;
      ++score;
    }
    if (score > best_score) {
      best = &rule;
      best_score = score;
    }
  }
  return best;
}

MockBackend::MockBackend(MockScript script, std::shared_ptr<Transport> transport)
    : script_(std::move(script)), transport_(std::move(transport)) {}

std::string MockBackend::complete(const PromptSpec& prompt,
                                  const GenerationConfig& cfg) {
  const std::string key =
      cache_key(render_prompt(prompt), cfg, prompt.tag.attempt);
  const MockRule* rule = script_.find(prompt.tag, key);
  if (rule == nullptr) {
    throw MockMiss("no scripted response for node=" + prompt.tag.node +
                   " substep=" + prompt.tag.substep + " sentence=\"" +
                   prompt.tag.sentence + "\" key=" + key);
  }
  if (rule->echo) return prompt.tag.sentence;
  const auto idx = std::min<std::size_t>(
      static_cast<std::size_t>(std::max(prompt.tag.attempt, 0)),
      rule->responses.size() - 1);
  return rule->responses[idx];
}

// --- live -------------------------------------------------------------------

LiveSettings LiveSettings::FromEnvironment() {
  LiveSettings s;
  const char* url = std::getenv("DECONTEXT_API_URL");
  s.url = url && *url ? url : "https://api.openai.com/v1/chat/completions";
  const char* key = std::getenv("DECONTEXT_API_KEY");
  if (!key || !*key) throw AuthError("DECONTEXT_API_KEY is not set");
  s.api_key = key;
  return s;
}

std::string build_request_body(const std::vector<Message>& messages,
                               const GenerationConfig& cfg) {
  json body = {
      {"model", cfg.model_name},
      {"messages", messages_json(messages)},
      {"temperature", cfg.temperature},
      {"top_p", cfg.top_p},
      {"frequency_penalty", cfg.frequency_penalty},
      {"presence_penalty", cfg.presence_penalty},
  };
  return body.dump();
}

std::string extract_response_text(std::string_view body) {
  try {
    const json doc = json::parse(body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed completion response: ") +
                         e.what());
  }
}

LiveBackend::LiveBackend(LiveSettings settings,
                         std::shared_ptr<Transport> transport)
    : settings_(std::move(settings)), transport_(std::move(transport)) {
  if (!transport_) throw Error("live backend needs a transport");
  if (!settings_.sleep) {
    settings_.sleep = [](std::chrono::milliseconds d) {
      std::this_thread::sleep_for(d);
    };
  }
}

std::string LiveBackend::complete(const PromptSpec& prompt,
                                  const GenerationConfig& cfg) {
  HttpRequest request{
      settings_.url,
      build_request_body(render_prompt(prompt), cfg),
      {{"Authorization", "Bearer " + settings_.api_key},
       {"Content-Type", "application/json"}}};
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= cfg.max_retries_transport; ++attempt) {
    if (attempt > 0) {
      const std::chrono::milliseconds delay =
          settings_.base_backoff * (1LL << std::min(attempt - 1, 20));
      settings_.sleep(std::min(delay, settings_.max_backoff));
    }
    HttpResponse response;
    try {
      ++requests_;
      response = transport_->post(request);
    } catch (const TransportError& e) {
      last_error = e.what();
      continue;
    }
    if (response.status == 200) {
      try {
        return extract_response_text(response.body);
      } catch (const TransportError& e) {
        last_error = e.what();
        continue;
      }
    }
    if (response.status == 401 || response.status == 403) {
      throw AuthError("HTTP " + std::to_string(response.status) + ": " +
                      response.body);
    }
    last_error = "HTTP " + std::to_string(response.status);
    const bool retryable = response.status == 408 || response.status == 429 ||
                           response.status >= 500;
    if (!retryable) throw GatewayError(last_error + ": " + response.body);
  }
  throw TransportError("gave up after " +
                       std::to_string(cfg.max_retries_transport + 1) +
                       " attempts: " + last_error);
}

BackendStats LiveBackend::stats() const {
  return {requests_.load(), 0, 0};
}

// --- cache ------------------------------------------------------------------

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path path)
    : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;
    try {
      const json rec = json::parse(line);
      entries_[rec.at("key_hex").get<std::string>()] =
          rec.at("response").get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(path_.string() + ": " + e.what(), line_no);
    }
  }
}

std::optional<std::string> ResponseCache::lookup(
    const std::string& key_hex) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key_hex);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::store(const std::string& key_hex, const std::string& model,
                          const std::string& response) {
  const json rec = {{"key_hex", key_hex},
                    {"model", model},
                    {"response", response},
                    {"created_at", utc_timestamp()}};
  std::lock_guard lock(mu_);
  entries_[key_hex] = response;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error("cannot append to cache file " + path_.string());
  out << rec.dump() << '\n';
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

CachedBackend::CachedBackend(std::unique_ptr<Backend> inner,
                             std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
  if (!inner_ || !cache_) throw Error("cached backend needs inner and cache");
}

std::string CachedBackend::complete(const PromptSpec& prompt,
                                    const GenerationConfig& cfg) {
  const std::string key =
      cache_key(render_prompt(prompt), cfg, prompt.tag.attempt);
  if (auto hit = cache_->lookup(key)) {
    ++hits_;
    return *hit;
  }
  ++misses_;
  std::string response = inner_->complete(prompt, cfg);
  cache_->store(key, cfg.model_name, response);
  return response;
}

BackendStats CachedBackend::stats() const {
  BackendStats s = inner_->stats();
  s.cache_hits = hits_.load();
  s.cache_misses = misses_.load();
  return s;
}

// --- gateway ----------------------------------------------------------------

Gateway::Gateway(std::unique_ptr<Backend> backend)
    : backend_(std::move(backend)) {
  if (!backend_) throw Error("gateway needs a backend");
}

std::string Gateway::complete(const PromptSpec& prompt,
                              const GenerationConfig& cfg) {
  ++calls_;
  return backend_->complete(prompt, cfg);
}

GatewayCounters Gateway::counters() const {
  const BackendStats s = backend_->stats();
  return {calls_.load(), s.network_requests, s.cache_hits, s.cache_misses};
}

}  // namespace decontext
