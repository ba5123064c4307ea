// Copyright 2026 The ArenaForge Authors.
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
#include <cctype>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "arena/errors.hpp"
#include "arena/event_log.hpp"
#include "arena/hash.hpp"
#include "arena/model.hpp"
#include "arena/transport.hpp"

namespace arena {

namespace detail {

class Semaphore {
 public:
  explicit Semaphore(int width) : available_(width) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }

  void release() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++available_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int available_;
};

// Request-per-second throttle. rate <= 0 disables.
class TokenBucket {
 public:
  explicit TokenBucket(double rate)
      : rate_(rate), capacity_(std::max(1.0, rate)), tokens_(capacity_),
        last_(std::chrono::steady_clock::now()) {}

  void acquire() {
    if (rate_ <= 0.0) return;
    std::unique_lock<std::mutex> lock(mu_);
    for (;;) {
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const double deficit = 1.0 - tokens_;
      const auto wait = std::chrono::duration<double>(deficit / rate_);
      cv_.wait_for(lock, wait);
    }
  }

 private:
  void refill() {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_);
  }

  std::mutex mu_;
  std::condition_variable cv_;
  double rate_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

struct EndpointLimiter {
  Semaphore semaphore;
  TokenBucket bucket;
  EndpointLimiter(int width, double rate) : semaphore(width), bucket(rate) {}
};

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(Semaphore& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  Semaphore& s_;
};

}  // namespace detail

// Environment variable holding the bearer token of one endpoint:
// ARENA_TOKEN_<MODEL_ID>, uppercased, non-alphanumerics mapped to '_'.
inline std::string token_env_var(const std::string& model_id) {
  std::string out = "ARENA_TOKEN_";
  for (char c : model_id) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c))
                      ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                      : '_');
  }
  return out;
}

// Uniform client over remote model endpoints: raw completion, chat
// completion, embedding. OpenAI-compatible JSON bodies. Thread-safe; each
// endpoint is guarded by its own concurrency semaphore and token bucket.
// Every attempt is appended to the request log before its outcome is
// surfaced to the caller; retried attempts share one request_id.
class Gateway {
 public:
  explicit Gateway(Transport& transport, EventLog* request_log = nullptr)
      : transport_(transport), request_log_(request_log) {}

  CompletionResult complete_raw(const ModelSpec& spec, const std::string& prefix,
                                const GenerationConfig& cfg) {
    require_kind(spec, ApiKind::raw_completion);
    cfg.validate();
    std::vector<std::string> stops = stop_list(spec.chat_template);
    nlohmann::json body = {
        {"model", spec.model_id},   {"prompt", prefix},
        {"temperature", cfg.temperature}, {"top_p", cfg.top_p},
        {"max_tokens", cfg.max_tokens},   {"stop", stops},
    };
    if (cfg.seed) body["seed"] = *cfg.seed;

    auto [reply, attempts, latency] = send_with_retries(spec, "/v1/completions", body);
    std::string text = extract_string(reply, "/choices/0/text", spec);
    CompletionResult result;
    result.text = truncate_at_stops(text, stops);
    result.model_id = spec.model_id;
    result.gen_config = cfg;
    result.latency = latency;
    result.attempt_count = attempts;
    return result;
  }

  CompletionResult chat(const ModelSpec& spec, const std::string& system_text,
                        const std::string& user_text, const GenerationConfig& cfg) {
    require_kind(spec, ApiKind::chat_completion);
    cfg.validate();
    nlohmann::json messages = nlohmann::json::array();
    if (!system_text.empty()) {
      messages.push_back({{"role", "system"}, {"content", system_text}});
    }
    messages.push_back({{"role", "user"}, {"content", user_text}});
    nlohmann::json body = {
        {"model", spec.model_id},   {"messages", messages},
        {"temperature", cfg.temperature}, {"top_p", cfg.top_p},
        {"max_tokens", cfg.max_tokens},
    };
    if (cfg.seed) body["seed"] = *cfg.seed;

    auto [reply, attempts, latency] = send_with_retries(spec, "/v1/chat/completions", body);
    CompletionResult result;
    result.text = extract_string(reply, "/choices/0/message/content", spec);
    result.model_id = spec.model_id;
    result.gen_config = cfg;
    result.latency = latency;
    result.attempt_count = attempts;
    return result;
  }

  // Returns one L2-normalized vector per input text, all of equal dimension.
  std::vector<std::vector<double>> embed(const ModelSpec& spec,
                                         const std::vector<std::string>& texts) {
    require_kind(spec, ApiKind::embedding);
    if (texts.empty()) throw std::invalid_argument("embed: texts is empty");
    nlohmann::json body = {{"model", spec.model_id}, {"input", texts}};
    auto [reply, attempts, latency] = send_with_retries(spec, "/v1/embeddings", body);
    (void)attempts;
    (void)latency;

    const auto* data = reply.body.contains("data") ? &reply.body["data"] : nullptr;
    if (data == nullptr || !data->is_array() || data->size() != texts.size()) {
      throw MalformedResponse("embedding reply malformed for " + spec.model_id);
    }
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    std::size_t dim = 0;
    for (const auto& item : *data) {
      if (!item.contains("embedding") || !item["embedding"].is_array()) {
        throw MalformedResponse("embedding item malformed for " + spec.model_id);
      }
      std::vector<double> v = item["embedding"].get<std::vector<double>>();
      if (dim == 0) dim = v.size();
      if (v.size() != dim || dim == 0) {
        throw DimensionMismatch("ragged embedding dimensions from " + spec.model_id);
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0.0) throw MalformedResponse("zero-norm embedding from " + spec.model_id);
      for (double& x : v) x /= norm;
      out.push_back(std::move(v));
    }
    return out;
  }

 private:
  static void require_kind(const ModelSpec& spec, ApiKind kind) {
    if (spec.api_kind != kind) {
      throw std::logic_error(std::string("model ") + spec.model_id +
                             " addressed as " + to_string(kind) +
                             " but spec says " + to_string(spec.api_kind));
    }
  }

  static std::vector<std::string> stop_list(const ChatTemplate& tpl) {
    std::vector<std::string> stops;
    if (!tpl.user_close.empty()) stops.push_back(tpl.user_close);
    if (!tpl.assistant_open.empty()) stops.push_back(tpl.assistant_open);
    for (const auto& s : tpl.stop_sequences) {
      if (!s.empty()) stops.push_back(s);
    }
    return stops;
  }

  // Cut at the earliest occurrence of any stop sequence.
  static std::string truncate_at_stops(const std::string& text,
                                       const std::vector<std::string>& stops) {
    std::size_t cut = text.size();
    for (const auto& stop : stops) {
      const auto pos = text.find(stop);
      if (pos != std::string::npos && pos < cut) cut = pos;
    }
    return text.substr(0, cut);
  }

  std::string extract_string(const TransportReply& reply, const char* pointer,
                             const ModelSpec& spec) {
    const auto ptr = nlohmann::json::json_pointer(pointer);
    if (!reply.body.contains(ptr) || !reply.body.at(ptr).is_string()) {
      throw MalformedResponse("reply from " + spec.model_id + " lacks " + pointer);
    }
    return reply.body.at(ptr).get<std::string>();
  }

  detail::EndpointLimiter& limiter_for(const ModelSpec& spec) {
    std::lock_guard<std::mutex> lock(limiters_mu_);
    auto it = limiters_.find(spec.model_id);
    if (it == limiters_.end()) {
      it = limiters_
               .emplace(spec.model_id,
                        std::make_unique<detail::EndpointLimiter>(
                            std::max(1, spec.max_concurrent), spec.requests_per_second))
               .first;
    }
    return *it->second;
  }

  struct SendOutcome {
    TransportReply reply;
    int attempts = 0;
    double latency = 0.0;
  };

  void log_attempt(const std::string& request_id, const ModelSpec& spec,
                   const std::string& path, int attempt, const std::string& body_sha,
                   const TransportReply& reply, double latency) {
    if (request_log_ == nullptr) return;
    nlohmann::json rec = {
        {"request_id", request_id}, {"model", spec.model_id}, {"path", path},
        {"attempt", attempt},       {"request_sha", body_sha},
        {"status", reply.status},   {"latency_ms", latency * 1000.0},
    };
    if (!reply.error.empty()) rec["error"] = reply.error;
    if (reply.parse_ok) rec["response_sha"] = sha256_hex(reply.body.dump());
    request_log_->append(rec);
  }

  SendOutcome send_with_retries(const ModelSpec& spec, const std::string& path,
                                const nlohmann::json& body) {
    if (spec.retry.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
    auto& limiter = limiter_for(spec);
    const std::string request_id = "r" + std::to_string(next_request_id_.fetch_add(1));
    const std::string body_sha =
        request_log_ != nullptr ? sha256_hex(body.dump()) : std::string();
    const char* env_token = std::getenv(token_env_var(spec.model_id).c_str());
    const std::string bearer = env_token ? env_token : "";

    std::string last_error;
    const auto started = std::chrono::steady_clock::now();
    for (int attempt = 1; attempt <= spec.retry.max_attempts; ++attempt) {
      limiter.bucket.acquire();
      TransportReply reply;
      {
        detail::SemaphoreGuard guard(limiter.semaphore);
        reply = transport_.post(spec.endpoint_url, path, body, spec.request_timeout, bearer);
      }
      const double latency =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      // The log entry lands before any outcome is surfaced to the caller.
      log_attempt(request_id, spec, path, attempt, body_sha, reply, latency);

      if (reply.transport_ok() && reply.status < 500) {
        if (reply.status >= 400) {
          throw MalformedResponse("HTTP " + std::to_string(reply.status) + " from " +
                                  spec.model_id + " at " + path);
        }
        if (!reply.parse_ok) {
          throw MalformedResponse("non-JSON reply from " + spec.model_id + ": " + reply.error);
        }
        return {std::move(reply), attempt, latency};
      }
      last_error = reply.error.empty() ? ("HTTP " + std::to_string(reply.status)) : reply.error;
      if (attempt < spec.retry.max_attempts && spec.retry.backoff_base > 0.0) {
        const double sleep_s = spec.retry.backoff_base * std::pow(2.0, attempt - 1);
        std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));
      }
    }
    throw EndpointUnreachable("endpoint " + spec.model_id + " (" + spec.endpoint_url + path +
                              ") unreachable after " + std::to_string(spec.retry.max_attempts) +
                              " attempts: " + last_error);
  }

  Transport& transport_;
  EventLog* request_log_;
  std::mutex limiters_mu_;
  std::map<std::string, std::unique_ptr<detail::EndpointLimiter>> limiters_;
  std::atomic<std::uint64_t> next_request_id_{1};
};

}  // namespace arena
