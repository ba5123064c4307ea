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

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "arena/curator.hpp"
#include "arena/judge.hpp"
#include "arena/model.hpp"
#include "arena/rng.hpp"
#include "arena/transport.hpp"

namespace arena {

// A fake expert. Scripted experts replay canned texts (or echo when the list
// is empty); statistical experts answer with a quality drawn from
// latent_skill plus seeded noise and vote for the better-marked answer.
struct SyntheticExpert {
  enum class Behavior { scripted, statistical };

  std::string model_id;
  double latent_skill = 0.5;
  Behavior behavior = Behavior::statistical;
  std::vector<std::string> canned;
  ModelRole role = ModelRole::competitor;

  // Fault injection for gateway tests.
  int fail_first_n = 0;
  bool always_fail = false;
  bool empty_replies = false;
};

struct MockFleetOptions {
  std::uint64_t seed = 0;
  double vote_sharpness = 0.6;   // lambda in p = 0.5 + lambda * (q1 - q2)
  double quality_noise = 0.08;   // sigma of the response-quality jitter
  std::size_t embed_dim = 16;
  int difficulty_min = 1;        // mock difficulty scores are uniform in
  int difficulty_max = 10;       // [min, max] before per-judge jitter
  int max_concurrent = 8;        // advertised in the generated ModelSpecs
  int retry_max_attempts = 3;
  double retry_backoff = 0.005;
};

// In-process model fleet speaking the gateway's exact wire format, reachable
// either over real loopback HTTP or through the function-call transport
// below. Every reply is a pure function of the request body and the fleet
// seed, so a seeded run is reproducible regardless of call order; the only
// mutable state is diagnostic counters and scripted-reply cursors.
class MockFleet {
 public:
  MockFleet(std::vector<SyntheticExpert> experts, MockFleetOptions options)
      : experts_(std::move(experts)), options_(options) {
    for (const auto& e : experts_) {
      state_[e.model_id] = std::make_unique<PerModel>(e.fail_first_n);
    }
    state_[kEmbedderId] = std::make_unique<PerModel>(0);
  }

  ~MockFleet() { stop(); }

  static constexpr const char* kEmbedderId = "mock-embedder";

  // --- wire handling -------------------------------------------------------

  nlohmann::json handle(const std::string& path, const nlohmann::json& body, int& status) {
    status = 200;
    const std::string model = body.value("model", "");
    PerModel* pm = per_model(model);
    if (pm == nullptr) {
      status = 404;
      return {{"error", "unknown model: " + model}};
    }
    ConcurrencyScope scope(*pm);

    const SyntheticExpert* expert = expert_for(model);
    if (expert != nullptr && (expert->always_fail || pm->take_failure())) {
      status = 500;
      return {{"error", "injected failure"}};
    }

    if (path == "/v1/embeddings") return handle_embedding(body);
    if (expert == nullptr) {
      status = 404;
      return {{"error", "unknown model: " + model}};
    }
    if (path == "/v1/completions") return handle_completion(*expert, body);
    if (path == "/v1/chat/completions") return handle_chat(*expert, body);
    status = 404;
    return {{"error", "unknown path: " + path}};
  }

  // --- endpoints for the gateway ------------------------------------------

  Roster roster() const {
    Roster r;
    for (const auto& e : experts_) {
      ModelSpec spec;
      spec.model_id = e.model_id;
      spec.endpoint_url = http_running() ? base_url_ : "inproc://mock-fleet";
      spec.api_kind = ApiKind::chat_completion;
      spec.role = e.role;
      spec.chat_template = ChatTemplate::chatml();
      spec.max_concurrent = options_.max_concurrent;
      spec.retry.max_attempts = options_.retry_max_attempts;
      spec.retry.backoff_base = options_.retry_backoff;
      r.models.push_back(std::move(spec));
    }
    return r;
  }

  ModelSpec embedder_spec() const {
    ModelSpec spec;
    spec.model_id = kEmbedderId;
    spec.endpoint_url = http_running() ? base_url_ : "inproc://mock-fleet";
    spec.api_kind = ApiKind::embedding;
    spec.max_concurrent = options_.max_concurrent;
    spec.retry.max_attempts = options_.retry_max_attempts;
    spec.retry.backoff_base = options_.retry_backoff;
    return spec;
  }

  // Binds an ephemeral loopback port and serves until stop().
  void start_http() {
    if (http_running()) return;
    server_ = std::make_unique<httplib::Server>();
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      auto body = nlohmann::json::parse(req.body, nullptr, false);
      int status = 200;
      nlohmann::json reply;
      if (body.is_discarded()) {
        status = 400;
        reply = {{"error", "request is not JSON"}};
      } else {
        reply = handle(req.path, body, status);
      }
      res.status = status;
      res.set_content(reply.dump(), "application/json");
    };
    server_->Post("/v1/completions", handler);
    server_->Post("/v1/chat/completions", handler);
    server_->Post("/v1/embeddings", handler);
    port_ = server_->bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw IoFailure("mock fleet could not bind a loopback port");
    base_url_ = "http://127.0.0.1:" + std::to_string(port_);
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
  }

  void stop() {
    if (server_) {
      server_->stop();
      if (server_thread_.joinable()) server_thread_.join();
      server_.reset();
    }
  }

  bool http_running() const { return server_ != nullptr; }
  const std::string& base_url() const { return base_url_; }

  // --- diagnostic counters -------------------------------------------------

  int max_observed_concurrency(const std::string& model) const {
    auto it = state_.find(model);
    return it == state_.end() ? 0 : it->second->max_concurrent.load();
  }

  std::size_t mining_prefix_violations() const { return prefix_violations_.load(); }
  std::size_t mining_requests() const { return mining_requests_.load(); }

 private:
  struct PerModel {
    explicit PerModel(int failures) : failures_left(failures) {}

    bool take_failure() {
      int current = failures_left.load();
      while (current > 0) {
        if (failures_left.compare_exchange_weak(current, current - 1)) return true;
      }
      return false;
    }

    std::atomic<int> failures_left{0};
    std::atomic<int> concurrent{0};
    std::atomic<int> max_concurrent{0};
    std::atomic<std::uint64_t> script_cursor{0};
  };

  struct ConcurrencyScope {
    explicit ConcurrencyScope(PerModel& pm) : pm_(pm) {
      const int now = pm_.concurrent.fetch_add(1) + 1;
      int seen = pm_.max_concurrent.load();
      while (now > seen && !pm_.max_concurrent.compare_exchange_weak(seen, now)) {
      }
    }
    ~ConcurrencyScope() { pm_.concurrent.fetch_sub(1); }
    PerModel& pm_;
  };

  PerModel* per_model(const std::string& model) {
    auto it = state_.find(model);
    return it == state_.end() ? nullptr : it->second.get();
  }

  const SyntheticExpert* expert_for(const std::string& model) const {
    for (const auto& e : experts_) {
      if (e.model_id == model) return &e;
    }
    return nullptr;
  }

  static std::int64_t seed_of(const nlohmann::json& body) {
    return body.contains("seed") ? body["seed"].get<std::int64_t>() : 0;
  }

  std::string next_canned(const SyntheticExpert& expert) {
    auto& pm = *state_.at(expert.model_id);
    const std::uint64_t cursor = pm.script_cursor.fetch_add(1);
    if (expert.canned.empty()) return "";
    return expert.canned[cursor % expert.canned.size()];
  }

  // ---- raw completion: instruction mining ---------------------------------

  nlohmann::json handle_completion(const SyntheticExpert& expert, const nlohmann::json& body) {
    mining_requests_.fetch_add(1);
    const std::string prompt = body.value("prompt", "");
    const std::string user_open = ChatTemplate::chatml().user_open;
    if (prompt.size() < user_open.size() ||
        prompt.compare(prompt.size() - user_open.size(), user_open.size(), user_open) != 0) {
      prefix_violations_.fetch_add(1);
    }

    std::string text;
    if (expert.empty_replies) {
      text = "";
    } else if (expert.behavior == SyntheticExpert::Behavior::scripted) {
      text = next_canned(expert);
    } else {
      std::uint64_t h = derive_seed(options_.seed, "mine", expert.model_id, prompt);
      h = fnv1a_u64(static_cast<std::uint64_t>(seed_of(body)), h);
      h = fnv1a_u64(static_cast<std::uint64_t>(body.value("temperature", 0.0) * 1000), h);
      h = fnv1a_u64(static_cast<std::uint64_t>(body.value("top_p", 0.0) * 10000), h);
      text = synth_instruction(h);
    }
    // Close the invented user turn the way a real model would: emit the stop
    // sequence and keep going; the gateway must truncate.
    if (!text.empty() && body.contains("stop") && !body["stop"].empty()) {
      text += body["stop"][0].get<std::string>();
      text += "<|im_start|>assistant\nSTRAY TEXT AFTER STOP";
    }
    return completion_reply(text);
  }

  // ---- chat: answers, votes, difficulty, classification -------------------

  nlohmann::json handle_chat(const SyntheticExpert& expert, const nlohmann::json& body) {
    std::string user_text;
    if (body.contains("messages")) {
      for (const auto& m : body["messages"]) {
        if (m.value("role", "") == "user") user_text = m.value("content", "");
      }
    }

    if (expert.behavior == SyntheticExpert::Behavior::scripted) {
      std::string canned = next_canned(expert);
      return chat_reply(canned.empty() ? "echo: " + user_text : canned);
    }

    if (user_text.find(judge_markers::kAnswerAStart) != std::string::npos) {
      return chat_reply(vote_reply(expert, user_text, seed_of(body)));
    }
    if (user_text.find("Rate the difficulty") != std::string::npos) {
      return chat_reply(difficulty_reply(expert, user_text));
    }
    if (user_text.find("Reply with the category name only") != std::string::npos) {
      return chat_reply(classify_reply(user_text));
    }
    return chat_reply(answer_reply(expert, user_text, seed_of(body)));
  }

  std::string answer_reply(const SyntheticExpert& expert, const std::string& user_text,
                           std::int64_t seed) {
    Rng rng(derive_seed(options_.seed, "answer", expert.model_id, user_text) +
            static_cast<std::uint64_t>(seed));
    double q = expert.latent_skill + options_.quality_noise * rng.next_normal();
    q = std::clamp(q, 0.0, 1.0);

    static const char* kFillers[] = {
        "The approach follows directly from the problem statement.",
        "Start by validating the input, then handle the main cases.",
        "A helper keeps the core loop readable.",
        "Edge cases: empty input, a single element, repeated values.",
        "The complexity is linear in the size of the input.",
        "Tests cover the boundary conditions described above.",
    };
    std::string text = "Solution sketch:\n";
    const std::size_t filler_lines = 1 + rng.below(2);
    for (std::size_t i = 0; i < filler_lines; ++i) {
      text += kFillers[rng.below(6)];
      text += "\n";
    }
    char marker[32];
    std::snprintf(marker, sizeof(marker), "[quality:%.4f]", q);
    text += marker;
    return text;
  }

  static double parse_quality_block(const std::string& prompt, std::string_view start,
                                    std::string_view end, bool& found) {
    found = false;
    const auto block_begin = prompt.find(start);
    if (block_begin == std::string::npos) return 0.0;
    const auto block_end = prompt.find(end, block_begin);
    const auto hay_end = block_end == std::string::npos ? prompt.size() : block_end;
    const auto marker = prompt.find("[quality:", block_begin);
    if (marker == std::string::npos || marker >= hay_end) return 0.0;
    double q = 0.0;
    if (std::sscanf(prompt.c_str() + marker, "[quality:%lf]", &q) == 1) found = true;
    return q;
  }

  // Votes for the better-marked answer with p = 0.5 + lambda * (q1 - q2),
  // clamped to [0,1]. Falls back to shorter-answer-wins when the answers
  // carry no quality markers.
  std::string vote_reply(const SyntheticExpert& expert, const std::string& prompt,
                         std::int64_t seed) {
    bool found_a = false, found_b = false;
    const double q_a = parse_quality_block(prompt, judge_markers::kAnswerAStart,
                                           judge_markers::kAnswerAEnd, found_a);
    const double q_b = parse_quality_block(prompt, judge_markers::kAnswerBStart,
                                           judge_markers::kAnswerBEnd, found_b);
    std::string verdict;
    if (found_a && found_b) {
      const double p_first =
          std::clamp(0.5 + options_.vote_sharpness * (q_a - q_b), 0.0, 1.0);
      // Seed the ballot from the varying part only; the fixed preamble would
      // just burn hashing time on every call.
      const auto varying = prompt.find("[[User Question]]");
      const std::string_view ballot_key =
          std::string_view(prompt).substr(varying == std::string::npos ? 0 : varying);
      Rng rng(derive_seed(options_.seed, "ballot", expert.model_id, ballot_key) +
              static_cast<std::uint64_t>(seed));
      verdict = rng.next_unit() < p_first ? "[[A]]" : "[[B]]";
    } else {
      const auto len_a = prompt.find(judge_markers::kAnswerAEnd) -
                         prompt.find(judge_markers::kAnswerAStart);
      const auto len_b = prompt.find(judge_markers::kAnswerBEnd) -
                         prompt.find(judge_markers::kAnswerBStart);
      verdict = len_a <= len_b ? "[[A]]" : "[[B]]";
    }
    return "Compared on helpfulness, relevance, and accuracy.\nMy final verdict is " + verdict;
  }

  std::string difficulty_reply(const SyntheticExpert& expert, const std::string& prompt) {
    const int lo = options_.difficulty_min;
    const int hi = options_.difficulty_max;
    const auto varying = prompt.find("Instruction:\n");
    const std::string_view key =
        std::string_view(prompt).substr(varying == std::string::npos ? 0 : varying);
    const std::uint64_t base_h = derive_seed(options_.seed, "difficulty-base", key);
    const int base = lo + static_cast<int>(base_h % static_cast<std::uint64_t>(hi - lo + 1));
    const std::uint64_t jitter_h =
        derive_seed(options_.seed, "difficulty-jitter", expert.model_id, key);
    const int jitter = static_cast<int>(jitter_h % 3) - 1;
    const int score = std::clamp(base + jitter, 1, 10);
    return "Considering clarity, specificity, and challenge of the instruction.\n" +
           std::to_string(score);
  }

  std::string classify_reply(const std::string& prompt) {
    // Rough task mix: generation-heavy, a long tail of the other categories.
    static constexpr std::string_view kCategories[] = {
        "Code Generation", "Code Debugging", "Code Optimization", "Code Reasoning",
        "Code Analysis",   "Theoretical Explanation", "Code Transpile"};
    static constexpr int kWeights[] = {51, 12, 4, 3, 7, 22, 1};
    const int total = 100;
    const std::uint64_t h = derive_seed(options_.seed, "classify", prompt);
    int pick = static_cast<int>(h % total);
    for (std::size_t i = 0; i < 7; ++i) {
      pick -= kWeights[i];
      if (pick < 0) return std::string(kCategories[i]);
    }
    return std::string(kCategories[0]);
  }

  // ---- embeddings ----------------------------------------------------------

  nlohmann::json handle_embedding(const nlohmann::json& body) {
    nlohmann::json data = nlohmann::json::array();
    std::size_t index = 0;
    for (const auto& item : body.value("input", nlohmann::json::array())) {
      const std::string text = item.get<std::string>();
      std::vector<double> v(options_.embed_dim, 0.0);
      for (const auto& token : whitespace_tokens(text)) {
        Rng rng(derive_seed(options_.seed, "embed", token));
        for (auto& x : v) x += rng.next_normal();
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0.0) {
        v[0] = 1.0;
      } else {
        for (auto& x : v) x /= norm;
      }
      data.push_back({{"embedding", v}, {"index", index++}});
    }
    return {{"data", data}};
  }

  static nlohmann::json completion_reply(const std::string& text) {
    nlohmann::json reply;
    reply["choices"] = nlohmann::json::array();
    reply["choices"].push_back({{"text", text}, {"index", 0}});
    return reply;
  }

  static nlohmann::json chat_reply(const std::string& text) {
    nlohmann::json message = {{"role", "assistant"}, {"content", text}};
    nlohmann::json reply;
    reply["choices"] = nlohmann::json::array();
    reply["choices"].push_back({{"message", message}, {"index", 0}});
    return reply;
  }

  // Instruction synthesizer: word banks addressed by hash bits, ~2^16
  // distinct surface forms with varied lengths.
  static std::string synth_instruction(std::uint64_t h) {
    static constexpr std::string_view kVerbs[] = {
        "Write", "Implement", "Design", "Create", "Build", "Develop", "Refactor", "Optimize"};
    static constexpr std::string_view kSubjects[] = {
        "a function", "a class", "a script", "a module", "an algorithm", "a decorator",
        "a CLI tool", "a parser"};
    static constexpr std::string_view kTasks[] = {
        "merges overlapping intervals",
        "computes a topological ordering of a DAG",
        "validates nested brackets",
        "flattens arbitrarily nested JSON",
        "implements an LRU cache with expiry",
        "finds the longest palindromic substring",
        "rotates a matrix in place",
        "deduplicates records by a composite key",
        "schedules jobs with dependencies",
        "computes rolling window statistics",
        "parses ISO-8601 timestamps",
        "balances a binary search tree",
        "streams large CSV files in chunks",
        "resolves symbolic links safely",
        "diffs two configuration trees",
        "serializes cyclic object graphs"};
    static constexpr std::string_view kConstraints[] = {
        "in Python", "without recursion", "in O(n log n) time",
        "using only the standard library", "with full type hints",
        "handling unicode input", "for streaming input", "with constant extra memory"};
    static constexpr std::string_view kExtras[] = {
        "",
        " Include edge cases in your tests.",
        " Explain the time complexity.",
        " Provide example usage.",
        " Handle invalid input gracefully.",
        " Compare two alternative approaches.",
        " Add docstrings for every public function.",
        " Keep memory usage below O(n)."};

    std::string out;
    out += kVerbs[h & 7];
    out += " ";
    out += kSubjects[(h >> 3) & 7];
    out += " that ";
    out += kTasks[(h >> 6) & 15];
    out += " ";
    out += kConstraints[(h >> 10) & 7];
    out += ".";
    out += kExtras[(h >> 13) & 7];
    return out;
  }

  std::vector<SyntheticExpert> experts_;
  MockFleetOptions options_;
  std::map<std::string, std::unique_ptr<PerModel>> state_;
  std::atomic<std::size_t> prefix_violations_{0};
  std::atomic<std::size_t> mining_requests_{0};

  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
  int port_ = 0;
  std::string base_url_;
};

// Function-call transport into a fleet: identical JSON bodies, no sockets.
// The wire-level path is covered by MockFleet::start_http + HttpTransport.
class LoopbackTransport : public Transport {
 public:
  explicit LoopbackTransport(MockFleet& fleet) : fleet_(fleet) {}

  TransportReply post(const std::string& base_url, const std::string& path,
                      const nlohmann::json& body, double timeout_seconds,
                      const std::string& bearer_token) override {
    (void)base_url;
    (void)timeout_seconds;
    (void)bearer_token;
    TransportReply reply;
    reply.body = fleet_.handle(path, body, reply.status);
    reply.parse_ok = true;
    return reply;
  }

 private:
  MockFleet& fleet_;
};

// Convenience used everywhere in tests: a statistical fleet of n competitors
// with the given skills, ids expert-a, expert-b, ... plus a judge-only
// referee when only two competitors are requested.
inline std::vector<SyntheticExpert> statistical_fleet(const std::vector<double>& skills) {
  std::vector<SyntheticExpert> experts;
  for (std::size_t i = 0; i < skills.size(); ++i) {
    SyntheticExpert e;
    e.model_id = std::string("expert-") + static_cast<char>('a' + i);
    e.latent_skill = skills[i];
    e.behavior = SyntheticExpert::Behavior::statistical;
    experts.push_back(std::move(e));
  }
  if (skills.size() == 2) {
    SyntheticExpert referee;
    referee.model_id = "referee";
    referee.latent_skill = 0.5;
    referee.behavior = SyntheticExpert::Behavior::statistical;
    referee.role = ModelRole::judge_only;
    experts.push_back(std::move(referee));
  }
  return experts;
}

}  // namespace arena
