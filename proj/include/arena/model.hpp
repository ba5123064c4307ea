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
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arena/errors.hpp"

namespace arena {

enum class ApiKind { raw_completion, chat_completion, embedding };

// competitor models attack, defend, and judge; judge_only models never
// enter a battle but still vote and rate difficulty.
enum class ModelRole { competitor, judge_only };

inline const char* to_string(ApiKind k) {
  switch (k) {
    case ApiKind::raw_completion: return "raw_completion";
    case ApiKind::chat_completion: return "chat_completion";
    case ApiKind::embedding: return "embedding";
  }
  return "?";
}

struct RetryPolicy {
  int max_attempts = 3;
  double backoff_base = 0.05;  // seconds; attempt n sleeps base * 2^(n-1)
};

// The conversational markup of one model family. Only the prefix up to and
// including user_open is ever sent when mining; user_close / assistant_open
// double as stop sequences so the model closes the user turn it invents.
struct ChatTemplate {
  std::string system_open;
  std::string system_close;
  std::string user_open;
  std::string user_close;
  std::string assistant_open;
  std::string assistant_close;
  std::vector<std::string> stop_sequences;

  // ChatML-style markup (the default for the bundled fleet). The closing
  // markers double as stop sequences, so they carry no trailing newline.
  static ChatTemplate chatml() {
    ChatTemplate t;
    t.system_open = "<|im_start|>system\n";
    t.system_close = "<|im_end|>\n";
    t.user_open = "<|im_start|>user\n";
    t.user_close = "<|im_end|>";
    t.assistant_open = "<|im_start|>assistant";
    t.assistant_close = "<|im_end|>";
    return t;
  }
};

struct GenerationConfig {
  double temperature = 0.7;
  double top_p = 1.0;
  int max_tokens = 2048;
  std::optional<std::int64_t> seed;

  void validate() const {
    if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
    if (top_p <= 0.0 || top_p > 1.0) throw std::invalid_argument("top_p must be in (0,1]");
    if (max_tokens < 1) throw std::invalid_argument("max_tokens must be positive");
  }
};

struct ModelSpec {
  std::string model_id;
  std::string endpoint_url;  // base URL; the gateway appends the API path
  ApiKind api_kind = ApiKind::chat_completion;
  ModelRole role = ModelRole::competitor;
  ChatTemplate chat_template = ChatTemplate::chatml();
  int max_concurrent = 4;
  double request_timeout = 30.0;  // seconds
  RetryPolicy retry;
  double requests_per_second = 0.0;  // token-bucket rate; <= 0 disables

  // Same endpoint viewed through a different API kind. One roster entry
  // serves both mining (raw completion) and battles (chat).
  ModelSpec as_kind(ApiKind kind) const {
    ModelSpec copy = *this;
    copy.api_kind = kind;
    return copy;
  }
};

struct CompletionResult {
  std::string text;
  std::string model_id;
  GenerationConfig gen_config;
  double latency = 0.0;  // seconds
  int attempt_count = 0;
};

// The arena roster: all models that take part in a run, competitors and
// judge-only members alike.
struct Roster {
  std::vector<ModelSpec> models;

  const ModelSpec& by_id(const std::string& id) const {
    for (const auto& m : models) {
      if (m.model_id == id) return m;
    }
    throw UnknownModel("roster has no model: " + id);
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(models.size());
    for (const auto& m : models) out.push_back(m.model_id);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<std::string> competitor_ids() const {
    std::vector<std::string> out;
    for (const auto& m : models) {
      if (m.role == ModelRole::competitor) out.push_back(m.model_id);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Judges for a context that excludes the listed models (competitors of a
  // battle, or the author of an instruction under difficulty rating).
  std::vector<ModelSpec> judges_excluding(const std::vector<std::string>& excluded) const {
    std::vector<ModelSpec> out;
    for (const auto& m : models) {
      if (std::find(excluded.begin(), excluded.end(), m.model_id) == excluded.end()) {
        out.push_back(m);
      }
    }
    std::sort(out.begin(), out.end(),
              [](const ModelSpec& a, const ModelSpec& b) { return a.model_id < b.model_id; });
    return out;
  }
};

// The mining prompt: everything up to and including the opening of the user
// turn, so the model completes with a user instruction of its own.
inline std::string render_prefix(const ChatTemplate& tpl, const std::string& system_text) {
  if (tpl.user_open.empty()) throw std::invalid_argument("chat template user_open is empty");
  if (system_text.empty()) throw std::invalid_argument("system_text is empty");
  std::string out;
  out.reserve(tpl.system_open.size() + system_text.size() + tpl.system_close.size() +
              tpl.user_open.size());
  out += tpl.system_open;
  out += system_text;
  out += tpl.system_close;
  out += tpl.user_open;
  return out;
}

}  // namespace arena
