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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "arena/elo.hpp"
#include "arena/errors.hpp"
#include "arena/miner.hpp"
#include "arena/mock_fleet.hpp"
#include "arena/model.hpp"
#include "arena/scheduler.hpp"

namespace arena {

enum class EloSnapshot { final_table, at_battle };

struct MiningConfig {
  std::string system_text = std::string(kDefaultMiningSystemText);
  std::vector<double> temperatures = {1.0, 1.1, 1.2};
  std::vector<double> top_ps = {0.99, 0.995, 1.0};
  int samples_per_config = 4;
  std::size_t workers = 4;
};

struct CurationConfig {
  double near_dup_threshold = 0.7;
  std::size_t k = 0;          // 0 keeps every filtered instruction
  std::string seed_id;        // empty: lexicographically smallest id
  std::size_t embed_batch = 64;
};

struct ArenaConfig {
  PairingMode pairing_mode = PairingMode::single;
  std::size_t rounds_cap = 70000;
  std::size_t workers = 4;
};

struct ScoringConfig {
  double k_factor = 40.0;
  double initial_rating = 1000.0;
  double alpha = 0.7;
  EloSnapshot elo_snapshot = EloSnapshot::final_table;
  SumMode sum_mode = SumMode::mean;
};

struct ReportConfig {
  std::vector<std::string> reference_corpus;  // empty: built-in default corpus
  std::string classifier_model;               // empty: first roster id
};

struct MockFleetConfig {
  bool enabled = false;
  std::string transport = "http";  // http | loopback
  std::vector<SyntheticExpert> experts;
  MockFleetOptions options;
};

struct SimConfig {
  std::vector<double> skills = {0.9, 0.7, 0.5, 0.3, 0.1};
  std::size_t seeds = 100;
  std::size_t battles = 2000;
  std::size_t threads = 0;       // 0: hardware_concurrency
  double vote_sharpness = 1.2;   // judge discrimination of the sim fleet
  double quality_noise = 0.08;
  int difficulty_min = 6;        // floors the mock difficulty distribution
};

struct RunConfig {
  std::uint64_t rng_seed = 0;
  std::filesystem::path output_dir = "out";
  bool log_requests = true;  // per-attempt gateway audit log
  std::vector<ModelSpec> roster;
  std::optional<ModelSpec> embedder;
  MockFleetConfig mock_fleet;
  MiningConfig mining;
  CurationConfig curation;
  ArenaConfig arena;
  ScoringConfig scoring;
  ReportConfig report;
  SimConfig sim;
};

namespace detail {

inline ChatTemplate chat_template_from_json(const nlohmann::json& j) {
  ChatTemplate t = ChatTemplate::chatml();
  t.system_open = j.value("system_open", t.system_open);
  t.system_close = j.value("system_close", t.system_close);
  t.user_open = j.value("user_open", t.user_open);
  t.user_close = j.value("user_close", t.user_close);
  t.assistant_open = j.value("assistant_open", t.assistant_open);
  t.assistant_close = j.value("assistant_close", t.assistant_close);
  if (j.contains("stop_sequences")) {
    t.stop_sequences = j["stop_sequences"].get<std::vector<std::string>>();
  }
  return t;
}

inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  spec.model_id = j.value("model_id", "");
  spec.endpoint_url = j.value("endpoint_url", "");
  const std::string kind = j.value("api_kind", "chat_completion");
  spec.api_kind = kind == "raw_completion" ? ApiKind::raw_completion
                  : kind == "embedding"    ? ApiKind::embedding
                                           : ApiKind::chat_completion;
  spec.role = j.value("role", "competitor") == "judge_only" ? ModelRole::judge_only
                                                            : ModelRole::competitor;
  if (j.contains("chat_template")) {
    spec.chat_template = chat_template_from_json(j["chat_template"]);
  }
  spec.max_concurrent = j.value("max_concurrent", spec.max_concurrent);
  spec.request_timeout = j.value("request_timeout", spec.request_timeout);
  if (j.contains("retry")) {
    spec.retry.max_attempts = j["retry"].value("max_attempts", spec.retry.max_attempts);
    spec.retry.backoff_base = j["retry"].value("backoff_base", spec.retry.backoff_base);
  }
  spec.requests_per_second = j.value("requests_per_second", spec.requests_per_second);
  return spec;
}

inline SyntheticExpert synthetic_expert_from_json(const nlohmann::json& j) {
  SyntheticExpert e;
  e.model_id = j.value("model_id", "");
  e.latent_skill = j.value("latent_skill", 0.5);
  e.behavior = j.value("behavior", "statistical") == "scripted"
                   ? SyntheticExpert::Behavior::scripted
                   : SyntheticExpert::Behavior::statistical;
  if (j.contains("canned")) e.canned = j["canned"].get<std::vector<std::string>>();
  e.role = j.value("role", "competitor") == "judge_only" ? ModelRole::judge_only
                                                         : ModelRole::competitor;
  return e;
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  cfg.rng_seed = j.value("rng_seed", std::uint64_t{0});
  cfg.output_dir = j.value("output_dir", std::string("out"));
  cfg.log_requests = j.value("log_requests", true);

  for (const auto& m : j.value("roster", nlohmann::json::array())) {
    cfg.roster.push_back(detail::model_spec_from_json(m));
  }
  if (j.contains("embedder")) {
    cfg.embedder = detail::model_spec_from_json(j["embedder"]);
    cfg.embedder->api_kind = ApiKind::embedding;
  }

  if (j.contains("mock_fleet")) {
    const auto& mf = j["mock_fleet"];
    cfg.mock_fleet.enabled = mf.value("enabled", false);
    cfg.mock_fleet.transport = mf.value("transport", "http");
    for (const auto& e : mf.value("experts", nlohmann::json::array())) {
      cfg.mock_fleet.experts.push_back(detail::synthetic_expert_from_json(e));
    }
    auto& opt = cfg.mock_fleet.options;
    opt.vote_sharpness = mf.value("vote_sharpness", opt.vote_sharpness);
    opt.quality_noise = mf.value("quality_noise", opt.quality_noise);
    opt.embed_dim = mf.value("embed_dim", opt.embed_dim);
    opt.difficulty_min = mf.value("difficulty_min", opt.difficulty_min);
    opt.difficulty_max = mf.value("difficulty_max", opt.difficulty_max);
    opt.max_concurrent = mf.value("max_concurrent", opt.max_concurrent);
  }

  if (j.contains("mining")) {
    const auto& m = j["mining"];
    cfg.mining.system_text = m.value("system_text", cfg.mining.system_text);
    if (m.contains("temperatures")) {
      cfg.mining.temperatures = m["temperatures"].get<std::vector<double>>();
    }
    if (m.contains("top_ps")) cfg.mining.top_ps = m["top_ps"].get<std::vector<double>>();
    cfg.mining.samples_per_config = m.value("samples_per_config", cfg.mining.samples_per_config);
    cfg.mining.workers = m.value("workers", cfg.mining.workers);
  }

  if (j.contains("curation")) {
    const auto& c = j["curation"];
    cfg.curation.near_dup_threshold = c.value("near_dup_threshold", cfg.curation.near_dup_threshold);
    cfg.curation.k = c.value("k", cfg.curation.k);
    cfg.curation.seed_id = c.value("seed_id", cfg.curation.seed_id);
    cfg.curation.embed_batch = c.value("embed_batch", cfg.curation.embed_batch);
  }

  if (j.contains("arena")) {
    const auto& a = j["arena"];
    const std::string mode = a.value("pairing_mode", "single");
    cfg.arena.pairing_mode = pairing_mode_from(mode);
    cfg.arena.rounds_cap = a.value("rounds_cap", cfg.arena.rounds_cap);
    cfg.arena.workers = a.value("workers", cfg.arena.workers);
  }

  if (j.contains("scoring")) {
    const auto& s = j["scoring"];
    cfg.scoring.k_factor = s.value("k_factor", cfg.scoring.k_factor);
    cfg.scoring.initial_rating = s.value("initial_rating", cfg.scoring.initial_rating);
    cfg.scoring.alpha = s.value("alpha", cfg.scoring.alpha);
    cfg.scoring.elo_snapshot = s.value("elo_snapshot", "final") == "at_battle"
                                   ? EloSnapshot::at_battle
                                   : EloSnapshot::final_table;
    cfg.scoring.sum_mode = s.value("sum_mode", "mean") == "raw" ? SumMode::raw : SumMode::mean;
  }

  if (j.contains("report")) {
    const auto& r = j["report"];
    if (r.contains("reference_corpus")) {
      cfg.report.reference_corpus = r["reference_corpus"].get<std::vector<std::string>>();
    }
    cfg.report.classifier_model = r.value("classifier_model", cfg.report.classifier_model);
  }

  if (j.contains("sim")) {
    const auto& s = j["sim"];
    if (s.contains("skills")) cfg.sim.skills = s["skills"].get<std::vector<double>>();
    cfg.sim.seeds = s.value("seeds", cfg.sim.seeds);
    cfg.sim.battles = s.value("battles", cfg.sim.battles);
    cfg.sim.threads = s.value("threads", cfg.sim.threads);
    cfg.sim.vote_sharpness = s.value("vote_sharpness", cfg.sim.vote_sharpness);
    cfg.sim.quality_noise = s.value("quality_noise", cfg.sim.quality_noise);
    cfg.sim.difficulty_min = s.value("difficulty_min", cfg.sim.difficulty_min);
  }
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open config file: " + path.string());
  auto parsed = nlohmann::json::parse(in, nullptr, false);
  if (parsed.is_discarded()) throw ConfigInvalid("config is not valid JSON: " + path.string());
  return run_config_from_json(parsed);
}

// Empty result means the config satisfies every invariant; otherwise each
// diagnostic names the offending key.
inline std::vector<std::string> validate_config(const RunConfig& cfg) {
  std::vector<std::string> diagnostics;
  auto flag = [&](const std::string& key, const std::string& what) {
    diagnostics.push_back(key + ": " + what);
  };

  if (cfg.scoring.alpha < 0.0 || cfg.scoring.alpha > 1.0) {
    flag("scoring.alpha", "must be within [0,1]");
  }
  if (cfg.scoring.k_factor <= 0.0) flag("scoring.k_factor", "must be > 0");
  if (cfg.arena.rounds_cap < 1) flag("arena.rounds_cap", "must be >= 1");
  if (cfg.arena.workers < 1) flag("arena.workers", "must be >= 1");
  if (cfg.mining.temperatures.empty()) flag("mining.temperatures", "must be non-empty");
  if (cfg.mining.top_ps.empty()) flag("mining.top_ps", "must be non-empty");
  for (double t : cfg.mining.temperatures) {
    if (t < 0.0) flag("mining.temperatures", "temperature must be >= 0");
  }
  for (double p : cfg.mining.top_ps) {
    if (p <= 0.0 || p > 1.0) flag("mining.top_ps", "top_p must be in (0,1]");
  }
  if (cfg.mining.samples_per_config < 1) flag("mining.samples_per_config", "must be >= 1");
  if (cfg.curation.near_dup_threshold <= 0.0 || cfg.curation.near_dup_threshold > 1.0) {
    flag("curation.near_dup_threshold", "must be in (0,1]");
  }
  if (cfg.mining.system_text.empty()) flag("mining.system_text", "must be non-empty");

  if (cfg.mock_fleet.enabled) {
    std::set<std::string> ids;
    std::size_t competitors = 0;
    for (const auto& e : cfg.mock_fleet.experts) {
      if (e.model_id.empty()) flag("mock_fleet.experts", "expert without model_id");
      if (!ids.insert(e.model_id).second) {
        flag("mock_fleet.experts", "duplicate model_id " + e.model_id);
      }
      if (e.role == ModelRole::competitor) ++competitors;
    }
    if (cfg.mock_fleet.experts.size() < 3) {
      flag("mock_fleet.experts", "need at least 3 experts");
    }
    if (competitors < 2) flag("mock_fleet.experts", "need at least 2 competitors");
    if (cfg.mock_fleet.transport != "http" && cfg.mock_fleet.transport != "loopback") {
      flag("mock_fleet.transport", "must be http or loopback");
    }
  } else {
    std::set<std::string> ids;
    std::size_t competitors = 0;
    for (const auto& m : cfg.roster) {
      if (m.model_id.empty()) flag("roster", "model without model_id");
      if (!ids.insert(m.model_id).second) flag("roster", "duplicate model_id " + m.model_id);
      if (m.endpoint_url.empty()) flag("roster", m.model_id + " has no endpoint_url");
      if (m.max_concurrent < 1) flag("roster", m.model_id + " max_concurrent must be >= 1");
      if (m.retry.max_attempts < 1) flag("roster", m.model_id + " max_attempts must be >= 1");
      if (m.chat_template.user_open.empty()) {
        flag("roster", m.model_id + " chat_template.user_open must be non-empty");
      }
      if (m.role == ModelRole::competitor) ++competitors;
    }
    if (cfg.roster.size() < 3) flag("roster", "need at least 3 models");
    if (competitors < 2) flag("roster", "need at least 2 competitors");
    if (!cfg.embedder) flag("embedder", "required when mock_fleet is disabled");
  }

  if (!cfg.sim.skills.empty() && cfg.sim.seeds < 1) flag("sim.seeds", "must be >= 1");
  return diagnostics;
}

}  // namespace arena
