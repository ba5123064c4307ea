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
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "arena/pipeline.hpp"
#include "arena/util.hpp"

namespace arena {

struct SimOutcome {
  std::vector<std::string> true_ranking;  // ids, best first, by latent skill
  std::vector<std::string> elo_ranking;   // ids, best first, by final rating
  double kendall_tau = 0.0;
  std::size_t battles_run = 0;

  bool exact_match() const { return true_ranking == elo_ranking; }
};

// Kendall rank correlation between two orderings of the same ids.
inline double kendall_tau(const std::vector<std::string>& a,
                          const std::vector<std::string>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("kendall_tau: need two equal rankings of size >= 2");
  }
  std::map<std::string, std::size_t> pos_b;
  for (std::size_t i = 0; i < b.size(); ++i) pos_b[b[i]] = i;
  long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      (pos_b.at(a[i]) < pos_b.at(a[j]) ? concordant : discordant) += 1;
    }
  }
  const double pairs = 0.5 * static_cast<double>(a.size()) * (a.size() - 1);
  return (concordant - discordant) / pairs;
}

// One seeded end-to-end run on a synthetic fleet, sized so the curated set
// covers the requested battle count. Runs in its own scratch directory with
// the in-process transport; the scratch tree is removed afterwards.
inline SimOutcome simulate(const std::vector<double>& skills, const RunConfig& base,
                           std::uint64_t seed, const std::filesystem::path& scratch_dir) {
  if (skills.size() < 2) throw std::invalid_argument("simulate: need >= 2 competitors");

  RunConfig cfg = base;
  cfg.rng_seed = seed;
  cfg.output_dir = scratch_dir;
  cfg.log_requests = false;  // tens of thousands of calls per seed
  cfg.mock_fleet.enabled = true;
  cfg.mock_fleet.transport = "loopback";
  cfg.mock_fleet.experts = statistical_fleet(skills);
  cfg.mock_fleet.options.vote_sharpness = base.sim.vote_sharpness;
  cfg.mock_fleet.options.quality_noise = base.sim.quality_noise;
  cfg.mock_fleet.options.difficulty_min = base.sim.difficulty_min;
  cfg.mock_fleet.options.difficulty_max = 10;

  // Size mining so that, after the difficulty filter, the selected set still
  // covers the battle target: pass rate = |{max(6,dmin)..10}| / |{dmin..10}|.
  const int dmin = cfg.mock_fleet.options.difficulty_min;
  const double pass_rate =
      static_cast<double>(10 - std::max(6, dmin) + 1) / (10 - dmin + 1);
  const std::size_t competitors = skills.size();
  const std::size_t raw_target = static_cast<std::size_t>(
      std::ceil(base.sim.battles / pass_rate * 1.18));
  cfg.mining.temperatures = {1.0};
  cfg.mining.top_ps = {1.0};
  cfg.mining.samples_per_config =
      static_cast<int>((raw_target + competitors - 1) / competitors);
  cfg.mining.workers = 1;
  cfg.curation.near_dup_threshold = 1.0;  // exact-duplicate removal only
  cfg.curation.k = 0;
  cfg.arena.pairing_mode = PairingMode::single;
  cfg.arena.rounds_cap = base.sim.battles;
  cfg.arena.workers = 1;

  std::filesystem::remove_all(scratch_dir);
  SimOutcome outcome;
  {
    // The rating pipeline end to end; dataset emission is not part of the
    // ranking-agreement measurement.
    Pipeline pipeline(cfg);
    pipeline.run_mine();
    pipeline.run_curate();
    pipeline.run_battle();
    pipeline.run_score();

    outcome.battles_run = pipeline.checkpoint().counts.at("battles");
    const EloTable table = pipeline.load_elo_table();

    std::vector<std::pair<double, std::string>> by_skill, by_elo;
    const auto experts = statistical_fleet(skills);
    for (const auto& e : experts) {
      if (e.role != ModelRole::competitor) continue;
      by_skill.emplace_back(e.latent_skill, e.model_id);
      by_elo.emplace_back(table.rating(e.model_id), e.model_id);
    }
    auto best_first = [](std::vector<std::pair<double, std::string>>& v) {
      std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) {
        return x.first != y.first ? x.first > y.first : x.second < y.second;
      });
    };
    best_first(by_skill);
    best_first(by_elo);
    for (const auto& [skill, id] : by_skill) outcome.true_ranking.push_back(id);
    for (const auto& [rating, id] : by_elo) outcome.elo_ranking.push_back(id);
  }
  outcome.kendall_tau = kendall_tau(outcome.true_ranking, outcome.elo_ranking);
  std::filesystem::remove_all(scratch_dir);
  return outcome;
}

struct SimSuite {
  std::size_t seeds = 0;
  std::size_t exact_match = 0;
  double mean_kendall_tau = 0.0;
  double mean_battles_run = 0.0;
  std::vector<SimOutcome> outcomes;

  nlohmann::json to_json() const {
    return {{"kendall_tau", mean_kendall_tau},
            {"exact_match", exact_match},
            {"battles_run", mean_battles_run},
            {"seeds", seeds}};
  }
};

// Runs cfg.sim.seeds independent seeded simulations, in parallel.
inline SimSuite run_simulation_suite(const RunConfig& cfg,
                                     const std::filesystem::path& scratch_base) {
  SimSuite suite;
  suite.seeds = cfg.sim.seeds;
  suite.outcomes.resize(cfg.sim.seeds);

  std::size_t threads = cfg.sim.threads;
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  parallel_for(cfg.sim.seeds, threads, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(cfg.rng_seed, "sim-seed", i);
    suite.outcomes[i] = simulate(cfg.sim.skills, cfg, seed,
                                 scratch_base / ("seed_" + std::to_string(i)));
  });

  double tau_sum = 0.0, battles_sum = 0.0;
  for (const auto& o : suite.outcomes) {
    if (o.exact_match()) ++suite.exact_match;
    tau_sum += o.kendall_tau;
    battles_sum += static_cast<double>(o.battles_run);
  }
  if (suite.seeds > 0) {
    suite.mean_kendall_tau = tau_sum / suite.seeds;
    suite.mean_battles_run = battles_sum / suite.seeds;
  }
  return suite;
}

}  // namespace arena
