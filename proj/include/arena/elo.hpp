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

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "arena/errors.hpp"
#include "arena/judge.hpp"

namespace arena {

// Expected win probabilities of two rated players:
//   X_a = 1 / (1 + 10^((r_b - r_a) / 400)),  X_b symmetric.
// The pair sums to 1 up to floating-point rounding.
inline std::pair<double, double> expected_score(double r_a, double r_b) {
  const double x_a = 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / 400.0));
  const double x_b = 1.0 / (1.0 + std::pow(10.0, (r_a - r_b) / 400.0));
  return {x_a, x_b};
}

// Battle outcome by majority of decided votes: 1 for a win, 0.5 for a draw,
// 0 for a loss.
inline std::pair<double, double> actual_score(const VoteTally& tally) {
  if (tally.t_attacker > tally.t_defender) return {1.0, 0.0};
  if (tally.t_attacker < tally.t_defender) return {0.0, 1.0};
  return {0.5, 0.5};
}

struct EloDelta {
  std::string battle_id;
  std::string model_id;
  double delta = 0.0;
};

// Global ratings. Updates are zero-sum, so the total rating stays at
// |roster| * initial_rating; the history replays to the current table.
class EloTable {
 public:
  EloTable(const std::vector<std::string>& roster, double k_factor, double initial_rating)
      : k_factor_(k_factor), initial_rating_(initial_rating) {
    if (k_factor <= 0.0) throw std::invalid_argument("k_factor must be > 0");
    for (const auto& id : roster) ratings_[id] = initial_rating;
    if (ratings_.size() != roster.size()) {
      throw std::invalid_argument("duplicate model ids in roster");
    }
  }

  double rating(const std::string& id) const {
    auto it = ratings_.find(id);
    if (it == ratings_.end()) throw UnknownModel("no rating for " + id);
    return it->second;
  }

  const std::map<std::string, double>& ratings() const { return ratings_; }
  double k_factor() const { return k_factor_; }
  double initial_rating() const { return initial_rating_; }
  const std::vector<EloDelta>& history() const { return history_; }

  double total_rating() const {
    double sum = 0.0;
    for (const auto& [id, r] : ratings_) sum += r;
    return sum;
  }

  // One battle outcome. s_a + s_b must equal 1 (win/draw/loss encoding);
  // expectations are evaluated before either rating moves.
  void update(const std::string& battle_id, const std::string& a, const std::string& b,
              double s_a, double s_b) {
    if (a == b) throw std::invalid_argument("elo update: a == b");
    if (std::abs(s_a + s_b - 1.0) > 1e-12) {
      throw std::invalid_argument("elo update: scores must sum to 1");
    }
    auto it_a = ratings_.find(a);
    auto it_b = ratings_.find(b);
    if (it_a == ratings_.end()) throw UnknownModel("elo update: unknown model " + a);
    if (it_b == ratings_.end()) throw UnknownModel("elo update: unknown model " + b);

    const auto [x_a, x_b] = expected_score(it_a->second, it_b->second);
    const double delta_a = k_factor_ * (s_a - x_a);
    const double delta_b = k_factor_ * (s_b - x_b);
    it_a->second += delta_a;
    it_b->second += delta_b;
    history_.push_back({battle_id, a, delta_a});
    history_.push_back({battle_id, b, delta_b});
  }

  // Restores a table from a persisted ratings snapshot.
  static EloTable from_snapshot(const std::map<std::string, double>& ratings, double k_factor,
                                double initial_rating) {
    std::vector<std::string> roster;
    for (const auto& [id, r] : ratings) roster.push_back(id);
    EloTable table(roster, k_factor, initial_rating);
    table.ratings_ = ratings;
    return table;
  }

  // Rebuilds a table from a recorded delta history, in order.
  static EloTable replay(const std::vector<std::string>& roster, double k_factor,
                         double initial_rating, const std::vector<EloDelta>& history) {
    EloTable table(roster, k_factor, initial_rating);
    for (const auto& d : history) {
      auto it = table.ratings_.find(d.model_id);
      if (it == table.ratings_.end()) throw UnknownModel("replay: unknown model " + d.model_id);
      it->second += d.delta;
    }
    table.history_ = history;
    return table;
  }

 private:
  std::map<std::string, double> ratings_;
  double k_factor_;
  double initial_rating_;
  std::vector<EloDelta> history_;
};

// How per-opponent components combine into the final score: a mean keeps
// scores comparable between responses with different numbers of contested
// pairings; raw reproduces the plain sum.
enum class SumMode { mean, raw };

struct ScoredComponent {
  std::string opponent_id;
  double x_local = 0.0;  // vote share against this opponent
  double x_elo = 0.0;    // rating-based expectation against this opponent
};

struct ScoredResponse {
  std::string instruction_id;
  std::string model_id;
  std::string response_text;
  double final_score = 0.0;
  std::vector<ScoredComponent> components;
};

struct ContestedPairing {
  std::string opponent_id;
  double x_local = 0.0;
  // Rating expectation frozen at battle time; when absent the fusion reads
  // the table it is given (the end-of-run snapshot in the default mode).
  std::optional<double> x_elo_at_battle;
};

// Fuses the global rating signal with per-battle vote shares:
// each contested opponent contributes alpha * X_elo + (1 - alpha) * x_local.
inline ScoredResponse final_score(const std::string& model_id,
                                  const std::string& instruction_id,
                                  const std::vector<ContestedPairing>& contested,
                                  const EloTable& table, double alpha,
                                  SumMode sum_mode = SumMode::mean) {
  if (contested.empty()) {
    throw NothingContested("final_score: " + model_id + " has no contested pairing on " +
                           instruction_id);
  }
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must be in [0,1]");

  ScoredResponse out;
  out.instruction_id = instruction_id;
  out.model_id = model_id;
  const double own_rating = table.rating(model_id);
  double sum = 0.0;
  for (const auto& pairing : contested) {
    ScoredComponent c;
    c.opponent_id = pairing.opponent_id;
    c.x_local = pairing.x_local;
    c.x_elo = pairing.x_elo_at_battle
                  ? *pairing.x_elo_at_battle
                  : expected_score(own_rating, table.rating(pairing.opponent_id)).first;
    sum += alpha * c.x_elo + (1.0 - alpha) * c.x_local;
    out.components.push_back(std::move(c));
  }
  out.final_score =
      sum_mode == SumMode::mean ? sum / static_cast<double>(contested.size()) : sum;
  return out;
}

}  // namespace arena
