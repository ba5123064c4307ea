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

#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "arena/elo.hpp"
#include "arena/rng.hpp"

using arena::EloTable;
using arena::expected_score;

TEST_CASE("expected_score symmetry and the 400-point-gap case") {
  auto [even_a, even_b] = expected_score(1000.0, 1000.0);
  CHECK(even_a == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(even_b == doctest::Approx(0.5).epsilon(1e-15));

  // 10^((1000-1400)/400) = 0.1, so the favorite expects 1/1.1 = 10/11.
  auto [fav, dog] = expected_score(1400.0, 1000.0);
  CHECK(std::abs(fav - 10.0 / 11.0) < 1e-12);
  CHECK(std::abs(dog - 1.0 / 11.0) < 1e-12);
}

TEST_CASE("expected_score pairs sum to 1 within 1e-12") {
  arena::Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double a = 400.0 + rng.next_unit() * 1600.0;
    const double b = 400.0 + rng.next_unit() * 1600.0;
    auto [x_a, x_b] = expected_score(a, b);
    CHECK(std::abs(x_a + x_b - 1.0) < 1e-12);
  }
}

TEST_CASE("actual_score encodes win/draw/loss from the vote majority") {
  arena::VoteTally tally;
  tally.t_attacker = 3;
  tally.t_defender = 0;
  CHECK(arena::actual_score(tally) == std::pair{1.0, 0.0});
  tally.t_attacker = 1;
  tally.t_defender = 1;
  CHECK(arena::actual_score(tally) == std::pair{0.5, 0.5});
  tally.t_attacker = 0;
  tally.t_defender = 2;
  CHECK(arena::actual_score(tally) == std::pair{0.0, 1.0});
}

TEST_CASE("update moves winner up by K * (1 - 0.5) at equal ratings") {
  EloTable table({"a", "b", "c"}, 40.0, 1000.0);
  table.update("battle-1", "a", "b", 1.0, 0.0);
  CHECK(table.rating("a") == doctest::Approx(1020.0).epsilon(1e-12));
  CHECK(table.rating("b") == doctest::Approx(980.0).epsilon(1e-12));
  CHECK(table.rating("c") == 1000.0);

  // Draw at equal ratings changes nothing.
  EloTable draw({"a", "b"}, 40.0, 1000.0);
  draw.update("battle-2", "a", "b", 0.5, 0.5);
  CHECK(draw.rating("a") == 1000.0);
  CHECK(draw.rating("b") == 1000.0);
}

TEST_CASE("update validates its inputs") {
  EloTable table({"a", "b"}, 40.0, 1000.0);
  CHECK_THROWS_AS(table.update("x", "a", "zz", 1.0, 0.0), arena::UnknownModel);
  CHECK_THROWS_AS(table.update("x", "a", "a", 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(table.update("x", "a", "b", 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(table.rating("zz"), arena::UnknownModel);
}

TEST_CASE("rating total is conserved over 10^4 random updates") {
  const std::vector<std::string> roster = {"a", "b", "c", "d", "e"};
  EloTable table(roster, 40.0, 1000.0);
  const double initial_total = table.total_rating();
  CHECK(initial_total == 5000.0);

  arena::Rng rng(20260808);
  for (int i = 0; i < 10000; ++i) {
    std::size_t ia = rng.below(roster.size());
    std::size_t ib = rng.below(roster.size() - 1);
    if (ib >= ia) ++ib;
    const double pick = rng.next_unit();
    const double s_a = pick < 0.4 ? 1.0 : (pick < 0.8 ? 0.0 : 0.5);
    table.update("b" + std::to_string(i), roster[ia], roster[ib], s_a, 1.0 - s_a);
  }
  CHECK(std::abs(table.total_rating() - initial_total) < 1e-9);
  CHECK(table.history().size() == 20000);
}

TEST_CASE("history replays to the current table bit-for-bit") {
  const std::vector<std::string> roster = {"a", "b", "c"};
  EloTable table(roster, 40.0, 1000.0);
  arena::Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    std::size_t ia = rng.below(3);
    std::size_t ib = (ia + 1 + rng.below(2)) % 3;
    const double s_a = rng.coin() ? 1.0 : 0.0;
    table.update("b" + std::to_string(i), roster[ia], roster[ib], s_a, 1.0 - s_a);
  }
  EloTable replayed = EloTable::replay(roster, 40.0, 1000.0, table.history());
  for (const auto& id : roster) {
    CHECK(replayed.rating(id) == table.rating(id));  // exact
  }
}

TEST_CASE("final_score blends rating expectation with vote share") {
  EloTable table({"a", "b"}, 40.0, 1000.0);
  // Equal ratings: X_elo = 0.5; alpha 0.7 with a unanimous local win.
  auto scored = arena::final_score("a", "i1", {{"b", 1.0, std::nullopt}}, table, 0.7);
  CHECK(scored.final_score == doctest::Approx(0.65).epsilon(1e-12));
  REQUIRE(scored.components.size() == 1);
  CHECK(scored.components[0].x_elo == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(scored.components[0].x_local == 1.0);

  // Degenerate blends.
  auto local_only = arena::final_score("a", "i1", {{"b", 0.75, std::nullopt}}, table, 0.0);
  CHECK(local_only.final_score == doctest::Approx(0.75).epsilon(1e-12));
  auto elo_only = arena::final_score("a", "i1", {{"b", 0.0, std::nullopt}}, table, 1.0);
  CHECK(elo_only.final_score == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("final_score is nondecreasing in own rating") {
  const double alpha = 0.7;
  double last = -1.0;
  for (double own = 800.0; own <= 1200.0; own += 10.0) {
    EloTable table({"a", "b"}, 40.0, 1000.0);
    // Force the ratings directly through updates is awkward; build a fresh
    // table and use the frozen-expectation path instead.
    const double x_elo = expected_score(own, 1000.0).first;
    auto scored =
        arena::final_score("a", "i", {{"b", 0.25, x_elo}}, table, alpha);
    CHECK(scored.final_score >= last - 1e-15);
    last = scored.final_score;
  }
}

TEST_CASE("final_score mean vs raw sum modes") {
  EloTable table({"a", "b", "c"}, 40.0, 1000.0);
  std::vector<arena::ContestedPairing> contested = {{"b", 1.0, std::nullopt},
                                                    {"c", 0.0, std::nullopt}};
  auto mean = arena::final_score("a", "i", contested, table, 0.5, arena::SumMode::mean);
  auto raw = arena::final_score("a", "i", contested, table, 0.5, arena::SumMode::raw);
  CHECK(raw.final_score == doctest::Approx(2.0 * mean.final_score).epsilon(1e-12));

  CHECK_THROWS_AS(arena::final_score("a", "i", {}, table, 0.5), arena::NothingContested);
}
