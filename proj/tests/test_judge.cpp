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

#include <string>
#include <vector>

#include "arena/judge.hpp"
#include "arena/mock_fleet.hpp"

using arena::parse_verdict;
using arena::PresentedOrder;
using arena::Verdict;

namespace {

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + 1)) {
    ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("judge prompt carries the arena markers and both answers in order") {
  const std::string prompt =
      arena::render_judge_prompt("sum two ints", "first answer body", "second answer body");
  CHECK(prompt.find("[[The Start of Assistant A's Answer]]") != std::string::npos);
  CHECK(prompt.find("[[Tie]]") != std::string::npos);
  CHECK(count_occurrences(prompt, "sum two ints") == 1);

  const auto pos_first = prompt.find("first answer body");
  const auto pos_second = prompt.find("second answer body");
  REQUIRE(pos_first != std::string::npos);
  REQUIRE(pos_second != std::string::npos);
  CHECK(pos_first < pos_second);

  // Swapping the answers changes only the two answer slots.
  const std::string swapped =
      arena::render_judge_prompt("sum two ints", "second answer body", "first answer body");
  CHECK(swapped != prompt);
  CHECK(swapped.size() == prompt.size());
  CHECK(count_occurrences(swapped, "second answer body") == 1);
}

TEST_CASE("parse_verdict takes the last marker") {
  CHECK(parse_verdict("...explanation... [[A]]") == Verdict::A);
  CHECK(parse_verdict("[[A]] is tempting but [[B]]") == Verdict::B);
  CHECK(parse_verdict("no verdict here") == Verdict::Unparseable);
  CHECK(parse_verdict("[[Tie]]") == Verdict::Tie);
  CHECK(parse_verdict("[[B]] then again [[Tie]] after all") == Verdict::Tie);
  CHECK(parse_verdict("") == Verdict::Unparseable);
}

TEST_CASE("finalize_tally computes vote shares with the 0.5 fallback") {
  arena::VoteTally tally;
  tally.t_attacker = 2;
  tally.t_defender = 1;
  arena::finalize_tally(tally);
  CHECK(tally.local_attacker == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(tally.local_defender == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(tally.local_attacker + tally.local_defender == doctest::Approx(1.0).epsilon(1e-12));

  arena::VoteTally ties_only;
  ties_only.ties = 3;
  arena::finalize_tally(ties_only);
  CHECK(ties_only.local_attacker == 0.5);
  CHECK(ties_only.local_defender == 0.5);
}

TEST_CASE("presentation order is a fair seeded coin") {
  std::size_t attacker_first = 0;
  const std::size_t n = 2000;
  for (std::size_t i = 0; i < n; ++i) {
    const auto order =
        arena::presentation_order(20260808, "b" + std::to_string(i), "judge-1");
    if (order == PresentedOrder::attacker_first) ++attacker_first;
  }
  const double fraction = static_cast<double>(attacker_first) / n;
  CHECK(fraction > 0.45);
  CHECK(fraction < 0.55);
}

namespace {

// Scripted panel: fixed reply per judge, independent of the prompt.
arena::MockFleet scripted_panel(const std::vector<std::pair<std::string, std::string>>& judges) {
  std::vector<arena::SyntheticExpert> experts;
  for (const auto& [id, reply] : judges) {
    arena::SyntheticExpert e;
    e.model_id = id;
    e.behavior = arena::SyntheticExpert::Behavior::scripted;
    e.canned = {reply, reply};  // the retry sees the same verdict
    experts.push_back(std::move(e));
  }
  return arena::MockFleet(std::move(experts), {});
}

}  // namespace

TEST_CASE("collect_votes de-shuffles positional verdicts back to competitors") {
  // judge-pos1 always prefers the first presented answer, judge-pos2 the
  // second, judge-tie always ties.
  auto fleet = scripted_panel({{"judge-pos1", "verdict: [[A]]"},
                               {"judge-pos2", "verdict: [[B]]"},
                               {"judge-tie", "verdict: [[Tie]]"}});
  arena::LoopbackTransport transport(fleet);
  arena::Gateway gateway(transport);
  const auto judges = fleet.roster().models;

  const std::uint64_t seed = 77;
  const std::string battle_id = "b000042-deadbeef";
  auto tally = arena::collect_votes(gateway, battle_id, "instruction text", "attacker answer",
                                    "defender answer", judges, seed);

  // Recompute the expectation from the published shuffle rule.
  int expect_attacker = 0, expect_defender = 0;
  const auto order1 = arena::presentation_order(seed, battle_id, "judge-pos1");
  (order1 == PresentedOrder::attacker_first ? expect_attacker : expect_defender) += 1;
  const auto order2 = arena::presentation_order(seed, battle_id, "judge-pos2");
  (order2 == PresentedOrder::attacker_first ? expect_defender : expect_attacker) += 1;

  CHECK(tally.t_attacker == expect_attacker);
  CHECK(tally.t_defender == expect_defender);
  CHECK(tally.ties == 1);
  CHECK(tally.votes.size() == 3);
  CHECK(tally.local_attacker + tally.local_defender == doctest::Approx(1.0));
}

TEST_CASE("collect_votes: all ties yield symmetric locals") {
  auto fleet = scripted_panel({{"j1", "[[Tie]]"}, {"j2", "[[Tie]]"}, {"j3", "[[Tie]]"}});
  arena::LoopbackTransport transport(fleet);
  arena::Gateway gateway(transport);
  auto tally = arena::collect_votes(gateway, "b1", "instr", "ra", "rd",
                                    fleet.roster().models, 1);
  CHECK(tally.t_attacker == 0);
  CHECK(tally.t_defender == 0);
  CHECK(tally.ties == 3);
  CHECK(tally.local_attacker == 0.5);
  CHECK(tally.local_defender == 0.5);
}

TEST_CASE("collect_votes retries unparseable verdicts once, then drops them") {
  std::vector<arena::SyntheticExpert> experts;
  arena::SyntheticExpert recovers;
  recovers.model_id = "recovers";
  recovers.behavior = arena::SyntheticExpert::Behavior::scripted;
  recovers.canned = {"no verdict at all", "after thought: [[A]]"};
  experts.push_back(recovers);
  arena::SyntheticExpert hopeless;
  hopeless.model_id = "hopeless";
  hopeless.behavior = arena::SyntheticExpert::Behavior::scripted;
  hopeless.canned = {"nothing", "still nothing"};
  experts.push_back(hopeless);
  arena::MockFleet fleet(std::move(experts), {});
  arena::LoopbackTransport transport(fleet);
  arena::Gateway gateway(transport);

  auto tally = arena::collect_votes(gateway, "b9", "instr", "ra", "rd",
                                    fleet.roster().models, 3);
  CHECK(tally.votes.size() == 1);  // hopeless was dropped
  CHECK(tally.decided_votes() == 1);
}

TEST_CASE("order shuffling neutralizes a pure position preference") {
  // A judge that always prefers the first presented answer should decide for
  // the attacker about half the time once presentation order is shuffled.
  auto fleet = scripted_panel({{"position-one", "[[A]]"}});
  arena::LoopbackTransport transport(fleet);
  arena::Gateway gateway(transport);
  const auto judges = fleet.roster().models;

  double attacker_share_sum = 0.0;
  const int battles = 2000;
  for (int i = 0; i < battles; ++i) {
    auto tally = arena::collect_votes(gateway, "b" + std::to_string(i), "instr", "ra", "rd",
                                      judges, 20260808);
    attacker_share_sum += tally.local_attacker;
  }
  const double mean_share = attacker_share_sum / battles;
  CHECK(mean_share > 0.45);
  CHECK(mean_share < 0.55);
}

TEST_CASE("collect_votes raises NoValidVotes when every judge is unparseable") {
  auto fleet = scripted_panel({{"j1", "???"}, {"j2", "???"}});
  arena::LoopbackTransport transport(fleet);
  arena::Gateway gateway(transport);
  CHECK_THROWS_AS(arena::collect_votes(gateway, "b2", "instr", "ra", "rd",
                                       fleet.roster().models, 1),
                  arena::NoValidVotes);
}
