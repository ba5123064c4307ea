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

#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "arena/event_log.hpp"
#include "arena/mock_fleet.hpp"
#include "arena/scheduler.hpp"

namespace fs = std::filesystem;

using arena::build_schedule;
using arena::PairingMode;

namespace {

arena::Roster roster_of(const std::vector<std::string>& ids) {
  arena::Roster roster;
  for (const auto& id : ids) {
    arena::ModelSpec spec;
    spec.model_id = id;
    roster.models.push_back(spec);
  }
  return roster;
}

std::map<std::string, std::vector<std::string>> instructions_for(
    const std::vector<std::string>& attackers, std::size_t per_attacker) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& a : attackers) {
    for (std::size_t i = 0; i < per_attacker; ++i) {
      out[a].push_back("instr-" + a + "-" + std::to_string(i));
    }
  }
  return out;
}

struct Balance {
  std::map<std::string, long> attacks, defenses;
};

Balance count_roles(const std::vector<arena::BattlePlan>& schedule) {
  Balance b;
  for (const auto& plan : schedule) {
    b.attacks[plan.attacker] += 1;
    b.defenses[plan.defender] += 1;
  }
  return b;
}

}  // namespace

TEST_CASE("single mode: roster of 3 with 2 instructions each balances 2/2") {
  auto roster = roster_of({"a", "b", "c"});
  auto schedule =
      build_schedule(roster, instructions_for({"a", "b", "c"}, 2), PairingMode::single, 1000);
  REQUIRE(schedule.size() == 6);
  auto balance = count_roles(schedule);
  for (const auto& id : {"a", "b", "c"}) {
    CHECK(balance.attacks[id] == 2);
    CHECK(balance.defenses[id] == 2);
  }
  for (const auto& plan : schedule) {
    CHECK(plan.attacker != plan.defender);
    REQUIRE(plan.judges.size() == 1);
    CHECK(plan.judges[0] != plan.attacker);
    CHECK(plan.judges[0] != plan.defender);
  }
}

TEST_CASE("round_robin: one instruction fans out to every other competitor") {
  auto roster = roster_of({"a", "b", "c", "d", "e"});
  std::map<std::string, std::vector<std::string>> instructions = {{"a", {"instr-1"}}};
  auto schedule = build_schedule(roster, instructions, PairingMode::round_robin, 1000);
  REQUIRE(schedule.size() == 4);
  std::set<std::string> defenders;
  for (const auto& plan : schedule) {
    CHECK(plan.attacker == "a");
    defenders.insert(plan.defender);
    REQUIRE(plan.judges.size() == 3);
    for (const auto& j : plan.judges) {
      CHECK(j != plan.attacker);
      CHECK(j != plan.defender);
    }
  }
  CHECK(defenders == std::set<std::string>{"b", "c", "d", "e"});
}

TEST_CASE("roster of 2 leaves no judge and is rejected") {
  auto roster = roster_of({"a", "b"});
  CHECK_THROWS_AS(
      build_schedule(roster, instructions_for({"a"}, 1), PairingMode::single, 10),
      arena::RosterTooSmall);
}

TEST_CASE("a judge_only member makes a 2-competitor roster viable") {
  auto roster = roster_of({"a", "b", "referee"});
  roster.models[2].role = arena::ModelRole::judge_only;
  auto schedule =
      build_schedule(roster, instructions_for({"a", "b"}, 3), PairingMode::single, 100);
  REQUIRE(schedule.size() == 6);
  for (const auto& plan : schedule) {
    CHECK(plan.defender != "referee");
    CHECK(plan.attacker != "referee");
    CHECK(plan.judges == std::vector<std::string>{"referee"});
  }
}

TEST_CASE("balance holds at scale and schedules are deterministic") {
  const std::vector<std::string> ids = {"a", "b", "c", "d", "e"};
  auto roster = roster_of(ids);
  auto instructions = instructions_for(ids, 200);
  auto schedule = build_schedule(roster, instructions, PairingMode::single, 100000);
  REQUIRE(schedule.size() == 1000);

  auto balance = count_roles(schedule);
  for (const auto& id : ids) {
    CHECK(std::abs(balance.attacks[id] - balance.defenses[id]) <= 1);
  }
  std::size_t judge_overlap = 0;
  for (const auto& plan : schedule) {
    for (const auto& j : plan.judges) {
      if (j == plan.attacker || j == plan.defender) ++judge_overlap;
    }
  }
  CHECK(judge_overlap == 0);

  auto again = build_schedule(roster, instructions, PairingMode::single, 100000);
  REQUIRE(again.size() == schedule.size());
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    CHECK(again[i].battle_id == schedule[i].battle_id);
    CHECK(again[i].attacker == schedule[i].attacker);
    CHECK(again[i].defender == schedule[i].defender);
  }
}

TEST_CASE("unequal attack loads still balance attacks against defenses") {
  auto roster = roster_of({"a", "b", "c", "d"});
  std::map<std::string, std::vector<std::string>> instructions;
  const std::map<std::string, std::size_t> load = {{"a", 10}, {"b", 6}, {"c", 4}, {"d", 8}};
  for (const auto& [id, n] : load) {
    for (std::size_t i = 0; i < n; ++i) {
      instructions[id].push_back("instr-" + id + std::to_string(i));
    }
  }
  auto schedule = build_schedule(roster, instructions, PairingMode::single, 1000);
  REQUIRE(schedule.size() == 28);
  auto balance = count_roles(schedule);
  for (const auto& [id, n] : load) {
    CHECK(balance.attacks[id] == static_cast<long>(n));
    CHECK(std::abs(balance.attacks[id] - balance.defenses[id]) <= 1);
  }
}

TEST_CASE("rounds_cap truncates by interleaving across attackers") {
  auto roster = roster_of({"a", "b", "c"});
  auto schedule =
      build_schedule(roster, instructions_for({"a", "b", "c"}, 10), PairingMode::single, 7);
  REQUIRE(schedule.size() == 7);
  // Interleaved attacker order: a b c a b c a.
  const std::vector<std::string> expected = {"a", "b", "c", "a", "b", "c", "a"};
  for (std::size_t i = 0; i < 7; ++i) CHECK(schedule[i].attacker == expected[i]);
}

namespace {

arena::MockFleet battle_fleet(double attacker_skill, double defender_skill,
                              bool defender_dead = false) {
  std::vector<arena::SyntheticExpert> experts;
  const std::vector<std::pair<std::string, double>> setup = {
      {"att", attacker_skill}, {"def", defender_skill}, {"j1", 0.5}, {"j2", 0.5}, {"j3", 0.5}};
  for (const auto& [id, skill] : setup) {
    arena::SyntheticExpert e;
    e.model_id = id;
    e.latent_skill = skill;
    e.behavior = arena::SyntheticExpert::Behavior::statistical;
    if (defender_dead && id == "def") e.always_fail = true;
    experts.push_back(std::move(e));
  }
  arena::MockFleetOptions options;
  options.quality_noise = 0.0;   // qualities equal the latent skills
  options.vote_sharpness = 10.0; // saturates the vote probability
  options.retry_backoff = 0.001;
  return arena::MockFleet(std::move(experts), options);
}

arena::BattlePlan plan_for(const arena::Instruction& instr) {
  arena::BattlePlan plan;
  plan.battle_id = "b000000-" + instr.instruction_id.substr(0, 8);
  plan.instruction_id = instr.instruction_id;
  plan.attacker = "att";
  plan.defender = "def";
  plan.judges = {"j1", "j2", "j3"};
  return plan;
}

}  // namespace

TEST_CASE("run_battle: a clearly better attacker sweeps the panel 3-0") {
  auto fleet = battle_fleet(0.95, 0.05);
  arena::LoopbackTransport transport(fleet);
  arena::Gateway gateway(transport);

  auto instr = arena::Instruction::mined("solve the task", "att", {});
  instr.advance_status(arena::InstructionStatus::deduped);
  instr.advance_status(arena::InstructionStatus::filtered);

  auto battle = arena::run_battle(gateway, fleet.roster(), plan_for(instr), instr, 9);
  CHECK(battle.status == arena::Battle::Status::decided);
  REQUIRE(battle.tally.has_value());
  CHECK(battle.tally->t_attacker == 3);
  CHECK(battle.tally->t_defender == 0);
  CHECK(battle.tally->local_attacker == 1.0);
}

TEST_CASE("run_battle requires a curated instruction") {
  auto fleet = battle_fleet(0.5, 0.5);
  arena::LoopbackTransport transport(fleet);
  arena::Gateway gateway(transport);
  auto instr = arena::Instruction::mined("raw one", "att", {});
  CHECK_THROWS_AS(arena::run_battle(gateway, fleet.roster(), plan_for(instr), instr, 9),
                  std::logic_error);
}

TEST_CASE("run_battle aborts when a competitor endpoint is dead, nothing logged") {
  auto fleet = battle_fleet(0.9, 0.1, /*defender_dead=*/true);
  arena::LoopbackTransport transport(fleet);
  arena::Gateway gateway(transport);

  auto instr = arena::Instruction::mined("solve the task", "att", {});
  instr.advance_status(arena::InstructionStatus::filtered);

  auto log_path = fs::temp_directory_path() / "arena_sched_test_battles.jsonl";
  fs::remove(log_path);
  {
    arena::EventLog log(log_path);
    CHECK_THROWS_AS(
        arena::run_battle(gateway, fleet.roster(), plan_for(instr), instr, 9, &log),
        arena::BattleAborted);
  }
  CHECK(arena::EventLog::read_all(log_path).empty());
  fs::remove(log_path);
}

TEST_CASE("run_battle replays byte-identically on a fresh fleet with the same seed") {
  auto run_once = [] {
    auto fleet = battle_fleet(0.7, 0.3);
    arena::LoopbackTransport transport(fleet);
    arena::Gateway gateway(transport);
    auto instr = arena::Instruction::mined("solve the task", "att", {});
    instr.advance_status(arena::InstructionStatus::filtered);
    auto battle = arena::run_battle(gateway, fleet.roster(), plan_for(instr), instr, 123, nullptr, 5);
    return arena::detail::battle_to_json(battle).dump();
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("battle records round-trip through JSON") {
  auto fleet = battle_fleet(0.8, 0.2);
  arena::LoopbackTransport transport(fleet);
  arena::Gateway gateway(transport);
  auto instr = arena::Instruction::mined("serialize me", "att", {});
  instr.advance_status(arena::InstructionStatus::filtered);
  auto battle = arena::run_battle(gateway, fleet.roster(), plan_for(instr), instr, 5, nullptr, 7);

  auto json = arena::detail::battle_to_json(battle);
  auto back = arena::detail::battle_from_json(json);
  CHECK(arena::detail::battle_to_json(back).dump() == json.dump());
  CHECK(back.completed_at == 7);
  CHECK(back.plan.judges == battle.plan.judges);
  REQUIRE(back.tally.has_value());
  CHECK(back.tally->t_attacker == battle.tally->t_attacker);
  CHECK(back.tally->votes.size() == battle.tally->votes.size());
}
