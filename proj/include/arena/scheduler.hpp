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
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arena/elo.hpp"
#include "arena/errors.hpp"
#include "arena/gateway.hpp"
#include "arena/instruction.hpp"
#include "arena/judge.hpp"

namespace arena {

enum class PairingMode { single, round_robin };

inline const char* to_string(PairingMode m) {
  return m == PairingMode::single ? "single" : "round_robin";
}

inline PairingMode pairing_mode_from(const std::string& s) {
  if (s == "single") return PairingMode::single;
  if (s == "round_robin") return PairingMode::round_robin;
  throw std::invalid_argument("unknown pairing_mode: " + s);
}

struct BattlePlan {
  std::string battle_id;
  std::string instruction_id;
  std::string attacker;
  std::string defender;
  std::vector<std::string> judges;  // always roster minus the two competitors
  PairingMode pairing_mode = PairingMode::single;
};

struct Battle {
  enum class Status { decided, undecided, aborted };

  BattlePlan plan;
  std::string response_attacker;
  std::string response_defender;
  std::optional<VoteTally> tally;  // present iff decided
  Status status = Status::decided;
  std::string abort_reason;
  // Logical commit index in schedule order; keeps records reproducible.
  std::uint64_t completed_at = 0;
};

inline const char* to_string(Battle::Status s) {
  switch (s) {
    case Battle::Status::decided: return "decided";
    case Battle::Status::undecided: return "undecided";
    case Battle::Status::aborted: return "aborted";
  }
  return "?";
}

namespace detail {

inline std::string make_battle_id(std::size_t index, const std::string& instruction_id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "b%06zu", index);
  return std::string(buf) + "-" + instruction_id.substr(0, 8);
}

}  // namespace detail

// Builds the full battle schedule. Attackers are interleaved round-robin in
// lexicographic order (one instruction each per pass) so a rounds_cap
// truncation stays even-handed. In single mode the defender is the
// competitor with the largest remaining deficit between its scheduled
// attacks and the defenses assigned so far — ties broken by fewest total
// battles, then lexicographic id — which keeps every competitor's
// |attacks - defenses| within 1 whenever the attack counts allow it.
// Judges are the rest of the roster, so no competitor ever judges itself.
inline std::vector<BattlePlan> build_schedule(
    const Roster& roster,
    const std::map<std::string, std::vector<std::string>>& instructions_by_attacker,
    PairingMode mode, std::size_t rounds_cap) {
  if (rounds_cap < 1) throw std::invalid_argument("rounds_cap must be >= 1");
  const std::vector<std::string> all_ids = roster.ids();
  const std::vector<std::string> competitors = roster.competitor_ids();
  if (all_ids.size() < 3) {
    throw RosterTooSmall("need at least 3 roster models so every battle has a judge");
  }
  if (competitors.size() < 2) {
    throw RosterTooSmall("need at least 2 competitors");
  }

  std::vector<std::string> attackers;
  for (const auto& [attacker, list] : instructions_by_attacker) {
    if (std::find(competitors.begin(), competitors.end(), attacker) == competitors.end()) {
      throw std::invalid_argument("instructions attributed to non-competitor: " + attacker);
    }
    if (!list.empty()) attackers.push_back(attacker);
  }
  std::sort(attackers.begin(), attackers.end());

  // Pass 1: the capped, interleaved (attacker, instruction) sequence.
  struct Slot {
    const std::string* attacker;
    const std::string* instruction;
  };
  std::vector<Slot> slots;
  std::size_t longest = 0;
  for (const auto& a : attackers) {
    longest = std::max(longest, instructions_by_attacker.at(a).size());
  }
  const std::size_t battles_per_slot =
      mode == PairingMode::round_robin ? competitors.size() - 1 : 1;
  const std::size_t slots_needed = (rounds_cap + battles_per_slot - 1) / battles_per_slot;
  for (std::size_t row = 0; row < longest && slots.size() < slots_needed; ++row) {
    for (const auto& a : attackers) {
      if (slots.size() >= slots_needed) break;
      const auto& list = instructions_by_attacker.at(a);
      if (row >= list.size()) continue;
      slots.push_back({&a, &list[row]});
    }
  }

  std::map<std::string, std::size_t> planned_attacks;
  for (const auto& slot : slots) planned_attacks[*slot.attacker] += 1;

  std::vector<BattlePlan> schedule;
  std::map<std::string, std::size_t> attacks_so_far, defenses_so_far;

  auto judges_for = [&](const std::string& att, const std::string& def) {
    std::vector<std::string> judges;
    for (const auto& id : all_ids) {
      if (id != att && id != def) judges.push_back(id);
    }
    return judges;
  };

  for (const auto& slot : slots) {
    if (schedule.size() >= rounds_cap) break;
    const std::string& attacker = *slot.attacker;

    if (mode == PairingMode::round_robin) {
      for (const auto& defender : competitors) {
        if (defender == attacker) continue;
        if (schedule.size() >= rounds_cap) break;
        BattlePlan plan;
        plan.battle_id = detail::make_battle_id(schedule.size(), *slot.instruction);
        plan.instruction_id = *slot.instruction;
        plan.attacker = attacker;
        plan.defender = defender;
        plan.judges = judges_for(attacker, defender);
        plan.pairing_mode = mode;
        schedule.push_back(std::move(plan));
      }
      continue;
    }

    const std::string* best = nullptr;
    long best_deficit = 0;
    for (const auto& candidate : competitors) {
      if (candidate == attacker) continue;
      const long deficit = static_cast<long>(planned_attacks[candidate]) -
                           static_cast<long>(defenses_so_far[candidate]);
      if (best == nullptr) {
        best = &candidate;
        best_deficit = deficit;
        continue;
      }
      if (deficit > best_deficit) {
        best = &candidate;
        best_deficit = deficit;
      } else if (deficit == best_deficit) {
        const std::size_t cand_total = attacks_so_far[candidate] + defenses_so_far[candidate];
        const std::size_t best_total = attacks_so_far[*best] + defenses_so_far[*best];
        if (cand_total < best_total || (cand_total == best_total && candidate < *best)) {
          best = &candidate;
          best_deficit = deficit;
        }
      }
    }

    BattlePlan plan;
    plan.battle_id = detail::make_battle_id(schedule.size(), *slot.instruction);
    plan.instruction_id = *slot.instruction;
    plan.attacker = attacker;
    plan.defender = *best;
    plan.judges = judges_for(attacker, *best);
    plan.pairing_mode = mode;
    schedule.push_back(std::move(plan));

    attacks_so_far[attacker] += 1;
    defenses_so_far[*best] += 1;
  }
  return schedule;
}

// System text for competitors answering an instruction.
inline constexpr std::string_view kAnswerSystemText =
    "You are a helpful coding assistant. Answer the user's question directly and "
    "completely.";

// A competitor's answer to one instruction. The seed depends on the
// instruction and the model, not on the battle, so an attacker answering the
// same instruction against several defenders holds one response.
inline CompletionResult competitor_answer(Gateway& gateway, const ModelSpec& spec,
                                          const Instruction& instruction,
                                          std::uint64_t rng_seed) {
  GenerationConfig cfg;
  cfg.temperature = 0.7;
  cfg.top_p = 1.0;
  cfg.seed = static_cast<std::int64_t>(
      derive_seed(rng_seed, "response", instruction.instruction_id, spec.model_id));
  return gateway.chat(spec.as_kind(ApiKind::chat_completion), std::string(kAnswerSystemText),
                      instruction.text, cfg);
}

// Runs one battle: both competitors answer, the judge panel votes, the
// record lands in the event log before it is returned. Competitor failure
// after retries raises BattleAborted (no votes, no rating impact); the text
// of an all-unparseable panel is kept as an undecided record.
inline Battle run_battle(Gateway& gateway, const Roster& roster, const BattlePlan& plan,
                         const Instruction& instruction, std::uint64_t rng_seed,
                         EventLog* battle_log = nullptr, std::uint64_t commit_index = 0);

namespace detail {

inline nlohmann::json battle_to_json(const Battle& battle) {
  nlohmann::json votes = nlohmann::json::array();
  if (battle.tally) {
    for (const auto& vote : battle.tally->votes) {
      votes.push_back({{"judge_id", vote.judge_id},
                       {"verdict", to_string(vote.verdict)},
                       {"presented_order", to_string(vote.presented_order)},
                       {"raw_text", vote.raw_text}});
    }
  }
  nlohmann::json record = {
      {"battle_id", battle.plan.battle_id},
      {"instruction_id", battle.plan.instruction_id},
      {"attacker", battle.plan.attacker},
      {"defender", battle.plan.defender},
      {"judges", battle.plan.judges},
      {"pairing_mode", to_string(battle.plan.pairing_mode)},
      {"status", to_string(battle.status)},
      {"response_attacker", battle.response_attacker},
      {"response_defender", battle.response_defender},
      {"completed_at", battle.completed_at},
  };
  if (battle.status == Battle::Status::aborted) record["abort_reason"] = battle.abort_reason;
  if (battle.tally) {
    record["tally"] = {{"t_attacker", battle.tally->t_attacker},
                       {"t_defender", battle.tally->t_defender},
                       {"ties", battle.tally->ties},
                       {"local_attacker", battle.tally->local_attacker},
                       {"local_defender", battle.tally->local_defender},
                       {"votes", votes}};
  }
  return record;
}

inline Battle battle_from_json(const nlohmann::json& j) {
  Battle battle;
  battle.plan.battle_id = j.at("battle_id").get<std::string>();
  battle.plan.instruction_id = j.at("instruction_id").get<std::string>();
  battle.plan.attacker = j.at("attacker").get<std::string>();
  battle.plan.defender = j.at("defender").get<std::string>();
  battle.plan.judges = j.at("judges").get<std::vector<std::string>>();
  battle.plan.pairing_mode = pairing_mode_from(j.at("pairing_mode").get<std::string>());
  const std::string status = j.at("status").get<std::string>();
  battle.status = status == "decided"   ? Battle::Status::decided
                  : status == "aborted" ? Battle::Status::aborted
                                        : Battle::Status::undecided;
  battle.response_attacker = j.at("response_attacker").get<std::string>();
  battle.response_defender = j.at("response_defender").get<std::string>();
  battle.completed_at = j.at("completed_at").get<std::uint64_t>();
  if (j.contains("abort_reason")) battle.abort_reason = j["abort_reason"].get<std::string>();
  if (j.contains("tally")) {
    VoteTally tally;
    const auto& t = j["tally"];
    tally.t_attacker = t.at("t_attacker").get<int>();
    tally.t_defender = t.at("t_defender").get<int>();
    tally.ties = t.at("ties").get<int>();
    tally.local_attacker = t.at("local_attacker").get<double>();
    tally.local_defender = t.at("local_defender").get<double>();
    for (const auto& v : t.at("votes")) {
      Vote vote;
      vote.judge_id = v.at("judge_id").get<std::string>();
      const std::string verdict = v.at("verdict").get<std::string>();
      vote.verdict = verdict == "A" ? Verdict::A : verdict == "B" ? Verdict::B : Verdict::Tie;
      vote.presented_order = v.at("presented_order").get<std::string>() == "attacker_first"
                                 ? PresentedOrder::attacker_first
                                 : PresentedOrder::defender_first;
      vote.raw_text = v.at("raw_text").get<std::string>();
      tally.votes.push_back(std::move(vote));
    }
    battle.tally = std::move(tally);
  }
  return battle;
}

}  // namespace detail

inline Battle run_battle(Gateway& gateway, const Roster& roster, const BattlePlan& plan,
                         const Instruction& instruction, std::uint64_t rng_seed,
                         EventLog* battle_log, std::uint64_t commit_index) {
  if (instruction.status != InstructionStatus::filtered &&
      instruction.status != InstructionStatus::selected) {
    throw std::logic_error("battle on instruction with status " +
                           std::string(to_string(instruction.status)));
  }
  if (instruction.instruction_id != plan.instruction_id) {
    throw std::invalid_argument("plan/instruction mismatch for battle " + plan.battle_id);
  }

  Battle battle;
  battle.plan = plan;
  battle.completed_at = commit_index;
  try {
    battle.response_attacker =
        competitor_answer(gateway, roster.by_id(plan.attacker), instruction, rng_seed).text;
    battle.response_defender =
        competitor_answer(gateway, roster.by_id(plan.defender), instruction, rng_seed).text;
  } catch (const EndpointUnreachable& e) {
    throw BattleAborted("battle " + plan.battle_id + ": " + e.what());
  }

  std::vector<ModelSpec> judges;
  judges.reserve(plan.judges.size());
  for (const auto& id : plan.judges) judges.push_back(roster.by_id(id));
  try {
    battle.tally = collect_votes(gateway, plan.battle_id, instruction.text,
                                 battle.response_attacker, battle.response_defender, judges,
                                 rng_seed);
    battle.status = Battle::Status::decided;
  } catch (const NoValidVotes&) {
    battle.status = Battle::Status::undecided;
  }

  if (battle_log != nullptr) battle_log->append(detail::battle_to_json(battle));
  return battle;
}

}  // namespace arena
