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
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "arena/checkpoint.hpp"
#include "arena/config.hpp"
#include "arena/curator.hpp"
#include "arena/elo.hpp"
#include "arena/event_log.hpp"
#include "arena/forge.hpp"
#include "arena/gateway.hpp"
#include "arena/kcenter.hpp"
#include "arena/miner.hpp"
#include "arena/mock_fleet.hpp"
#include "arena/scheduler.hpp"

namespace arena {

namespace files {
inline constexpr const char* kCheckpoint = "checkpoint.json";
inline constexpr const char* kRequests = "requests.jsonl";
inline constexpr const char* kRaw = "instructions_raw.jsonl";
inline constexpr const char* kAssessed = "assessments.jsonl";
inline constexpr const char* kCurated = "instructions_curated.jsonl";
inline constexpr const char* kQuarantine = "quarantine.jsonl";
inline constexpr const char* kSelection = "selection_report.json";
inline constexpr const char* kBattles = "battles.jsonl";
inline constexpr const char* kEloHistory = "elo_history.jsonl";
inline constexpr const char* kElo = "elo.json";
inline constexpr const char* kScores = "scores.jsonl";
inline constexpr const char* kSft = "sft.jsonl";
inline constexpr const char* kPreferences = "preferences.jsonl";
inline constexpr const char* kTasksReport = "reports/tasks.json";
inline constexpr const char* kDifficultyReport = "reports/difficulty.json";
inline constexpr const char* kOverlapReport = "reports/overlap.json";
}  // namespace files

// Testing hook: hard-exits the process after this many battle commits in one
// invocation, simulating a crash mid-stage.
inline constexpr const char* kCrashAfterBattlesEnv = "ARENA_FORGE_CRASH_AFTER_BATTLES";

namespace detail {

inline nlohmann::json instruction_to_json(const Instruction& instr) {
  nlohmann::json j = {{"instruction_id", instr.instruction_id},
                      {"text", instr.text},
                      {"source_expert", instr.source_expert},
                      {"temperature", instr.gen_config.temperature},
                      {"top_p", instr.gen_config.top_p},
                      {"status", to_string(instr.status)}};
  if (instr.difficulty) {
    j["difficulty"] = {{"per_judge", instr.difficulty->per_judge},
                       {"aggregate", instr.difficulty->aggregate},
                       {"level", to_string(instr.difficulty->level)}};
  }
  return j;
}

inline Instruction instruction_from_json(const nlohmann::json& j) {
  Instruction instr;
  instr.instruction_id = j.at("instruction_id").get<std::string>();
  instr.text = j.at("text").get<std::string>();
  instr.source_expert = j.at("source_expert").get<std::string>();
  instr.gen_config.temperature = j.value("temperature", 1.0);
  instr.gen_config.top_p = j.value("top_p", 1.0);
  instr.status = instruction_status_from(j.value("status", "raw"));
  if (j.contains("difficulty")) {
    DifficultyAssessment a;
    a.per_judge = j["difficulty"].at("per_judge").get<std::map<std::string, int>>();
    a.aggregate = j["difficulty"].at("aggregate").get<double>();
    a.level = difficulty_level_for(a.aggregate);
    instr.difficulty = std::move(a);
  }
  return instr;
}

inline nlohmann::json scored_response_to_json(const ScoredResponse& r) {
  nlohmann::json components = nlohmann::json::array();
  for (const auto& c : r.components) {
    components.push_back(
        {{"opponent_id", c.opponent_id}, {"x_local", c.x_local}, {"x_elo", c.x_elo}});
  }
  return {{"instruction_id", r.instruction_id},
          {"model_id", r.model_id},
          {"response_text", r.response_text},
          {"final_score", r.final_score},
          {"components", components}};
}

inline ScoredResponse scored_response_from_json(const nlohmann::json& j) {
  ScoredResponse r;
  r.instruction_id = j.at("instruction_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.response_text = j.at("response_text").get<std::string>();
  r.final_score = j.at("final_score").get<double>();
  for (const auto& c : j.at("components")) {
    r.components.push_back({c.at("opponent_id").get<std::string>(),
                            c.at("x_local").get<double>(), c.at("x_elo").get<double>()});
  }
  return r;
}

inline const std::vector<std::string>& default_reference_corpus() {
  static const std::vector<std::string> kCorpus = {
      "Write a function to reverse a linked list.",
      "Implement binary search over a sorted array.",
      "Write a Python program to check whether a number is prime.",
      "Given a string s, return the longest palindromic substring.",
      "Sort an array using the quicksort algorithm.",
      "Write SQL to select duplicate rows from a table.",
      "Parse a CSV file and compute the average of one column.",
      "Implement a stack using two queues.",
  };
  return kCorpus;
}

}  // namespace detail

// Stage-oriented driver. Every stage reads only prior-stage artifacts,
// writes its own atomically, and advances the checkpoint; re-invoking a
// completed stage is a no-op unless forced. The JSONL event logs are the
// source of truth; everything else is a recomputable projection.
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg, bool force = false)
      : cfg_(std::move(cfg)), force_(force), out_(cfg_.output_dir) {
    auto diagnostics = validate_config(cfg_);
    if (!diagnostics.empty()) {
      std::string what = "invalid config:";
      for (const auto& d : diagnostics) what += "\n  " + d;
      throw ConfigInvalid(what);
    }
    std::filesystem::create_directories(out_);
    std::filesystem::create_directories(out_ / "reports");
    checkpoint_ = Checkpoint::load_or_empty(out_ / files::kCheckpoint);
  }

  ~Pipeline() {
    if (fleet_) fleet_->stop();
  }

  const Checkpoint& checkpoint() const { return checkpoint_; }
  const std::filesystem::path& out() const { return out_; }
  const Roster& roster() {
    ensure_gateway();
    return roster_;
  }

  // ---- stages ---------------------------------------------------------------

  bool run_mine() {
    if (skip_if_done(Stage::mined, "mine")) return false;
    ensure_gateway();
    require_stage(Stage::none, "mine");

    const auto grid = mining_grid(cfg_.mining.temperatures, cfg_.mining.top_ps);
    std::vector<Instruction> all;
    std::uint64_t empty = 0;
    for (const auto& id : roster_.competitor_ids()) {
      MiningStats stats;
      auto mined = mine(*gateway_, roster_.by_id(id), cfg_.mining.system_text, grid,
                        cfg_.mining.samples_per_config, cfg_.rng_seed, &stats,
                        cfg_.mining.workers);
      empty += stats.empty_completions;
      for (auto& instr : mined) all.push_back(std::move(instr));
    }

    std::ostringstream lines;
    for (const auto& instr : all) lines << detail::instruction_to_json(instr).dump() << '\n';
    atomic_write_text(out_ / files::kRaw, lines.str());

    Checkpoint next = checkpoint_;
    next.stage = Stage::mined;
    next.counts["instructions_raw"] = all.size();
    next.counts["mining_empty_completions"] = empty;
    next.digests[files::kRaw] = sha256_file(out_ / files::kRaw);
    commit_checkpoint(next);
    return true;
  }

  bool run_curate() {
    if (skip_if_done(Stage::curated, "curate")) return false;
    require_stage(Stage::mined, "curate");
    ensure_gateway();

    std::vector<Instruction> raw;
    for (const auto& j : EventLog::read_all(out_ / files::kRaw)) {
      raw.push_back(detail::instruction_from_json(j));
    }

    auto deduped = dedup(std::move(raw), cfg_.curation.near_dup_threshold);

    // Judge difficulty, quarantining instructions nobody could rate.
    std::vector<std::optional<DifficultyAssessment>> assessments(deduped.size());
    std::vector<std::string> quarantine_reasons(deduped.size());
    parallel_for(deduped.size(), cfg_.arena.workers, [&](std::size_t i) {
      const auto judges = roster_.judges_excluding({deduped[i].source_expert});
      try {
        assessments[i] = score_difficulty(*gateway_, deduped[i], judges, cfg_.rng_seed);
      } catch (const NoValidAssessment& e) {
        quarantine_reasons[i] = e.what();
      }
    });

    std::vector<Instruction> assessed;
    std::ostringstream quarantine_lines;
    std::size_t quarantined = 0;
    for (std::size_t i = 0; i < deduped.size(); ++i) {
      if (assessments[i]) {
        deduped[i].difficulty = std::move(assessments[i]);
        assessed.push_back(std::move(deduped[i]));
      } else {
        auto j = detail::instruction_to_json(deduped[i]);
        j["reason"] = quarantine_reasons[i];
        quarantine_lines << j.dump() << '\n';
        ++quarantined;
      }
    }

    auto filtered = filter_by_difficulty(assessed);

    // Embedding-based compression of the filtered set.
    std::map<std::string, std::vector<double>> embeddings;
    for (std::size_t begin = 0; begin < filtered.size(); begin += cfg_.curation.embed_batch) {
      const std::size_t end = std::min(begin + cfg_.curation.embed_batch, filtered.size());
      std::vector<std::string> texts;
      for (std::size_t i = begin; i < end; ++i) texts.push_back(filtered[i].text);
      auto vectors = gateway_->embed(embedder_, texts);
      for (std::size_t i = begin; i < end; ++i) {
        filtered[i].embedding = vectors[i - begin];
        embeddings[filtered[i].instruction_id] = std::move(vectors[i - begin]);
      }
    }

    SelectionReport selection;
    std::vector<Instruction> selected;
    if (!filtered.empty()) {
      const std::size_t k = cfg_.curation.k == 0
                                ? filtered.size()
                                : std::min(cfg_.curation.k, filtered.size());
      if (k == filtered.size()) {
        // No compression requested: everything is selected, nothing to rank.
        for (auto& instr : filtered) {
          selection.selected_ids.push_back(instr.instruction_id);
          instr.advance_status(InstructionStatus::selected);
          selected.push_back(instr);
        }
        selection.coverage_radius = 0.0;
      } else {
        const std::string seed_id = cfg_.curation.seed_id.empty()
                                        ? embeddings.begin()->first
                                        : cfg_.curation.seed_id;
        selection = kcenter_select(embeddings, k, seed_id);

        std::map<std::string, Instruction*> by_id;
        for (auto& instr : filtered) by_id[instr.instruction_id] = &instr;
        for (const auto& id : selection.selected_ids) {
          Instruction* instr = by_id.at(id);
          instr->advance_status(InstructionStatus::selected);
          selected.push_back(*instr);
        }
      }
    }

    std::ostringstream assessed_lines;
    for (const auto& instr : assessed) {
      assessed_lines << detail::instruction_to_json(instr).dump() << '\n';
    }
    std::ostringstream curated_lines;
    for (const auto& instr : selected) {
      curated_lines << detail::instruction_to_json(instr).dump() << '\n';
    }
    nlohmann::json selection_json = {{"k", selection.selected_ids.size()},
                                     {"seed_id", selection.selected_ids.empty()
                                                     ? ""
                                                     : selection.selected_ids.front()},
                                     {"coverage_radius", selection.coverage_radius},
                                     {"selected_ids", selection.selected_ids}};

    atomic_write_text(out_ / files::kAssessed, assessed_lines.str());
    atomic_write_text(out_ / files::kCurated, curated_lines.str());
    atomic_write_text(out_ / files::kQuarantine, quarantine_lines.str());
    atomic_write_text(out_ / files::kSelection, selection_json.dump(2) + "\n");

    Checkpoint next = checkpoint_;
    next.stage = Stage::curated;
    next.counts["deduped"] = assessed.size() + quarantined;
    next.counts["assessed"] = assessed.size();
    next.counts["quarantined"] = quarantined;
    next.counts["filtered"] = filtered.size();
    next.counts["selected"] = selected.size();
    for (const char* f : {files::kAssessed, files::kCurated, files::kQuarantine,
                          files::kSelection}) {
      next.digests[f] = sha256_file(out_ / f);
    }
    commit_checkpoint(next);
    return true;
  }

  bool run_battle() {
    if (skip_if_done(Stage::battled, "battle")) return false;
    require_stage(Stage::curated, "battle");
    ensure_gateway();

    std::map<std::string, Instruction> instructions;
    std::map<std::string, std::vector<std::string>> by_attacker;
    for (const auto& j : EventLog::read_all(out_ / files::kCurated)) {
      Instruction instr = detail::instruction_from_json(j);
      by_attacker[instr.source_expert].push_back(instr.instruction_id);
      instructions.emplace(instr.instruction_id, std::move(instr));
    }
    const auto schedule =
        build_schedule(roster_, by_attacker, cfg_.arena.pairing_mode, cfg_.arena.rounds_cap);

    // Battles already committed by an interrupted invocation are kept as-is;
    // a torn final line from a hard kill is dropped first.
    std::set<std::string> committed;
    std::uint64_t decided = 0, undecided = 0, aborted = 0;
    auto count_status = [&](const std::string& status) {
      if (status == "decided") ++decided;
      else if (status == "undecided") ++undecided;
      else ++aborted;
    };
    if (std::filesystem::exists(out_ / files::kBattles)) {
      EventLog::truncate_torn_tail(out_ / files::kBattles);
      for (const auto& j : EventLog::read_all(out_ / files::kBattles)) {
        committed.insert(j.at("battle_id").get<std::string>());
        count_status(j.at("status").get<std::string>());
      }
    }

    EventLog battle_log(out_ / files::kBattles);
    execute_schedule(schedule, instructions, committed, battle_log,
                     [&](const Battle& b) { count_status(to_string(b.status)); });

    Checkpoint next = checkpoint_;
    next.stage = Stage::battled;
    next.counts["battles"] = decided + undecided + aborted;
    next.counts["battles_decided"] = decided;
    next.counts["battles_undecided"] = undecided;
    next.counts["battles_aborted"] = aborted;
    next.counts["battles_resumed"] = committed.size();
    next.digests[files::kBattles] = sha256_file(out_ / files::kBattles);
    commit_checkpoint(next);
    return true;
  }

  bool run_score() {
    if (skip_if_done(Stage::scored, "score")) return false;
    require_stage(Stage::battled, "score");

    std::vector<Battle> battles;
    for (const auto& j : EventLog::read_all(out_ / files::kBattles)) {
      battles.push_back(detail::battle_from_json(j));
    }

    EloTable table(roster_ids_for_rating(), cfg_.scoring.k_factor, cfg_.scoring.initial_rating);

    struct ResponseKey {
      std::string instruction_id, model_id;
      bool operator<(const ResponseKey& o) const {
        return instruction_id != o.instruction_id ? instruction_id < o.instruction_id
                                                  : model_id < o.model_id;
      }
    };
    std::map<ResponseKey, std::string> response_texts;
    std::map<ResponseKey, std::vector<ContestedPairing>> contested;

    // Replay in schedule order: Eq-4 updates are order-dependent.
    for (const auto& battle : battles) {
      if (!battle.tally) continue;  // aborted and undecided carry no signal
      const auto& plan = battle.plan;
      const auto [x_att, x_def] = expected_score(table.rating(plan.attacker),
                                                 table.rating(plan.defender));
      const auto [s_att, s_def] = actual_score(*battle.tally);
      table.update(plan.battle_id, plan.attacker, plan.defender, s_att, s_def);

      const ResponseKey att_key{plan.instruction_id, plan.attacker};
      const ResponseKey def_key{plan.instruction_id, plan.defender};
      response_texts.emplace(att_key, battle.response_attacker);
      response_texts.emplace(def_key, battle.response_defender);

      ContestedPairing att_pair{plan.defender, battle.tally->local_attacker, std::nullopt};
      ContestedPairing def_pair{plan.attacker, battle.tally->local_defender, std::nullopt};
      if (cfg_.scoring.elo_snapshot == EloSnapshot::at_battle) {
        att_pair.x_elo_at_battle = x_att;
        def_pair.x_elo_at_battle = x_def;
      }
      contested[att_key].push_back(std::move(att_pair));
      contested[def_key].push_back(std::move(def_pair));
    }

    std::ostringstream history_lines;
    for (const auto& d : table.history()) {
      history_lines << nlohmann::json{{"battle_id", d.battle_id},
                                      {"model_id", d.model_id},
                                      {"delta", d.delta}}
                           .dump()
                    << '\n';
    }
    nlohmann::json elo_json = {{"initial_rating", table.initial_rating()},
                               {"k_factor", table.k_factor()},
                               {"ratings", table.ratings()}};

    std::ostringstream score_lines;
    std::size_t scored_count = 0;
    for (const auto& [key, pairings] : contested) {
      ScoredResponse scored = final_score(key.model_id, key.instruction_id, pairings, table,
                                          cfg_.scoring.alpha, cfg_.scoring.sum_mode);
      scored.response_text = response_texts.at(key);
      score_lines << detail::scored_response_to_json(scored).dump() << '\n';
      ++scored_count;
    }

    atomic_write_text(out_ / files::kEloHistory, history_lines.str());
    atomic_write_text(out_ / files::kElo, elo_json.dump(2) + "\n");
    atomic_write_text(out_ / files::kScores, score_lines.str());

    Checkpoint next = checkpoint_;
    next.stage = Stage::scored;
    next.counts["scored_responses"] = scored_count;
    for (const char* f : {files::kEloHistory, files::kElo, files::kScores}) {
      next.digests[f] = sha256_file(out_ / f);
    }
    commit_checkpoint(next);
    return true;
  }

  bool run_emit() {
    if (skip_if_done(Stage::emitted, "emit")) return false;
    require_stage(Stage::scored, "emit");

    auto items = build_dataset_items();
    if (items.empty()) throw IoFailure("emit: no scored instructions to emit");

    const auto sft_tmp = out_ / (std::string(files::kSft) + ".stage");
    emit_sft(items, sft_tmp);
    std::filesystem::rename(sft_tmp, out_ / files::kSft);

    const auto pref_tmp = out_ / (std::string(files::kPreferences) + ".stage");
    auto pref_stats = emit_preferences(items, pref_tmp);
    std::filesystem::rename(pref_tmp, out_ / files::kPreferences);

    Checkpoint next = checkpoint_;
    next.stage = Stage::emitted;
    next.counts["sft_records"] = items.size();
    next.counts["preference_pairs"] = pref_stats.emitted;
    next.counts["preference_skipped_single"] = pref_stats.skipped_single_response;
    next.digests[files::kSft] = sha256_file(out_ / files::kSft);
    next.digests[files::kPreferences] = sha256_file(out_ / files::kPreferences);
    commit_checkpoint(next);
    return true;
  }

  // Reports are projections over finished runs; they do not advance the
  // stage and can be regenerated at will.
  bool run_report() {
    require_stage(Stage::emitted, "report");
    ensure_gateway();

    auto items = build_dataset_items();
    const std::string classifier_id = cfg_.report.classifier_model.empty()
                                          ? roster_.ids().front()
                                          : cfg_.report.classifier_model;
    auto tasks = classify_tasks(*gateway_, items, roster_.by_id(classifier_id), cfg_.rng_seed,
                                cfg_.arena.workers);

    std::vector<Instruction> assessed, selected;
    for (const auto& j : EventLog::read_all(out_ / files::kAssessed)) {
      assessed.push_back(detail::instruction_from_json(j));
    }
    for (const auto& j : EventLog::read_all(out_ / files::kCurated)) {
      selected.push_back(detail::instruction_from_json(j));
    }
    nlohmann::json difficulty_json = {
        {"assessed", difficulty_report(assessed).to_json()},
        {"selected", difficulty_report(selected).to_json()},
    };

    std::vector<Instruction> raw;
    for (const auto& j : EventLog::read_all(out_ / files::kRaw)) {
      raw.push_back(detail::instruction_from_json(j));
    }
    const auto& corpus = cfg_.report.reference_corpus.empty()
                             ? detail::default_reference_corpus()
                             : cfg_.report.reference_corpus;
    auto overlap = overlap_report(raw, corpus, cfg_.arena.workers);
    nlohmann::json overlap_buckets = nlohmann::json::object();
    for (std::size_t b = 0; b < overlap.buckets.size(); ++b) {
      char label[16];
      std::snprintf(label, sizeof(label), "%.1f-%.1f", b / 10.0, (b + 1) / 10.0);
      overlap_buckets[label] = overlap.buckets[b];
    }
    nlohmann::json overlap_json = {{"total", overlap.total}, {"buckets", overlap_buckets}};

    atomic_write_text(out_ / files::kTasksReport, tasks.to_json().dump(2) + "\n");
    atomic_write_text(out_ / files::kDifficultyReport, difficulty_json.dump(2) + "\n");
    atomic_write_text(out_ / files::kOverlapReport, overlap_json.dump(2) + "\n");
    return true;
  }

  void run_all() {
    run_mine();
    run_curate();
    run_battle();
    run_score();
    run_emit();
    run_report();
  }

  // Shared with the report stage and the acceptance suite.
  std::vector<DatasetItem> build_dataset_items() {
    std::map<std::string, std::vector<ScoredResponse>> by_instruction;
    for (const auto& j : EventLog::read_all(out_ / files::kScores)) {
      auto scored = detail::scored_response_from_json(j);
      by_instruction[scored.instruction_id].push_back(std::move(scored));
    }
    std::map<std::string, std::string> texts;
    for (const auto& j : EventLog::read_all(out_ / files::kCurated)) {
      texts[j.at("instruction_id").get<std::string>()] = j.at("text").get<std::string>();
    }
    const EloTable table = load_elo_table();

    std::vector<DatasetItem> items;
    for (const auto& [iid, responses] : by_instruction) {
      items.push_back(select_best(responses, table, texts.at(iid)));
    }
    return items;
  }

  EloTable load_elo_table() const {
    std::ifstream in(out_ / files::kElo);
    if (!in) throw StageDependencyMissing("missing " + std::string(files::kElo));
    auto j = nlohmann::json::parse(in);
    return EloTable::from_snapshot(j.at("ratings").get<std::map<std::string, double>>(),
                                   j.at("k_factor").get<double>(),
                                   j.at("initial_rating").get<double>());
  }

 private:
  // ---- plumbing -------------------------------------------------------------

  void ensure_gateway() {
    if (gateway_) return;
    if (cfg_.mock_fleet.enabled) {
      fleet_ = std::make_unique<MockFleet>(cfg_.mock_fleet.experts, fleet_options());
      if (cfg_.mock_fleet.transport == "http") {
        fleet_->start_http();
        transport_ = std::make_unique<HttpTransport>();
      } else {
        transport_ = std::make_unique<LoopbackTransport>(*fleet_);
      }
      roster_ = fleet_->roster();
      embedder_ = fleet_->embedder_spec();
    } else {
      transport_ = std::make_unique<HttpTransport>();
      roster_.models = cfg_.roster;
      embedder_ = *cfg_.embedder;
    }
    if (cfg_.log_requests) {
      request_log_ = std::make_unique<EventLog>(out_ / files::kRequests);
    }
    gateway_ = std::make_unique<Gateway>(*transport_, request_log_.get());
  }

  MockFleetOptions fleet_options() const {
    MockFleetOptions options = cfg_.mock_fleet.options;
    options.seed = cfg_.rng_seed;  // the whole fleet is pinned by the run seed
    return options;
  }

  std::vector<std::string> roster_ids_for_rating() {
    ensure_gateway();
    return roster_.competitor_ids();
  }

  // A completed stage is a no-op unless --force; --force rolls the
  // checkpoint back to just before the stage and removes the artifacts of
  // that stage and everything after it.
  bool skip_if_done(Stage stage, const char* name) {
    if (checkpoint_.stage >= stage) {
      if (!force_) {
        std::fprintf(stderr, "[arena-forge] %s: already complete, skipping (use --force)\n",
                     name);
        return true;
      }
      rollback_to(static_cast<Stage>(static_cast<int>(stage) - 1));
    } else if (force_ && stage == Stage::battled) {
      // A forced battle stage must not resume a partial log.
      std::filesystem::remove(out_ / files::kBattles);
    }
    return false;
  }

  void rollback_to(Stage stage) {
    static const std::map<Stage, std::vector<const char*>> kStageFiles = {
        {Stage::mined, {files::kRaw}},
        {Stage::curated,
         {files::kAssessed, files::kCurated, files::kQuarantine, files::kSelection}},
        {Stage::battled, {files::kBattles}},
        {Stage::scored, {files::kEloHistory, files::kElo, files::kScores}},
        {Stage::emitted, {files::kSft, files::kPreferences}},
    };
    for (const auto& [s, file_list] : kStageFiles) {
      if (s > stage) {
        for (const char* f : file_list) {
          std::filesystem::remove(out_ / f);
          checkpoint_.digests.erase(f);
        }
      }
    }
    checkpoint_.stage = stage;
    checkpoint_.save(out_ / files::kCheckpoint);
  }

  void require_stage(Stage needed, const char* who) {
    if (checkpoint_.stage < needed) {
      throw StageDependencyMissing(std::string(who) + " requires stage '" +
                                   to_string(needed) + "' but checkpoint is at '" +
                                   to_string(checkpoint_.stage) + "'");
    }
    // Digests verify before resume: a stale or edited artifact is an error.
    for (const auto& [file, digest] : checkpoint_.digests) {
      const auto path = out_ / file;
      if (!std::filesystem::exists(path) || sha256_file(path) != digest) {
        throw StageDependencyMissing("artifact " + std::string(file) +
                                     " does not match its checkpoint digest");
      }
    }
  }

  void commit_checkpoint(const Checkpoint& next) {
    next.save(out_ / files::kCheckpoint);
    checkpoint_ = next;
  }

  // Concurrent battle evaluation with strictly ordered commits: workers
  // evaluate, the committer appends in schedule order, so the log is always
  // a prefix of the uninterrupted run.
  void execute_schedule(const std::vector<BattlePlan>& schedule,
                        const std::map<std::string, Instruction>& instructions,
                        const std::set<std::string>& committed, EventLog& battle_log,
                        const std::function<void(const Battle&)>& on_commit) {
    const char* crash_env = std::getenv(kCrashAfterBattlesEnv);
    const long crash_after = crash_env ? std::atol(crash_env) : -1;
    const std::size_t workers = std::max<std::size_t>(1, cfg_.arena.workers);

    auto evaluate_one = [&](std::size_t i) {
      const BattlePlan& plan = schedule[i];
      try {
        return arena::run_battle(*gateway_, roster_, plan,
                                 instructions.at(plan.instruction_id), cfg_.rng_seed,
                                 nullptr, i);
      } catch (const BattleAborted& e) {
        Battle battle;
        battle.plan = plan;
        battle.status = Battle::Status::aborted;
        battle.abort_reason = e.what();
        battle.completed_at = i;
        return battle;
      }
    };

    if (workers == 1) {
      long committed_now = 0;
      for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (committed.count(schedule[i].battle_id)) continue;
        const Battle battle = evaluate_one(i);
        battle_log.append(detail::battle_to_json(battle));
        on_commit(battle);
        ++committed_now;
        if (crash_after >= 0 && committed_now >= crash_after) std::_Exit(42);
      }
      return;
    }

    std::mutex mu;
    std::condition_variable cv;
    std::map<std::size_t, Battle> ready;
    std::atomic<std::size_t> next_exec{0};
    std::exception_ptr first_error;
    bool failed = false;

    auto worker = [&] {
      for (;;) {
        const std::size_t i = next_exec.fetch_add(1);
        if (i >= schedule.size()) return;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (failed) return;
        }
        if (committed.count(schedule[i].battle_id)) continue;
        try {
          Battle battle = evaluate_one(i);
          {
            std::lock_guard<std::mutex> lock(mu);
            ready.emplace(i, std::move(battle));
          }
          cv.notify_all();
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
          failed = true;
          cv.notify_all();
          return;
        }
      }
    };

    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);

    long committed_now = 0;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      if (committed.count(schedule[i].battle_id)) continue;
      Battle battle;
      {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return failed || ready.count(i) > 0; });
        if (failed && ready.count(i) == 0) break;
        battle = std::move(ready.at(i));
        ready.erase(i);
      }
      battle_log.append(detail::battle_to_json(battle));
      on_commit(battle);
      ++committed_now;
      if (crash_after >= 0 && committed_now >= crash_after) {
        // Simulated hard crash: no cleanup, no checkpoint update. The line
        // just appended is already flushed.
        std::_Exit(42);
      }
    }

    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  RunConfig cfg_;
  bool force_;
  std::filesystem::path out_;
  Checkpoint checkpoint_;

  std::unique_ptr<MockFleet> fleet_;
  std::unique_ptr<Transport> transport_;
  std::unique_ptr<EventLog> request_log_;
  std::unique_ptr<Gateway> gateway_;
  Roster roster_;
  ModelSpec embedder_;
};

}  // namespace arena
