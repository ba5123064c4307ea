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
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "arena/forge.hpp"
#include "arena/mock_fleet.hpp"
#include "arena/rng.hpp"

namespace fs = std::filesystem;

namespace {

arena::ScoredResponse scored(const std::string& model, double score,
                             const std::string& text = "") {
  arena::ScoredResponse r;
  r.instruction_id = "instr-1";
  r.model_id = model;
  r.response_text = text.empty() ? "response from " + model : text;
  r.final_score = score;
  return r;
}

fs::path temp_path(const std::string& name) {
  static int counter = 0;
  auto dir = fs::temp_directory_path() / "arena_forge_test";
  fs::create_directories(dir);
  return dir / (name + "_" + std::to_string(counter++) + ".jsonl");
}

}  // namespace

TEST_CASE("select_best picks the argmax and applies the tie-break chain") {
  arena::EloTable table({"A", "B"}, 40.0, 1000.0);
  auto item = arena::select_best({scored("A", 0.65), scored("B", 0.35)}, table, "text");
  CHECK(item.winner_model == "A");
  CHECK(item.gold_response == "response from A");

  // Equal scores: the higher Elo wins.
  arena::EloTable skewed({"A", "B"}, 40.0, 1000.0);
  skewed.update("b1", "A", "B", 1.0, 0.0);  // A: 1020, B: 980
  auto tie = arena::select_best({scored("B", 0.5), scored("A", 0.5)}, skewed, "text");
  CHECK(tie.winner_model == "A");

  // Equal scores and ratings: lexicographic id.
  auto lex = arena::select_best({scored("B", 0.5), scored("A", 0.5)}, table, "text");
  CHECK(lex.winner_model == "A");
}

TEST_CASE("select_best matches a brute-force oracle on random score sets") {
  arena::Rng rng(20260808);
  arena::EloTable table({"m0", "m1", "m2", "m3"}, 40.0, 1000.0);
  table.update("b1", "m0", "m1", 1.0, 0.0);
  table.update("b2", "m2", "m3", 0.0, 1.0);

  for (int round = 0; round < 100; ++round) {
    std::vector<arena::ScoredResponse> responses;
    const std::size_t n = 2 + rng.below(3);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid of scores makes ties common.
      responses.push_back(scored("m" + std::to_string(i), rng.below(4) * 0.25));
    }
    auto item = arena::select_best(responses, table, "t");

    const arena::ScoredResponse* want = &responses[0];
    for (const auto& r : responses) {
      const bool better =
          r.final_score > want->final_score ||
          (r.final_score == want->final_score &&
           (table.rating(r.model_id) > table.rating(want->model_id) ||
            (table.rating(r.model_id) == table.rating(want->model_id) &&
             r.model_id < want->model_id)));
      if (better) want = &r;
    }
    CHECK(item.winner_model == want->model_id);
  }
}

TEST_CASE("emit_sft writes parseable, stable JSONL with escaped newlines") {
  arena::EloTable table({"A", "B"}, 40.0, 1000.0);
  auto item = arena::select_best(
      {scored("A", 0.8, "line one\nline two"), scored("B", 0.2)}, table,
      "do the thing\nwith a newline");
  const auto path = temp_path("sft");
  CHECK(arena::emit_sft({item}, path) == 1);

  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    auto parsed = nlohmann::json::parse(line);
    CHECK(parsed["instruction"] == "do the thing\nwith a newline");
    CHECK(parsed["output"] == "line one\nline two");
    CHECK(parsed["winner"] == "A");
    CHECK(parsed["score"] == 0.8);
  }
  CHECK(lines == 1);

  // Re-emitting produces byte-identical output.
  const auto path2 = temp_path("sft");
  arena::emit_sft({item}, path2);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  std::string bytes_a((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string bytes_b((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(bytes_a == bytes_b);
  CHECK_THROWS_AS(arena::emit_sft({}, path), std::invalid_argument);
}

TEST_CASE("emit then re-ingest reproduces the item list") {
  arena::EloTable table({"A", "B"}, 40.0, 1000.0);
  std::vector<arena::DatasetItem> items;
  for (int i = 0; i < 3; ++i) {
    auto a = scored("A", 0.25 * i, "answer A #" + std::to_string(i));
    auto b = scored("B", 0.1, "answer B #" + std::to_string(i));
    a.instruction_id = b.instruction_id = "instr-" + std::to_string(i);
    items.push_back(arena::select_best({a, b}, table, "question #" + std::to_string(i)));
  }
  const auto path = temp_path("sft_roundtrip");
  arena::emit_sft(items, path);

  auto records = arena::EventLog::read_all(path);
  REQUIRE(records.size() == items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    CHECK(records[i]["instruction"] == items[i].instruction_text);
    CHECK(records[i]["output"] == items[i].gold_response);
    CHECK(records[i]["winner"] == items[i].winner_model);
  }
}

TEST_CASE("emit_preferences pairs gold with the lowest scorer and skips singles") {
  arena::EloTable table({"A", "B", "C"}, 40.0, 1000.0);
  auto pair_item =
      arena::select_best({scored("A", 0.8), scored("B", 0.2), scored("C", 0.5)}, table, "q1");
  arena::DatasetItem single;
  single.instruction_id = "instr-2";
  single.instruction_text = "q2";
  single.winner_model = "A";
  single.gold_response = "only";
  single.all_scored = {scored("A", 0.9)};

  const auto path = temp_path("prefs");
  auto stats = arena::emit_preferences({pair_item, single}, path);
  CHECK(stats.emitted == 1);
  CHECK(stats.skipped_single_response == 1);

  auto records = arena::EventLog::read_all(path);
  REQUIRE(records.size() == 1);
  CHECK(records[0]["instruction"] == "q1");
  CHECK(records[0]["chosen"] == "response from A");
  CHECK(records[0]["rejected"] == "response from B");
}

TEST_CASE("classify_tasks with a single-minded judge yields a 100% bucket") {
  arena::SyntheticExpert judge;
  judge.model_id = "labeler";
  judge.behavior = arena::SyntheticExpert::Behavior::scripted;
  judge.canned = {"Code Generation"};
  arena::MockFleet fleet({judge}, {});
  arena::LoopbackTransport transport(fleet);
  arena::Gateway gateway(transport);

  std::vector<arena::DatasetItem> items(5);
  for (std::size_t i = 0; i < items.size(); ++i) {
    items[i].instruction_id = "i" + std::to_string(i);
    items[i].instruction_text = "instruction " + std::to_string(i);
  }
  auto dist = arena::classify_tasks(gateway, items, fleet.roster().by_id("labeler"));
  CHECK(dist.counts.at("Code Generation") == 5);
  CHECK(dist.unlabeled == 0);
  auto json = dist.to_json();
  CHECK(json["categories"]["Code Generation"]["percent"] == 100.0);
  for (const auto& item : items) {
    CHECK(item.task_label == std::string("Code Generation"));
  }
}

TEST_CASE("task distribution formatting reproduces a known mix") {
  arena::TaskDistribution dist;
  dist.total = 1000;
  dist.counts = {{"Code Generation", 514}, {"Code Debugging", 122}, {"Code Optimization", 38},
                 {"Code Reasoning", 29},   {"Code Analysis", 66},   {"Theoretical Explanation", 222},
                 {"Code Transpile", 9}};
  auto json = dist.to_json();
  CHECK(json["categories"]["Code Generation"]["percent"] == 51.4);
  CHECK(json["categories"]["Theoretical Explanation"]["percent"] == 22.2);

  double sum = 0.0;
  for (const auto& [name, entry] : json["categories"].items()) {
    sum += entry["percent"].get<double>();
  }
  CHECK(std::abs(sum - 100.0) < 0.1);
}

TEST_CASE("classify_tasks raises when more than 10% stay unlabeled") {
  arena::SyntheticExpert judge;
  judge.model_id = "confused";
  judge.behavior = arena::SyntheticExpert::Behavior::scripted;
  judge.canned = {"no category to be found"};
  arena::MockFleet fleet({judge}, {});
  arena::LoopbackTransport transport(fleet);
  arena::Gateway gateway(transport);

  std::vector<arena::DatasetItem> items(3);
  for (std::size_t i = 0; i < items.size(); ++i) {
    items[i].instruction_id = "i" + std::to_string(i);
    items[i].instruction_text = "whatever";
  }
  CHECK_THROWS_AS(arena::classify_tasks(gateway, items, fleet.roster().by_id("confused")),
                  arena::UnlabeledRemainder);
}

TEST_CASE("difficulty_report bands counts per level") {
  auto make = [](double aggregate) {
    arena::Instruction instr = arena::Instruction::mined("x" + std::to_string(aggregate),
                                                         "expert-a", {});
    arena::DifficultyAssessment a;
    a.per_judge = {{"j", 5}};
    a.aggregate = aggregate;
    a.level = arena::difficulty_level_for(aggregate);
    instr.difficulty = a;
    return instr;
  };
  auto hist = arena::difficulty_report({make(2), make(4), make(7), make(9)});
  CHECK(hist.poor == 1);
  CHECK(hist.average == 1);
  CHECK(hist.good == 1);
  CHECK(hist.excellent == 1);
  CHECK(hist.total() == 4);

  // Post-filter input never lands below good.
  std::vector<arena::Instruction> filtered = {make(6.0), make(8.4), make(9.9)};
  auto post = arena::difficulty_report(filtered);
  CHECK(post.poor == 0);
  CHECK(post.average == 0);
  CHECK(post.good == 2);
  CHECK(post.excellent == 1);

  arena::Rng rng(8);
  std::vector<arena::Instruction> random_set;
  std::size_t expected[4] = {0, 0, 0, 0};
  for (int i = 0; i < 200; ++i) {
    const double aggregate = 1.0 + rng.next_unit() * 9.0;
    random_set.push_back(make(aggregate));
    expected[static_cast<int>(arena::difficulty_level_for(aggregate))] += 1;
  }
  auto random_hist = arena::difficulty_report(random_set);
  CHECK(random_hist.poor == expected[0]);
  CHECK(random_hist.average == expected[1]);
  CHECK(random_hist.good == expected[2]);
  CHECK(random_hist.excellent == expected[3]);
}
