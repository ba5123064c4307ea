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

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "arena/elo.hpp"
#include "arena/errors.hpp"
#include "arena/gateway.hpp"
#include "arena/instruction.hpp"
#include "arena/rng.hpp"
#include "arena/util.hpp"

namespace arena {

inline constexpr std::array<std::string_view, 7> kTaskCategories = {
    "Code Generation",     "Code Debugging", "Code Optimization", "Code Reasoning",
    "Code Analysis",       "Theoretical Explanation", "Code Transpile",
};

struct DatasetItem {
  std::string instruction_id;
  std::string instruction_text;
  std::string winner_model;
  std::string gold_response;
  std::vector<ScoredResponse> all_scored;
  std::optional<std::string> task_label;
};

// Picks the gold response: highest final score, ties resolved by the higher
// current Elo rating, then by lexicographic model id.
inline DatasetItem select_best(const std::vector<ScoredResponse>& scored,
                               const EloTable& table, const std::string& instruction_text) {
  if (scored.empty()) throw std::invalid_argument("select_best: no scored responses");
  const ScoredResponse* best = &scored.front();
  for (std::size_t i = 1; i < scored.size(); ++i) {
    const ScoredResponse& cand = scored[i];
    if (cand.instruction_id != best->instruction_id) {
      throw std::invalid_argument("select_best: mixed instruction ids");
    }
    if (cand.final_score > best->final_score) {
      best = &cand;
    } else if (cand.final_score == best->final_score) {
      const double cand_elo = table.rating(cand.model_id);
      const double best_elo = table.rating(best->model_id);
      if (cand_elo > best_elo ||
          (cand_elo == best_elo && cand.model_id < best->model_id)) {
        best = &cand;
      }
    }
  }
  DatasetItem item;
  item.instruction_id = best->instruction_id;
  item.instruction_text = instruction_text;
  item.winner_model = best->model_id;
  item.gold_response = best->response_text;
  item.all_scored = scored;
  return item;
}

// One JSONL training record per item: {"instruction","output","winner","score"}.
// UTF-8, LF line endings, stable bytes across reruns.
inline std::size_t emit_sft(const std::vector<DatasetItem>& items,
                            const std::filesystem::path& path) {
  if (items.empty()) throw std::invalid_argument("emit_sft: no items");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("emit_sft: cannot open " + path.string());
  for (const auto& item : items) {
    double best_score = 0.0;
    for (const auto& s : item.all_scored) {
      if (s.model_id == item.winner_model) {
        best_score = s.final_score;
        break;
      }
    }
    nlohmann::json record = {{"instruction", item.instruction_text},
                             {"output", item.gold_response},
                             {"winner", item.winner_model},
                             {"score", best_score}};
    out << record.dump() << '\n';
  }
  out.flush();
  if (!out) throw IoFailure("emit_sft: write failed on " + path.string());
  return items.size();
}

struct PreferenceStats {
  std::size_t emitted = 0;
  std::size_t skipped_single_response = 0;
};

// Preference pairs: chosen = gold response, rejected = the lowest-scoring
// response. Items with a single response are skipped and counted.
inline PreferenceStats emit_preferences(const std::vector<DatasetItem>& items,
                                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("emit_preferences: cannot open " + path.string());
  PreferenceStats stats;
  for (const auto& item : items) {
    if (item.all_scored.size() < 2) {
      ++stats.skipped_single_response;
      continue;
    }
    const ScoredResponse* worst = &item.all_scored.front();
    for (const auto& s : item.all_scored) {
      if (s.final_score < worst->final_score ||
          (s.final_score == worst->final_score && s.model_id > worst->model_id)) {
        worst = &s;
      }
    }
    nlohmann::json record = {{"instruction", item.instruction_text},
                             {"chosen", item.gold_response},
                             {"rejected", worst->response_text}};
    out << record.dump() << '\n';
    ++stats.emitted;
  }
  out.flush();
  if (!out) throw IoFailure("emit_preferences: write failed on " + path.string());
  return stats;
}

inline std::string render_classify_prompt(const std::string& instruction_text) {
  std::string out;
  out.reserve(900 + instruction_text.size());
  out +=
      "Classify the coding instruction below into exactly one of these task "
      "categories:\n"
      "- Code Generation: Generating source code based on certain specifications or "
      "requirements.\n"
      "- Code Debugging: Identifying, diagnosing, and fixing errors or bugs in a code "
      "snippet.\n"
      "- Code Optimization: Improving a program's performance, efficiency, or resource "
      "usage without changing its functionality.\n"
      "- Code Reasoning: Predicting the output based on the given input or predicting "
      "the input from the known output.\n"
      "- Code Analysis: Analyzing, understanding, and explaining how a piece of code "
      "works.\n"
      "- Theoretical Explanation: Answering the questions about principles, theories, "
      "and properties of programming language.\n"
      "- Code Transpile: Converting source code from one programming language into "
      "another programming language.\n\n"
      "Instruction:\n";
  out += instruction_text;
  out += "\n\nReply with the category name only.";
  return out;
}

inline std::optional<std::string> parse_task_label(const std::string& reply) {
  for (const auto& category : kTaskCategories) {
    if (reply.find(category) != std::string::npos) return std::string(category);
  }
  return std::nullopt;
}

struct TaskDistribution {
  std::map<std::string, std::size_t> counts;  // category -> labeled items
  std::size_t total = 0;
  std::size_t unlabeled = 0;

  nlohmann::json to_json() const {
    nlohmann::json categories = nlohmann::json::object();
    for (const auto& category : kTaskCategories) {
      const auto it = counts.find(std::string(category));
      const std::size_t count = it == counts.end() ? 0 : it->second;
      const double percent =
          total == 0 ? 0.0 : std::round(10000.0 * count / total) / 100.0;
      categories[std::string(category)] = {{"count", count}, {"percent", percent}};
    }
    return {{"total", total}, {"unlabeled", unlabeled}, {"categories", categories}};
  }
};

// Labels every item with a judge model. Unparseable labels are retried once;
// if more than 10% stay unlabeled the distribution is not trustworthy.
inline TaskDistribution classify_tasks(Gateway& gateway, std::vector<DatasetItem>& items,
                                       const ModelSpec& judge, std::uint64_t rng_seed = 0,
                                       std::size_t workers = 1) {
  TaskDistribution dist;
  dist.total = items.size();
  if (items.empty()) return dist;

  std::vector<std::optional<std::string>> labels(items.size());
  parallel_for(items.size(), workers, [&](std::size_t i) {
    const std::string prompt = render_classify_prompt(items[i].instruction_text);
    for (int attempt = 0; attempt < 2 && !labels[i]; ++attempt) {
      GenerationConfig cfg;
      cfg.temperature = 0.0;
      cfg.seed = static_cast<std::int64_t>(
          derive_seed(rng_seed, "classify", items[i].instruction_id, judge.model_id) +
          attempt);
      CompletionResult reply =
          gateway.chat(judge.as_kind(ApiKind::chat_completion), "", prompt, cfg);
      labels[i] = parse_task_label(reply.text);
    }
  });

  for (std::size_t i = 0; i < items.size(); ++i) {
    if (labels[i]) {
      items[i].task_label = labels[i];
      ++dist.counts[*labels[i]];
    } else {
      ++dist.unlabeled;
    }
  }
  if (dist.unlabeled * 10 > dist.total) {
    throw UnlabeledRemainder("classify_tasks: " + std::to_string(dist.unlabeled) + " of " +
                             std::to_string(dist.total) + " instructions unlabeled");
  }
  return dist;
}

struct DifficultyHistogram {
  std::size_t poor = 0;
  std::size_t average = 0;
  std::size_t good = 0;
  std::size_t excellent = 0;

  std::size_t total() const { return poor + average + good + excellent; }

  void add(DifficultyLevel level) {
    switch (level) {
      case DifficultyLevel::poor: ++poor; break;
      case DifficultyLevel::average: ++average; break;
      case DifficultyLevel::good: ++good; break;
      case DifficultyLevel::excellent: ++excellent; break;
    }
  }

  nlohmann::json to_json() const {
    return {{"poor", poor}, {"average", average}, {"good", good}, {"excellent", excellent},
            {"total", total()}};
  }
};

inline DifficultyHistogram difficulty_report(const std::vector<Instruction>& instructions) {
  DifficultyHistogram hist;
  for (const auto& instr : instructions) {
    if (!instr.difficulty) {
      throw std::invalid_argument("difficulty_report: instruction " + instr.instruction_id +
                                  " has no assessment");
    }
    hist.add(instr.difficulty->level);
  }
  return hist;
}

}  // namespace arena
