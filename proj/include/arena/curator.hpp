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
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "arena/errors.hpp"
#include "arena/gateway.hpp"
#include "arena/instruction.hpp"
#include "arena/rng.hpp"
#include "arena/rouge.hpp"
#include "arena/util.hpp"

namespace arena {

// Four-level difficulty rubric presented to the judges, instruction
// appended, one bare integer demanded on the final line.
inline std::string render_difficulty_prompt(const std::string& instruction_text) {
  std::string out;
  out.reserve(900 + instruction_text.size());
  out +=
      "Rate the difficulty of the coding instruction below on a 1-10 scale using these "
      "levels:\n"
      "- Excellent (9-10): For instructions that are very clear, specific, and "
      "well-articulated. These instructions are particularly challenging and excellently "
      "designed to assess the AI's proficiency.\n"
      "- Good (6-8): For instructions that are clear and specific instructions. These are "
      "not overly difficult to answer and moderately assess the AI's capabilities.\n"
      "- Average (3-5): For instructions that are fairly clear and specific instructions. "
      "These instructions are easy to answer.\n"
      "- Poor (1-2): For instructions that are ambiguous or unclear.\n\n"
      "Instruction:\n";
  out += instruction_text;
  out += "\n\nReply with a single integer from 1 to 10 on the final line.";
  return out;
}

// Last integer on the last digit-bearing line; anything outside [1,10] is
// unparseable.
inline std::optional<int> parse_difficulty_score(const std::string& reply) {
  std::size_t end = reply.size();
  while (end > 0) {
    std::size_t start = reply.rfind('\n', end - 1);
    const std::size_t line_begin = (start == std::string::npos) ? 0 : start + 1;
    const std::string_view line(reply.data() + line_begin, end - line_begin);
    std::optional<int> last_int;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (std::isdigit(static_cast<unsigned char>(line[i]))) {
        int value = 0;
        std::size_t j = i;
        while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) {
          value = value * 10 + (line[j] - '0');
          ++j;
        }
        last_int = value;
        i = j;
      }
    }
    if (last_int) {
      if (*last_int >= 1 && *last_int <= 10) return last_int;
      return std::nullopt;
    }
    if (start == std::string::npos) break;
    end = start;
  }
  return std::nullopt;
}

// Removes exact duplicates (same content hash), then near-duplicates
// greedily in input order: a candidate dies when its ROUGE-L F1 against any
// survivor reaches the threshold. Survivors advance to deduped.
inline std::vector<Instruction> dedup(std::vector<Instruction> instructions,
                                      double near_dup_threshold) {
  if (near_dup_threshold <= 0.0 || near_dup_threshold > 1.0) {
    throw std::invalid_argument("near_dup_threshold must be in (0,1]");
  }
  std::set<std::string> seen_ids;
  std::vector<Instruction> survivors;

  // Tokens are interned to ints once; the length bound
  // F1 <= 2*min(m,n)/(m+n) prunes most LCS evaluations.
  std::map<std::string, std::uint32_t> intern;
  auto tokenize_ids = [&](const std::string& text) {
    std::vector<std::uint32_t> ids;
    for (auto& tok : whitespace_tokens(text)) {
      auto [it, inserted] = intern.emplace(std::move(tok), intern.size());
      ids.push_back(it->second);
    }
    return ids;
  };
  std::vector<std::vector<std::uint32_t>> survivor_tokens;

  const bool exact_only = near_dup_threshold >= 1.0;
  std::set<std::vector<std::uint32_t>> exact_token_seqs;

  for (auto& instr : instructions) {
    if (!seen_ids.insert(instr.instruction_id).second) continue;
    auto tokens = tokenize_ids(instr.text);

    bool duplicate = false;
    if (exact_only) {
      // F1 reaches 1.0 exactly when the token sequences are equal.
      duplicate = !exact_token_seqs.insert(tokens).second;
    } else {
      const double m = static_cast<double>(tokens.size());
      for (std::size_t s = 0; s < survivors.size(); ++s) {
        const double n = static_cast<double>(survivor_tokens[s].size());
        if (m + n > 0.0 && 2.0 * std::min(m, n) / (m + n) < near_dup_threshold) continue;
        if (rouge_l_f1_tokens(tokens, survivor_tokens[s]) >= near_dup_threshold) {
          duplicate = true;
          break;
        }
      }
    }
    if (duplicate) continue;
    instr.advance_status(InstructionStatus::deduped);
    survivor_tokens.push_back(std::move(tokens));
    survivors.push_back(std::move(instr));
  }
  return survivors;
}

// Judge-panel difficulty scoring for one instruction. Unparseable replies
// are retried once and then excluded; when every judge is excluded the
// instruction is quarantined via NoValidAssessment, never dropped silently.
inline DifficultyAssessment score_difficulty(Gateway& gateway, const Instruction& instr,
                                             const std::vector<ModelSpec>& judges,
                                             std::uint64_t rng_seed = 0) {
  if (judges.empty()) throw std::invalid_argument("score_difficulty: no judges");
  for (const auto& judge : judges) {
    if (judge.model_id == instr.source_expert) {
      throw std::logic_error("difficulty judge " + judge.model_id +
                             " authored the instruction");
    }
  }
  const std::string prompt = render_difficulty_prompt(instr.text);
  std::map<std::string, int> scores;
  for (const auto& judge : judges) {
    std::optional<int> score;
    for (int attempt = 0; attempt < 2 && !score; ++attempt) {
      GenerationConfig cfg;
      cfg.temperature = 0.0;
      cfg.seed = static_cast<std::int64_t>(
          derive_seed(rng_seed, "difficulty", instr.instruction_id, judge.model_id) + attempt);
      CompletionResult reply =
          gateway.chat(judge.as_kind(ApiKind::chat_completion), "", prompt, cfg);
      score = parse_difficulty_score(reply.text);
    }
    if (score) scores[judge.model_id] = *score;
  }
  if (scores.empty()) {
    throw NoValidAssessment("instruction " + instr.instruction_id +
                            ": no judge produced a parseable difficulty score");
  }
  return DifficultyAssessment::from_scores(std::move(scores));
}

// Keeps exactly the instructions with mean difficulty >= 6 (boundary
// inclusive, unrounded mean). Survivors advance to filtered.
inline std::vector<Instruction> filter_by_difficulty(std::vector<Instruction> instructions) {
  std::vector<Instruction> out;
  for (auto& instr : instructions) {
    if (!instr.difficulty) {
      throw std::invalid_argument("filter_by_difficulty: instruction " +
                                  instr.instruction_id + " has no assessment");
    }
    if (instr.difficulty->aggregate >= 6.0) {
      if (instr.status < InstructionStatus::filtered) {
        instr.advance_status(InstructionStatus::filtered);
      }
      out.push_back(std::move(instr));
    }
  }
  return out;
}

// Histogram of max-ROUGE-L-vs-corpus, bucket width 0.1; scores of exactly
// 1.0 land in the top bucket.
struct OverlapHistogram {
  std::array<std::size_t, 10> buckets{};
  std::size_t total = 0;

  static std::size_t bucket_for(double score) {
    if (score >= 1.0) return 9;
    if (score < 0.0) return 0;
    return static_cast<std::size_t>(score * 10.0);
  }
};

inline OverlapHistogram overlap_report(const std::vector<Instruction>& mined,
                                       const std::vector<std::string>& reference_corpus,
                                       std::size_t workers = 1) {
  if (reference_corpus.empty()) {
    throw std::invalid_argument("overlap_report: reference corpus is empty");
  }
  std::vector<std::vector<std::string>> corpus_tokens;
  corpus_tokens.reserve(reference_corpus.size());
  for (const auto& text : reference_corpus) corpus_tokens.push_back(whitespace_tokens(text));

  std::vector<double> max_scores(mined.size(), 0.0);
  parallel_for(mined.size(), workers, [&](std::size_t i) {
    const auto tokens = whitespace_tokens(mined[i].text);
    double best = 0.0;
    for (const auto& ref : corpus_tokens) {
      best = std::max(best, rouge_l_f1_tokens(tokens, ref));
    }
    max_scores[i] = best;
  });

  OverlapHistogram hist;
  hist.total = mined.size();
  for (double s : max_scores) ++hist.buckets[OverlapHistogram::bucket_for(s)];
  return hist;
}

}  // namespace arena
