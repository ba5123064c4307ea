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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "arena/hash.hpp"
#include "arena/model.hpp"

namespace arena {

// Lifecycle of a mined instruction. Transitions are forward-only.
enum class InstructionStatus { raw, deduped, filtered, selected };

inline const char* to_string(InstructionStatus s) {
  switch (s) {
    case InstructionStatus::raw: return "raw";
    case InstructionStatus::deduped: return "deduped";
    case InstructionStatus::filtered: return "filtered";
    case InstructionStatus::selected: return "selected";
  }
  return "?";
}

inline InstructionStatus instruction_status_from(std::string_view s) {
  if (s == "raw") return InstructionStatus::raw;
  if (s == "deduped") return InstructionStatus::deduped;
  if (s == "filtered") return InstructionStatus::filtered;
  if (s == "selected") return InstructionStatus::selected;
  throw std::invalid_argument("unknown instruction status: " + std::string(s));
}

enum class DifficultyLevel { poor, average, good, excellent };

inline const char* to_string(DifficultyLevel l) {
  switch (l) {
    case DifficultyLevel::poor: return "poor";
    case DifficultyLevel::average: return "average";
    case DifficultyLevel::good: return "good";
    case DifficultyLevel::excellent: return "excellent";
  }
  return "?";
}

// Band lookup on the rounded aggregate: poor [1,2], average [3,5],
// good [6,8], excellent [9,10].
inline DifficultyLevel difficulty_level_for(double aggregate) {
  const long rounded = std::lround(aggregate);
  if (rounded <= 2) return DifficultyLevel::poor;
  if (rounded <= 5) return DifficultyLevel::average;
  if (rounded <= 8) return DifficultyLevel::good;
  return DifficultyLevel::excellent;
}

struct DifficultyAssessment {
  std::map<std::string, int> per_judge;  // judge_id -> score in [1,10]
  double aggregate = 0.0;                // arithmetic mean of per_judge
  DifficultyLevel level = DifficultyLevel::poor;

  static DifficultyAssessment from_scores(std::map<std::string, int> scores) {
    if (scores.empty()) throw std::invalid_argument("difficulty: no judge scores");
    double sum = 0.0;
    for (const auto& [judge, score] : scores) {
      if (score < 1 || score > 10) {
        throw std::invalid_argument("difficulty score out of [1,10] from " + judge);
      }
      sum += score;
    }
    DifficultyAssessment a;
    a.aggregate = sum / static_cast<double>(scores.size());
    a.level = difficulty_level_for(a.aggregate);
    a.per_judge = std::move(scores);
    return a;
  }
};

// Identity must not depend on endpoint whitespace habits: normalize line
// endings (CRLF and lone CR become LF) and trim outer whitespace, then hash.
inline std::string normalize_instruction_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      out.push_back('\n');
    } else {
      out.push_back(text[i]);
    }
  }
  const auto first = out.find_first_not_of(" \t\n\v\f");
  if (first == std::string::npos) return "";
  const auto last = out.find_last_not_of(" \t\n\v\f");
  return out.substr(first, last - first + 1);
}

inline std::string instruction_id_for(std::string_view text) {
  return sha256_hex(normalize_instruction_text(text)).substr(0, 16);
}

struct Instruction {
  std::string instruction_id;  // content hash of the normalized text
  std::string text;
  std::string source_expert;
  GenerationConfig gen_config;
  InstructionStatus status = InstructionStatus::raw;
  std::optional<DifficultyAssessment> difficulty;
  std::optional<std::vector<double>> embedding;

  static Instruction mined(std::string text, std::string source_expert,
                           GenerationConfig cfg) {
    Instruction i;
    i.instruction_id = instruction_id_for(text);
    i.text = std::move(text);
    i.source_expert = std::move(source_expert);
    i.gen_config = cfg;
    return i;
  }

  void advance_status(InstructionStatus next) {
    if (static_cast<int>(next) < static_cast<int>(status)) {
      throw std::logic_error(std::string("instruction status may not move backward: ") +
                             to_string(status) + " -> " + to_string(next));
    }
    status = next;
  }
};

}  // namespace arena
