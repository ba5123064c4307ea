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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arena/errors.hpp"
#include "arena/gateway.hpp"
#include "arena/instruction.hpp"
#include "arena/rng.hpp"
#include "arena/util.hpp"

namespace arena {

// Default system text fed into the template prefix when mining instructions.
inline constexpr std::string_view kDefaultMiningSystemText =
    "You are an AI assistant designed to provide helpful, step-by-step guidance on "
    "coding problems. The user will ask you a wide range of Python coding questions. "
    "Your purpose is to assist users in understanding coding concepts, working through "
    "code, and arriving at the correct solutions.";

// Cartesian product of sampling settings, temperature-major order.
inline std::vector<GenerationConfig> mining_grid(const std::vector<double>& temperatures,
                                                 const std::vector<double>& top_ps) {
  if (temperatures.empty() || top_ps.empty()) {
    throw std::invalid_argument("mining_grid: empty temperature or top_p list");
  }
  std::vector<GenerationConfig> grid;
  grid.reserve(temperatures.size() * top_ps.size());
  for (double t : temperatures) {
    for (double p : top_ps) {
      GenerationConfig cfg;
      cfg.temperature = t;
      cfg.top_p = p;
      cfg.validate();
      grid.push_back(cfg);
    }
  }
  return grid;
}

struct MiningStats {
  std::size_t requested = 0;
  std::size_t empty_completions = 0;
};

// Samples instructions from the attacker's own distribution by completing
// the chat-template prefix. Output order is the deterministic
// (config, sample-index) order regardless of completion order; per-call
// seeds derive from run_seed so a rerun reproduces the same ids.
// Empty completions are dropped and counted; more than half empty raises
// MiningExhausted. A transport failure that survives the retry policy
// propagates as EndpointUnreachable so the run can checkpoint.
inline std::vector<Instruction> mine(Gateway& gateway, const ModelSpec& attacker,
                                     const std::string& system_text,
                                     const std::vector<GenerationConfig>& grid,
                                     int samples_per_config, std::uint64_t run_seed,
                                     MiningStats* stats_out = nullptr,
                                     std::size_t workers = 1) {
  if (grid.empty()) throw std::invalid_argument("mine: empty grid");
  if (samples_per_config < 1) throw std::invalid_argument("mine: samples_per_config < 1");

  const ModelSpec raw_spec = attacker.as_kind(ApiKind::raw_completion);
  const std::string prefix = render_prefix(attacker.chat_template, system_text);
  const std::size_t total = grid.size() * static_cast<std::size_t>(samples_per_config);

  std::vector<std::optional<Instruction>> slots(total);
  MiningStats stats;
  stats.requested = total;
  std::atomic<std::size_t> empty_completions{0};

  parallel_for(total, workers, [&](std::size_t idx) {
    const std::size_t config_index = idx / samples_per_config;
    const std::size_t sample_index = idx % samples_per_config;
    GenerationConfig cfg = grid[config_index];
    const std::uint64_t model_stream = derive_seed(run_seed, "mining", attacker.model_id);
    cfg.seed = static_cast<std::int64_t>(
        derive_seed(model_stream, "sample", config_index, sample_index));
    CompletionResult result = gateway.complete_raw(raw_spec, prefix, cfg);
    if (normalize_instruction_text(result.text).empty()) {
      empty_completions.fetch_add(1);
      return;
    }
    slots[idx] = Instruction::mined(result.text, attacker.model_id, cfg);
  });

  stats.empty_completions = empty_completions.load();
  if (stats_out != nullptr) *stats_out = stats;

  if (stats.empty_completions * 2 > total) {
    throw MiningExhausted("mining " + attacker.model_id + ": " +
                          std::to_string(stats.empty_completions) + " of " +
                          std::to_string(total) + " completions were empty");
  }

  std::vector<Instruction> out;
  out.reserve(total);
  for (auto& slot : slots) {
    if (slot) out.push_back(std::move(*slot));
  }
  return out;
}

}  // namespace arena
