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

// Stage-oriented driver for the expert-battle data pipeline:
//   arena-forge <mine|curate|battle|score|emit|report|simulate|run-all>
//               --config <file> [--force] [--seed N] [--out DIR]

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "arena/config.hpp"
#include "arena/pipeline.hpp"
#include "arena/simulate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfigInvalid = 2;
constexpr int kExitStageDependencyMissing = 3;
constexpr int kExitEndpointUnreachable = 4;

int run_simulation(const arena::RunConfig& cfg) {
  if (cfg.sim.skills.size() < 2) {
    std::fprintf(stderr, "[arena-forge] sim.skills: need at least 2 competitors\n");
    return kExitConfigInvalid;
  }
  std::filesystem::create_directories(cfg.output_dir);
  auto suite = arena::run_simulation_suite(cfg, cfg.output_dir / "sim_runs");
  arena::atomic_write_text(cfg.output_dir / "sim_report.json",
                           suite.to_json().dump(2) + "\n");
  std::fprintf(stderr,
               "[arena-forge] simulate: %zu seeds, exact ranking in %zu, mean tau %.4f, "
               "mean battles %.1f\n",
               suite.seeds, suite.exact_match, suite.mean_kendall_tau,
               suite.mean_battles_run);
  return kExitOk;
}

int run_command(const std::string& command, arena::RunConfig cfg, bool force) {
  if (command == "simulate") return run_simulation(cfg);

  arena::Pipeline pipeline(std::move(cfg), force);
  if (command == "mine") {
    pipeline.run_mine();
  } else if (command == "curate") {
    pipeline.run_curate();
  } else if (command == "battle") {
    pipeline.run_battle();
  } else if (command == "score") {
    pipeline.run_score();
  } else if (command == "emit") {
    pipeline.run_emit();
  } else if (command == "report") {
    pipeline.run_report();
  } else if (command == "run-all") {
    pipeline.run_all();
  }
  const auto& counts = pipeline.checkpoint().counts;
  std::fprintf(stderr, "[arena-forge] %s done, stage=%s", command.c_str(),
               arena::to_string(pipeline.checkpoint().stage));
  for (const char* key : {"instructions_raw", "selected", "battles", "sft_records"}) {
    auto it = counts.find(key);
    if (it != counts.end()) std::fprintf(stderr, " %s=%llu", key,
                                         static_cast<unsigned long long>(it->second));
  }
  std::fprintf(stderr, "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"expert-battle data pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  bool force = false;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;

  static const char* kCommands[] = {"mine",  "curate", "battle",   "score",
                                    "emit",  "report", "simulate", "run-all"};
  for (const char* name : kCommands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_flag("--force", force, "re-run a completed stage");
    sub->add_option("--seed", seed_override, "override rng_seed");
    sub->add_option("--out", out_override, "override output_dir");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    arena::RunConfig cfg = arena::load_run_config(config_path);
    if (seed_override) cfg.rng_seed = *seed_override;
    if (out_override) cfg.output_dir = *out_override;
    return run_command(command, std::move(cfg), force);
  } catch (const arena::ConfigInvalid& e) {
    std::fprintf(stderr, "[arena-forge] config invalid: %s\n", e.what());
    return kExitConfigInvalid;
  } catch (const arena::StageDependencyMissing& e) {
    std::fprintf(stderr, "[arena-forge] stage dependency missing: %s\n", e.what());
    return kExitStageDependencyMissing;
  } catch (const arena::EndpointUnreachable& e) {
    std::fprintf(stderr, "[arena-forge] endpoint unreachable, checkpoint preserved: %s\n",
                 e.what());
    return kExitEndpointUnreachable;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "[arena-forge] error: %s\n", e.what());
    return kExitError;
  }
}
