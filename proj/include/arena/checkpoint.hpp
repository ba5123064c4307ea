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
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "arena/errors.hpp"
#include "arena/hash.hpp"

namespace arena {

// Pipeline stages in their only legal order.
enum class Stage { none = 0, mined, curated, battled, scored, emitted };

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::none: return "none";
    case Stage::mined: return "mined";
    case Stage::curated: return "curated";
    case Stage::battled: return "battled";
    case Stage::scored: return "scored";
    case Stage::emitted: return "emitted";
  }
  return "?";
}

inline Stage stage_from(const std::string& s) {
  if (s == "none") return Stage::none;
  if (s == "mined") return Stage::mined;
  if (s == "curated") return Stage::curated;
  if (s == "battled") return Stage::battled;
  if (s == "scored") return Stage::scored;
  if (s == "emitted") return Stage::emitted;
  throw ConfigInvalid("unknown checkpoint stage: " + s);
}

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot digest missing file: " + path.string());
  Sha256 hasher;
  char buffer[65536];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    hasher.update(buffer, static_cast<std::size_t>(in.gcount()));
  }
  auto digest = hasher.digest();
  return to_hex(digest.data(), digest.size());
}

// Whole-file write that lands atomically: temp file in the same directory,
// then rename over the target.
inline void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open temp file: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoFailure("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// Stage marker plus per-stage counters and content digests of the stage
// artifacts. Digests are verified before any dependent stage runs.
struct Checkpoint {
  Stage stage = Stage::none;
  std::map<std::string, std::uint64_t> counts;
  std::map<std::string, std::string> digests;  // artifact filename -> sha256

  nlohmann::json to_json() const {
    return {{"stage", to_string(stage)}, {"counts", counts}, {"digests", digests}};
  }

  static Checkpoint from_json(const nlohmann::json& j) {
    Checkpoint c;
    c.stage = stage_from(j.value("stage", "none"));
    if (j.contains("counts")) {
      c.counts = j["counts"].get<std::map<std::string, std::uint64_t>>();
    }
    if (j.contains("digests")) {
      c.digests = j["digests"].get<std::map<std::string, std::string>>();
    }
    return c;
  }

  static Checkpoint load_or_empty(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return Checkpoint{};
    auto parsed = nlohmann::json::parse(in, nullptr, false);
    if (parsed.is_discarded()) {
      throw StageDependencyMissing("checkpoint file is corrupt: " + path.string());
    }
    return from_json(parsed);
  }

  void save(const std::filesystem::path& path) const {
    atomic_write_text(path, to_json().dump(2) + "\n");
  }
};

}  // namespace arena
