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

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "arena/errors.hpp"

namespace arena {

// Append-only JSONL event log. One JSON object per line, flushed per append,
// so a crash loses at most the line being written. The logs are the single
// source of truth of a run; every derived artifact is a projection of them.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path) : path_(std::move(path)) {
    std::filesystem::create_directories(path_.parent_path().empty()
                                            ? std::filesystem::path(".")
                                            : path_.parent_path());
    out_.open(path_, std::ios::app | std::ios::binary);
    if (!out_) throw IoFailure("cannot open event log: " + path_.string());
  }

  void append(const nlohmann::json& record) {
    const std::string line = record.dump();
    std::lock_guard<std::mutex> lock(mu_);
    out_ << line << '\n';
    out_.flush();
    if (!out_) throw IoFailure("write failed on event log: " + path_.string());
  }

  const std::filesystem::path& path() const { return path_; }

  // Drops a torn final line (crash mid-write) so the file ends at the last
  // complete record before anything is appended after it.
  static void truncate_torn_tail(const std::filesystem::path& path) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec || size == 0) return;
    std::ifstream in(path, std::ios::binary);
    if (!in) return;
    std::string content(size, '\0');
    in.read(content.data(), static_cast<std::streamsize>(size));
    const auto last_newline = content.rfind('\n');
    if (last_newline == std::string::npos) {
      std::filesystem::resize_file(path, 0);
    } else if (last_newline + 1 < content.size()) {
      std::filesystem::resize_file(path, last_newline + 1);
    }
  }

  // Reads all complete records. A torn final line (crash mid-write) is
  // ignored; a malformed line anywhere else means real corruption.
  static std::vector<nlohmann::json> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open event log for read: " + path.string());
    std::vector<nlohmann::json> records;
    std::string line;
    bool pending_error = false;
    std::string pending_what;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (pending_error) throw IoFailure("corrupt event log line in " + path.string() + ": " + pending_what);
      auto parsed = nlohmann::json::parse(line, nullptr, false);
      if (parsed.is_discarded()) {
        // Only acceptable as the very last line.
        pending_error = true;
        pending_what = line.substr(0, 120);
        continue;
      }
      records.push_back(std::move(parsed));
    }
    return records;
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mu_;
};

}  // namespace arena
