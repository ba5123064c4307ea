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

#include <chrono>
#include <cmath>
#include <string>

#include <httplib.h>
#include <json.hpp>

namespace arena {

struct TransportReply {
  int status = 0;              // 0 = transport failure (no HTTP status)
  nlohmann::json body;         // parsed when parse_ok
  bool parse_ok = false;
  std::string error;           // transport error or parse diagnostics

  bool transport_ok() const { return status != 0; }
};

// One POST of a JSON body to <base_url><path>. Implementations: real HTTP
// below, and the in-process loopback in mock_fleet.hpp — both carry the same
// JSON schema, so everything above this line is transport-agnostic.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportReply post(const std::string& base_url, const std::string& path,
                              const nlohmann::json& body, double timeout_seconds,
                              const std::string& bearer_token) = 0;
};

class HttpTransport : public Transport {
 public:
  TransportReply post(const std::string& base_url, const std::string& path,
                      const nlohmann::json& body, double timeout_seconds,
                      const std::string& bearer_token) override {
    TransportReply reply;
    httplib::Client client(base_url);
    const auto whole = std::max(1, static_cast<int>(std::ceil(timeout_seconds)));
    client.set_connection_timeout(whole, 0);
    client.set_read_timeout(whole, 0);
    client.set_write_timeout(whole, 0);
    httplib::Headers headers;
    if (!bearer_token.empty()) {
      headers.emplace("Authorization", "Bearer " + bearer_token);
    }
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      reply.error = "transport: " + httplib::to_string(res.error());
      return reply;
    }
    reply.status = res->status;
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) {
      reply.error = "response is not JSON";
    } else {
      reply.body = std::move(parsed);
      reply.parse_ok = true;
    }
    return reply;
  }
};

}  // namespace arena
