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

#include <string>

#include <httplib.h>

#include "arena/judge.hpp"
#include "arena/mock_fleet.hpp"

namespace {

arena::SyntheticExpert statistical(const std::string& id, double skill = 0.5) {
  arena::SyntheticExpert e;
  e.model_id = id;
  e.latent_skill = skill;
  e.behavior = arena::SyntheticExpert::Behavior::statistical;
  return e;
}

nlohmann::json chat_body(const std::string& model, const std::string& user,
                         std::int64_t seed) {
  return {{"model", model},
          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", user}}})},
          {"seed", seed}};
}

std::string reply_text(const nlohmann::json& reply) {
  return reply.at("choices").at(0).at("message").at("content").get<std::string>();
}

}  // namespace

TEST_CASE("scripted experts return their canned text verbatim") {
  arena::SyntheticExpert e;
  e.model_id = "canned";
  e.behavior = arena::SyntheticExpert::Behavior::scripted;
  e.canned = {"the one answer"};
  arena::MockFleet fleet({e}, {});

  for (int i = 0; i < 3; ++i) {
    int status = 0;
    auto reply = fleet.handle("/v1/chat/completions", chat_body("canned", "anything", i), status);
    CHECK(status == 200);
    CHECK(reply_text(reply) == "the one answer");
  }
}

TEST_CASE("statistical judge follows the clamped linear vote model") {
  arena::MockFleetOptions options;
  options.vote_sharpness = 0.5;
  options.seed = 99;
  arena::MockFleet fleet({statistical("judge")}, options);

  const std::string prompt = arena::render_judge_prompt(
      "the question", "good answer [quality:0.9000]", "weak answer [quality:0.1000]");

  // p = 0.5 + 0.5 * (0.9 - 0.1) = 0.9 for the first slot.
  int votes_a = 0;
  const int n = 3000;
  for (int i = 0; i < n; ++i) {
    int status = 0;
    auto reply = fleet.handle("/v1/chat/completions", chat_body("judge", prompt, i), status);
    const auto verdict = arena::parse_verdict(reply_text(reply));
    if (verdict == arena::Verdict::A) ++votes_a;
  }
  const double freq = static_cast<double>(votes_a) / n;
  CHECK(freq > 0.87);
  CHECK(freq < 0.93);
}

TEST_CASE("vote probability clamps at the extremes") {
  arena::MockFleetOptions options;
  options.vote_sharpness = 10.0;
  arena::MockFleet fleet({statistical("judge")}, options);
  const std::string prompt = arena::render_judge_prompt(
      "q", "strong [quality:0.9500]", "weak [quality:0.0500]");
  for (int i = 0; i < 50; ++i) {
    int status = 0;
    auto reply = fleet.handle("/v1/chat/completions", chat_body("judge", prompt, i), status);
    CHECK(arena::parse_verdict(reply_text(reply)) == arena::Verdict::A);
  }
}

TEST_CASE("fleet replies are pure functions of the request") {
  arena::MockFleet fleet({statistical("expert-a", 0.7)}, {});
  int s1 = 0, s2 = 0;
  auto body = chat_body("expert-a", "solve it", 55);
  auto r1 = fleet.handle("/v1/chat/completions", body, s1);
  auto r2 = fleet.handle("/v1/chat/completions", body, s2);
  CHECK(r1.dump() == r2.dump());
}

TEST_CASE("unknown models get a 404") {
  arena::MockFleet fleet({statistical("expert-a")}, {});
  int status = 0;
  (void)fleet.handle("/v1/chat/completions", chat_body("ghost", "hi", 0), status);
  CHECK(status == 404);
}

TEST_CASE("HTTP endpoints speak the documented wire format") {
  arena::MockFleet fleet({statistical("expert-a", 0.6)}, {});
  fleet.start_http();

  httplib::Client client(fleet.base_url());

  // Raw completion
  nlohmann::json raw_body = {{"model", "expert-a"},
                             {"prompt", "<|im_start|>system\ns<|im_end|>\n<|im_start|>user\n"},
                             {"temperature", 1.0},
                             {"top_p", 1.0},
                             {"max_tokens", 256},
                             {"stop", {"<|im_end|>", "<|im_start|>assistant"}},
                             {"seed", 1}};
  auto raw_res = client.Post("/v1/completions", raw_body.dump(), "application/json");
  REQUIRE(raw_res);
  CHECK(raw_res->status == 200);
  auto raw_json = nlohmann::json::parse(raw_res->body);
  CHECK(raw_json.at("choices").at(0).contains("text"));

  // Chat completion
  auto chat_res =
      client.Post("/v1/chat/completions", chat_body("expert-a", "hello", 2).dump(),
                  "application/json");
  REQUIRE(chat_res);
  auto chat_json = nlohmann::json::parse(chat_res->body);
  CHECK(chat_json.at("choices").at(0).at("message").at("role") == "assistant");

  // Embeddings
  nlohmann::json embed_body = {{"model", arena::MockFleet::kEmbedderId},
                               {"input", {"one two", "three"}}};
  auto embed_res = client.Post("/v1/embeddings", embed_body.dump(), "application/json");
  REQUIRE(embed_res);
  auto embed_json = nlohmann::json::parse(embed_res->body);
  REQUIRE(embed_json.at("data").size() == 2);
  CHECK(embed_json.at("data").at(0).at("embedding").size() == 16);

  fleet.stop();
}

TEST_CASE("loopback and HTTP produce identical bodies for the same request") {
  auto make_fleet = [] {
    arena::MockFleetOptions options;
    options.seed = 31337;
    return arena::MockFleet({statistical("expert-a", 0.6)}, options);
  };

  auto body = chat_body("expert-a", "compare transports", 9);

  auto fleet_a = make_fleet();
  int status = 0;
  auto loopback_reply = fleet_a.handle("/v1/chat/completions", body, status);

  auto fleet_b = make_fleet();
  fleet_b.start_http();
  httplib::Client client(fleet_b.base_url());
  auto http_res = client.Post("/v1/chat/completions", body.dump(), "application/json");
  REQUIRE(http_res);
  CHECK(nlohmann::json::parse(http_res->body).dump() == loopback_reply.dump());
  fleet_b.stop();
}
