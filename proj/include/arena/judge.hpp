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
#include <string>
#include <vector>

#include "arena/errors.hpp"
#include "arena/gateway.hpp"
#include "arena/rng.hpp"

namespace arena {

// Positional verdict as emitted by a judge ("A" = first presented answer),
// and competitor-relative verdict after de-shuffling ("A" = attacker).
enum class Verdict { A, B, Tie, Unparseable };

enum class PresentedOrder { attacker_first, defender_first };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::A: return "A";
    case Verdict::B: return "B";
    case Verdict::Tie: return "Tie";
    case Verdict::Unparseable: return "Unparseable";
  }
  return "?";
}

inline const char* to_string(PresentedOrder o) {
  return o == PresentedOrder::attacker_first ? "attacker_first" : "defender_first";
}

struct Vote {
  std::string judge_id;
  Verdict verdict = Verdict::Unparseable;  // attacker-relative, de-shuffled
  PresentedOrder presented_order = PresentedOrder::attacker_first;
  std::string raw_text;  // full judge reply, kept for audit
};

struct VoteTally {
  int t_attacker = 0;
  int t_defender = 0;
  int ties = 0;
  double local_attacker = 0.5;
  double local_defender = 0.5;
  std::vector<Vote> votes;

  int decided_votes() const { return t_attacker + t_defender; }
};

// Vote share of the decided votes. Ties carry no share; with no decided
// votes both sides get the symmetric 0.5.
inline void finalize_tally(VoteTally& tally) {
  const int decided = tally.t_attacker + tally.t_defender;
  if (decided > 0) {
    tally.local_attacker = static_cast<double>(tally.t_attacker) / decided;
    tally.local_defender = static_cast<double>(tally.t_defender) / decided;
  } else {
    tally.local_attacker = 0.5;
    tally.local_defender = 0.5;
  }
}

namespace judge_markers {
inline constexpr std::string_view kAnswerAStart = "[[The Start of Assistant A's Answer]]";
inline constexpr std::string_view kAnswerAEnd = "[[The End of Assistant A's Answer]]";
inline constexpr std::string_view kAnswerBStart = "[[The Start of Assistant B's Answer]]";
inline constexpr std::string_view kAnswerBEnd = "[[The End of Assistant B's Answer]]";
inline constexpr std::string_view kVerdictA = "[[A]]";
inline constexpr std::string_view kVerdictB = "[[B]]";
inline constexpr std::string_view kVerdictTie = "[[Tie]]";
}  // namespace judge_markers

// The pairwise-evaluation prompt. Competitor names are withheld; answers are
// identified only by their anonymous slots.
inline std::string render_judge_prompt(const std::string& instruction,
                                       const std::string& first_answer,
                                       const std::string& second_answer) {
  std::string out;
  out.reserve(1400 + instruction.size() + first_answer.size() + second_answer.size());
  out +=
      "This is a chatbot arena. You will be given assistant A's answer, and assistant "
      "B's answer. Please act as an impartial judge and evaluate the capability of two "
      "AI assistants. You should choose the assistant that follows instructions and "
      "answers questions better. Your evaluation should consider factors such as "
      "helpfulness, relevance, and accuracy. Begin your evaluation by comparing the "
      "responses of the two assistants and provide a short explanation. Avoid any "
      "position biases and ensure that the order in which the responses were presented "
      "does not influence your decision. DO NOT allow the LENGTH of the responses to "
      "influence your evaluation, choose the one that is straight-to-the-point instead "
      "of unnecessarily verbose. When the two candidates perform equally well, choose "
      "the SHORTER answer. Do not favor certain names of the assistants. Be as "
      "objective as possible. After providing your explanation concisely within 200 "
      "words, output your final verdict by strictly following this format: \"[[A]]\" if "
      "assistant A is better, \"[[B]]\" if assistant B is better, and \"[[Tie]]\" for a "
      "tie. Finish your judgement within 300 words.\n\n";
  out += "[[User Question]]\n";
  out += instruction;
  out += "\n\n";
  out += judge_markers::kAnswerAStart;
  out += "\n";
  out += first_answer;
  out += "\n\n";
  out += judge_markers::kAnswerAEnd;
  out += "\n\n";
  out += judge_markers::kAnswerBStart;
  out += "\n";
  out += second_answer;
  out += "\n\n";
  out += judge_markers::kAnswerBEnd;
  out += "\n";
  return out;
}

// The last occurrence of [[A]] / [[B]] / [[Tie]] wins; none present means the
// reply is unparseable (a value, not an error).
inline Verdict parse_verdict(const std::string& raw_text) {
  const auto pos_a = raw_text.rfind(judge_markers::kVerdictA);
  const auto pos_b = raw_text.rfind(judge_markers::kVerdictB);
  const auto pos_tie = raw_text.rfind(judge_markers::kVerdictTie);
  Verdict best = Verdict::Unparseable;
  std::size_t best_pos = std::string::npos;
  auto consider = [&](std::size_t pos, Verdict v) {
    if (pos != std::string::npos && (best_pos == std::string::npos || pos > best_pos)) {
      best_pos = pos;
      best = v;
    }
  };
  consider(pos_a, Verdict::A);
  consider(pos_b, Verdict::B);
  consider(pos_tie, Verdict::Tie);
  return best;
}

// Presentation order for one (battle, judge) pair. The derivation rule is
// part of the reproducibility contract; tests recompute it.
inline PresentedOrder presentation_order(std::uint64_t rng_seed, const std::string& battle_id,
                                         const std::string& judge_id) {
  Rng rng = substream(rng_seed, "shuffle", battle_id, judge_id);
  return rng.coin() ? PresentedOrder::defender_first : PresentedOrder::attacker_first;
}

// Asks every judge to vote on the pair of responses. Presentation order is
// drawn per judge from the seeded shuffle stream; verdicts are de-shuffled
// back to attacker/defender before tallying. An unparseable verdict is
// retried once, then dropped. All votes dropped -> NoValidVotes.
inline VoteTally collect_votes(Gateway& gateway, const std::string& battle_id,
                               const std::string& instruction_text,
                               const std::string& response_attacker,
                               const std::string& response_defender,
                               const std::vector<ModelSpec>& judges,
                               std::uint64_t rng_seed) {
  if (judges.empty()) throw std::invalid_argument("collect_votes: no judges");
  VoteTally tally;
  for (const ModelSpec& judge : judges) {
    const PresentedOrder order = presentation_order(rng_seed, battle_id, judge.model_id);
    const std::string& first =
        order == PresentedOrder::attacker_first ? response_attacker : response_defender;
    const std::string& second =
        order == PresentedOrder::attacker_first ? response_defender : response_attacker;
    const std::string prompt = render_judge_prompt(instruction_text, first, second);

    Vote vote;
    vote.judge_id = judge.model_id;
    vote.presented_order = order;
    Verdict positional = Verdict::Unparseable;
    for (int attempt = 0; attempt < 2 && positional == Verdict::Unparseable; ++attempt) {
      GenerationConfig cfg;
      cfg.temperature = 0.0;  // judging wants the most deterministic mode
      cfg.top_p = 1.0;
      cfg.seed = static_cast<std::int64_t>(
          derive_seed(rng_seed, "vote", battle_id, judge.model_id) + attempt);
      CompletionResult reply = gateway.chat(judge.as_kind(ApiKind::chat_completion), "",
                                            prompt, cfg);
      vote.raw_text = reply.text;
      positional = parse_verdict(reply.text);
    }
    if (positional == Verdict::Unparseable) continue;  // dropped from the tally

    if (positional == Verdict::Tie) {
      vote.verdict = Verdict::Tie;
      ++tally.ties;
    } else {
      const bool first_wins = positional == Verdict::A;
      const bool attacker_wins = (order == PresentedOrder::attacker_first) == first_wins;
      vote.verdict = attacker_wins ? Verdict::A : Verdict::B;
      (attacker_wins ? tally.t_attacker : tally.t_defender) += 1;
    }
    tally.votes.push_back(std::move(vote));
  }
  if (tally.votes.empty()) {
    throw NoValidVotes("battle " + battle_id + ": no judge produced a parseable verdict");
  }
  finalize_tally(tally);
  return tally;
}

}  // namespace arena
