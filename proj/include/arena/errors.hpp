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

#include <stdexcept>
#include <string>

namespace arena {

// Base class for every failure the pipeline can signal. Subclasses map 1:1
// onto the error names used throughout the public operation contracts.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Transport-level failure that survived all retry attempts.
class EndpointUnreachable : public Error {
 public:
  explicit EndpointUnreachable(const std::string& what) : Error(what) {}
};

// The endpoint answered, but the payload does not conform to the wire schema.
class MalformedResponse : public Error {
 public:
  explicit MalformedResponse(const std::string& what) : Error(what) {}
};

// An embedding endpoint returned vectors of unequal dimension.
class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

// More than half of the mining calls failed or came back empty.
class MiningExhausted : public Error {
 public:
  explicit MiningExhausted(const std::string& what) : Error(what) {}
};

// Every judge reply for one instruction was unparseable after retry.
class NoValidAssessment : public Error {
 public:
  explicit NoValidAssessment(const std::string& what) : Error(what) {}
};

// k-center selection asked for more centers than there are points.
class KTooLarge : public Error {
 public:
  explicit KTooLarge(const std::string& what) : Error(what) {}
};

// Fewer than three arena models, or fewer than two competitors.
class RosterTooSmall : public Error {
 public:
  explicit RosterTooSmall(const std::string& what) : Error(what) {}
};

// A competitor failed after retries; the battle is dropped, the run goes on.
class BattleAborted : public Error {
 public:
  explicit BattleAborted(const std::string& what) : Error(what) {}
};

// Every judge verdict for one battle was unparseable after retry.
class NoValidVotes : public Error {
 public:
  explicit NoValidVotes(const std::string& what) : Error(what) {}
};

class UnknownModel : public Error {
 public:
  explicit UnknownModel(const std::string& what) : Error(what) {}
};

// final-score fusion called with an empty contested-pairings list.
class NothingContested : public Error {
 public:
  explicit NothingContested(const std::string& what) : Error(what) {}
};

// More than 10% of instructions could not be labeled by the task classifier.
class UnlabeledRemainder : public Error {
 public:
  explicit UnlabeledRemainder(const std::string& what) : Error(what) {}
};

class ConfigInvalid : public Error {
 public:
  explicit ConfigInvalid(const std::string& what) : Error(what) {}
};

class StageDependencyMissing : public Error {
 public:
  explicit StageDependencyMissing(const std::string& what) : Error(what) {}
};

class IoFailure : public Error {
 public:
  explicit IoFailure(const std::string& what) : Error(what) {}
};

}  // namespace arena
