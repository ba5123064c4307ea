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
#include <cstdint>
#include <string_view>

#include "arena/hash.hpp"

namespace arena {

// splitmix64. Every random draw in the pipeline flows from one run seed
// through named substreams (see derive_seed), so a seed pins a whole run.
// Deliberately avoids <random> distributions: their output is
// implementation-defined and would break cross-build reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n). Multiply-shift; bias is negligible for n << 2^64.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool coin() { return (next_u64() & 1) != 0; }

  // Standard normal via Box-Muller.
  double next_normal() {
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t state_;
};

// Derives the seed of a named substream. The (name, a, b) triple is part of
// the reproducibility contract: tests recompute draws from the same rule.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view name,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = fnv1a_u64(root, kFnvOffset);
  h = fnv1a(name, h);
  h = fnv1a_u64(a, h);
  h = fnv1a_u64(b, h);
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view name,
                                 std::string_view a, std::string_view b = "") {
  std::uint64_t h = fnv1a_u64(root, kFnvOffset);
  h = fnv1a(name, h);
  h = fnv1a(a, h);
  h = fnv1a(b, h);
  return h;
}

inline Rng substream(std::uint64_t root, std::string_view name,
                     std::string_view a, std::string_view b = "") {
  return Rng(derive_seed(root, name, a, b));
}

}  // namespace arena
