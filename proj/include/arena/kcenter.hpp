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
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "arena/errors.hpp"

namespace arena {

struct SelectionReport {
  std::vector<std::string> selected_ids;  // in selection order
  double coverage_radius = 0.0;  // max over all points of distance to nearest center
};

inline double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Greedy k-center (max-min) selection. Starts from seed_id, then repeatedly
// adds the point farthest from its nearest selected center. Ties break toward
// the lexicographically smallest id; the id→vector map iterates in id order,
// so a strict > scan gives exactly that. Classic 2-approximation of the
// optimal k-center radius.
inline SelectionReport kcenter_select(
    const std::map<std::string, std::vector<double>>& embeddings, std::size_t k,
    const std::string& seed_id) {
  if (k < 1 || k > embeddings.size()) {
    throw KTooLarge("kcenter_select: k=" + std::to_string(k) + " with " +
                    std::to_string(embeddings.size()) + " points");
  }
  auto seed_it = embeddings.find(seed_id);
  if (seed_it == embeddings.end()) {
    throw std::invalid_argument("kcenter_select: seed_id not among embeddings: " + seed_id);
  }
  const std::size_t dim = seed_it->second.size();

  // Flat copies: the selection loop is O(k * n * dim) distance work and
  // would crawl through map nodes otherwise.
  const std::size_t n = embeddings.size();
  std::vector<const std::string*> ids;
  std::vector<double> flat;
  ids.reserve(n);
  flat.reserve(n * dim);
  std::size_t seed_index = 0;
  for (const auto& [id, vec] : embeddings) {
    if (vec.size() != dim) {
      throw std::invalid_argument("kcenter_select: ragged embedding dimensions");
    }
    if (id == seed_id) seed_index = ids.size();
    ids.push_back(&id);
    flat.insert(flat.end(), vec.begin(), vec.end());
  }

  std::vector<double> min_dist_sq(n, std::numeric_limits<double>::infinity());
  SelectionReport report;
  report.selected_ids.reserve(k);

  std::size_t next = seed_index;
  for (std::size_t round = 0; round < k; ++round) {
    report.selected_ids.push_back(*ids[next]);
    const double* center = flat.data() + next * dim;
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = flat.data() + i * dim;
      double dist_sq = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double delta = p[d] - center[d];
        dist_sq += delta * delta;
      }
      if (dist_sq < min_dist_sq[i]) min_dist_sq[i] = dist_sq;
    }
    next = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (min_dist_sq[i] > best) {
        best = min_dist_sq[i];
        next = i;
      }
    }
  }

  double radius_sq = 0.0;
  for (double d : min_dist_sq) radius_sq = std::max(radius_sq, d);
  report.coverage_radius = std::sqrt(radius_sq);
  return report;
}

}  // namespace arena
