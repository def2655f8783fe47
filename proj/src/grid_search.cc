/*
 * Copyright 2026 The Cascade Forest Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>

#include "cascade_forest/evaluation.h"

namespace cforest {

bool grid_rank_less(const GridEntry& a, const GridEntry& b) {
  // NaN F1 (impossible for total cascades) would sort last.
  const double fa = std::isnan(a.report.mean.f1_anomaly)
                        ? -1.0
                        : a.report.mean.f1_anomaly;
  const double fb = std::isnan(b.report.mean.f1_anomaly)
                        ? -1.0
                        : b.report.mean.f1_anomaly;
  if (fa != fb) return fa > fb;
  const double na = a.report.mean.mean_path_nodes;
  const double nb = b.report.mean.mean_path_nodes;
  if (na != nb) return na < nb;
  return a.lattice_index < b.lattice_index;
}

std::vector<GridEntry> grid_search(
    const Dataset& data, std::span<const EnsembleConfig> coarse_candidates,
    std::span<const EnsembleConfig> expert_candidates, double granularity,
    std::size_t k, std::uint64_t seed, const EvalOptions& options) {
  if (coarse_candidates.empty() || expert_candidates.empty()) {
    throw InvalidInput("grid search needs coarse and expert candidates");
  }
  const auto pairs = threshold_pairs(granularity);
  std::vector<GridEntry> entries;
  for (const auto& coarse : coarse_candidates) {
    for (const auto& expert : expert_candidates) {
      auto reports =
          evaluate_cascade_grid_cv(data, coarse, expert, pairs, k, seed,
                                   options);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        GridEntry entry{
            CascadeConfig(coarse, expert, pairs[p].first, pairs[p].second),
            std::move(reports[p]), entries.size()};
        entries.push_back(std::move(entry));
      }
    }
  }
  std::sort(entries.begin(), entries.end(), grid_rank_less);
  return entries;
}

}  // namespace cforest
