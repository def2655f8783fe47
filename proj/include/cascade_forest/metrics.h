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

#ifndef CASCADE_FOREST_METRICS_H_
#define CASCADE_FOREST_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <span>

#include "cascade_forest/common.h"

namespace cforest {

// Binary confusion counts with respect to one class of interest.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  void add(Label predicted, Label actual, Label positive);

  friend bool operator==(const ConfusionCounts&,
                         const ConfusionCounts&) = default;
};

ConfusionCounts confusion(std::span<const Label> predicted,
                          std::span<const Label> actual, Label positive);

// 2PR / (P + R); 0 when the denominator vanishes.
double f1_score(const ConfusionCounts& counts);

struct ClassF1 {
  double normal = 0.0;
  double anomaly = 0.0;

  double operator[](Label label) const {
    return label == Label::kNormal ? normal : anomaly;
  }
};

// Throws InvalidInput on a length mismatch or empty input.
ClassF1 per_class_f1(std::span<const Label> predicted,
                     std::span<const Label> actual);

}  // namespace cforest

#endif  // CASCADE_FOREST_METRICS_H_
