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

#include "cascade_forest/metrics.h"

#include <fmt/format.h>

namespace cforest {

void ConfusionCounts::add(Label predicted, Label actual, Label positive) {
  const bool p = predicted == positive;
  const bool a = actual == positive;
  if (p && a) {
    ++tp;
  } else if (p) {
    ++fp;
  } else if (a) {
    ++fn;
  } else {
    ++tn;
  }
}

ConfusionCounts confusion(std::span<const Label> predicted,
                          std::span<const Label> actual, Label positive) {
  if (predicted.size() != actual.size()) {
    throw InvalidInput(fmt::format("{} predictions for {} labels",
                                   predicted.size(), actual.size()));
  }
  ConfusionCounts counts;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    counts.add(predicted[i], actual[i], positive);
  }
  return counts;
}

double f1_score(const ConfusionCounts& c) {
  // 2PR/(P+R) simplifies to 2tp / (2tp + fp + fn).
  const double denominator = 2.0 * static_cast<double>(c.tp) +
                             static_cast<double>(c.fp) +
                             static_cast<double>(c.fn);
  if (c.tp == 0 || denominator == 0.0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / denominator;
}

ClassF1 per_class_f1(std::span<const Label> predicted,
                     std::span<const Label> actual) {
  if (predicted.empty()) throw InvalidInput("per_class_f1: no predictions");
  return {f1_score(confusion(predicted, actual, Label::kNormal)),
          f1_score(confusion(predicted, actual, Label::kAnomaly))};
}

}  // namespace cforest
