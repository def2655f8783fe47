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

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "cascade_forest/dataset.h"
#include "cascade_forest/random.h"

namespace cforest {
namespace {

// Draws k distinct elements of `pool` (partial Fisher-Yates).
void draw_without_replacement(std::vector<std::size_t>& pool, std::size_t k,
                              Rng& rng, std::vector<std::size_t>& out) {
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(
                           rng.uniform_index(pool.size() - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
}

}  // namespace

Dataset subsample(const Dataset& data, std::size_t n, bool stratified,
                  std::uint64_t seed) {
  if (n > data.n_rows()) {
    throw InvalidInput(fmt::format("cannot sample {} rows from {}", n,
                                   data.n_rows()));
  }
  Rng rng(seed);
  std::vector<std::size_t> picked;
  picked.reserve(n);
  if (!stratified) {
    std::vector<std::size_t> pool(data.n_rows());
    std::iota(pool.begin(), pool.end(), 0);
    draw_without_replacement(pool, n, rng, picked);
  } else {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
      by_class[label_index(data.label(i))].push_back(i);
    }
    // Largest-remainder apportionment of n over the two classes.
    const double total = static_cast<double>(data.n_rows());
    std::array<std::size_t, 2> quota{};
    std::array<double, 2> remainder{};
    std::size_t assigned = 0;
    for (int c = 0; c < 2; ++c) {
      const double exact =
          static_cast<double>(n) * static_cast<double>(by_class[c].size()) /
          total;
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      remainder[c] = exact - static_cast<double>(quota[c]);
      assigned += quota[c];
    }
    while (assigned < n) {
      const int c = remainder[0] >= remainder[1] ? 0 : 1;
      const int pick = quota[c] < by_class[c].size() ? c : 1 - c;
      ++quota[pick];
      remainder[pick] = -1.0;
      ++assigned;
    }
    for (int c = 0; c < 2; ++c) {
      draw_without_replacement(by_class[c], quota[c], rng, picked);
    }
  }
  std::sort(picked.begin(), picked.end());
  return data.subset(picked);
}

Dataset make_synthetic(std::size_t n_rows, std::size_t n_features,
                       double anomaly_rate, double class_separation,
                       std::uint64_t seed) {
  if (!(anomaly_rate > 0.0 && anomaly_rate < 0.5)) {
    throw InvalidInput(
        fmt::format("anomaly_rate must lie in (0, 0.5), got {}", anomaly_rate));
  }
  if (!(class_separation >= 0.0) || !std::isfinite(class_separation)) {
    throw InvalidInput("class_separation must be finite and >= 0");
  }
  if (n_rows < 2 || n_features == 0) {
    throw InvalidInput("make_synthetic needs >= 2 rows and >= 1 feature");
  }
  Rng rng(seed);
  auto n_anomaly = static_cast<std::size_t>(
      std::llround(anomaly_rate * static_cast<double>(n_rows)));
  n_anomaly = std::clamp<std::size_t>(n_anomaly, 1, n_rows - 1);

  std::vector<Label> labels(n_rows, Label::kNormal);
  std::fill_n(labels.begin(), n_anomaly, Label::kAnomaly);
  rng.shuffle(labels);

  const double shift =
      class_separation / std::sqrt(static_cast<double>(n_features));
  std::vector<double> features(n_rows * n_features);
  for (std::size_t i = 0; i < n_rows; ++i) {
    const double center = labels[i] == Label::kAnomaly ? shift : 0.0;
    for (std::size_t f = 0; f < n_features; ++f) {
      features[i * n_features + f] = center + rng.normal();
    }
  }
  return Dataset(std::move(features), n_features, std::move(labels), {}, {},
                 "synthetic");
}

}  // namespace cforest
