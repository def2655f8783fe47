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

#include <atomic>
#include <cmath>

#include "cascade_forest/common.h"
#include "cascade_forest/instrumentation.h"
#include "cascade_forest/random.h"

namespace cforest {

std::string_view label_name(Label label) {
  return label == Label::kNormal ? "Normal" : "Anomaly";
}

bool DistributionVector::is_valid(double tolerance) const {
  if (!std::isfinite(normal) || !std::isfinite(anomaly)) return false;
  if (normal < 0.0 || normal > 1.0 || anomaly < 0.0 || anomaly > 1.0) {
    return false;
  }
  return std::abs(normal + anomaly - 1.0) <= tolerance;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  // Lemire's multiply-shift with rejection; unbiased.
  std::uint64_t x = engine_();
  unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = engine_();
      m = static_cast<unsigned __int128>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

namespace {
std::atomic<std::uint64_t> g_dataset_loads{0};
std::atomic<std::uint64_t> g_model_deserializations{0};
}  // namespace

IoCounters io_counters() {
  return {g_dataset_loads.load(), g_model_deserializations.load()};
}

namespace internal {
void count_dataset_load() { ++g_dataset_loads; }
void count_model_deserialization() { ++g_model_deserializations; }
}  // namespace internal

}  // namespace cforest
