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

#ifndef CASCADE_FOREST_RANDOM_H_
#define CASCADE_FOREST_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>

namespace cforest {

// Mixes `seed` and `stream` into an independent 64-bit seed (SplitMix64
// finalizer). Used to derive per-tree and per-fold streams so results never
// depend on scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Deterministic random source. The std distributions are implementation
// defined, so every draw used by the library is spelled out here on top of
// the fully specified mt19937_64 engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  // Uniform double in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal draw (Box-Muller, one value per call).
  double normal();

  template <typename Container>
  void shuffle(Container& c) {
    for (std::size_t i = c.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(c[i - 1], c[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cforest

#endif  // CASCADE_FOREST_RANDOM_H_
