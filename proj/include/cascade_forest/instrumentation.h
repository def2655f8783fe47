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

#ifndef CASCADE_FOREST_INSTRUMENTATION_H_
#define CASCADE_FOREST_INSTRUMENTATION_H_

#include <cstdint>

namespace cforest {

// Process-wide counts of expensive I/O events. Latency measurements snapshot
// them around the timed region to prove no loading happened inside it.
struct IoCounters {
  std::uint64_t dataset_loads = 0;
  std::uint64_t model_deserializations = 0;

  friend bool operator==(const IoCounters&, const IoCounters&) = default;
};

IoCounters io_counters();

namespace internal {
void count_dataset_load();
void count_model_deserialization();
}  // namespace internal

}  // namespace cforest

#endif  // CASCADE_FOREST_INSTRUMENTATION_H_
