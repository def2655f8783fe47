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

#ifndef CASCADE_FOREST_COMMON_H_
#define CASCADE_FOREST_COMMON_H_

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cforest {

// Error hierarchy. The CLI maps each class onto a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition of an operation was violated by its arguments.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A configuration value or literal is malformed or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data could not be read, parsed or verified.
class DataError : public Error {
 public:
  using Error::Error;
};

// A serialized model blob is malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

enum class Label : std::uint8_t { kNormal = 0, kAnomaly = 1 };

inline constexpr int label_index(Label label) {
  return static_cast<int>(label);
}

std::string_view label_name(Label label);

// Two-class probability vector emitted by every model.
struct DistributionVector {
  double normal = 1.0;
  double anomaly = 0.0;

  static DistributionVector from_anomaly(double p_anomaly) {
    const double p = std::clamp(p_anomaly, 0.0, 1.0);
    return {1.0 - p, p};
  }

  double operator[](Label label) const {
    return label == Label::kNormal ? normal : anomaly;
  }

  // Top-1 class probability.
  double confidence() const { return std::max(normal, anomaly); }

  // Ties at (0.5, 0.5) resolve to Anomaly.
  Label top_label() const {
    return normal > anomaly ? Label::kNormal : Label::kAnomaly;
  }

  // Both components in [0,1] and summing to one within `tolerance`.
  bool is_valid(double tolerance = 1e-9) const;

  friend bool operator==(const DistributionVector&,
                         const DistributionVector&) = default;
};

}  // namespace cforest

#endif  // CASCADE_FOREST_COMMON_H_
