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

#ifndef CASCADE_FOREST_CASCADE_H_
#define CASCADE_FOREST_CASCADE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cascade_forest/common.h"
#include "cascade_forest/dataset.h"
#include "cascade_forest/ensemble.h"

namespace cforest {

// R(C(T_cg,D_cg), C(T_fg,D_fg), cct, tct). Both experts share `expert`.
class CascadeConfig {
 public:
  CascadeConfig() = default;
  // Throws ConfigError unless 0.5 <= cct <= tct <= 1 and both ensemble
  // configurations validate.
  CascadeConfig(EnsembleConfig coarse, EnsembleConfig expert, double cct,
                double tct);

  const EnsembleConfig& coarse() const { return coarse_; }
  const EnsembleConfig& expert() const { return expert_; }
  double cct() const { return cct_; }
  double tct() const { return tct_; }

  CascadeConfig with_thresholds(double cct, double tct) const {
    return CascadeConfig(coarse_, expert_, cct, tct);
  }

  // "R(C(10,10),C(20,20),0.98,0.995)".
  std::string literal() const;

  friend bool operator==(const CascadeConfig&,
                         const CascadeConfig&) = default;

 private:
  EnsembleConfig coarse_;
  EnsembleConfig expert_;
  double cct_ = 0.5;
  double tct_ = 0.5;
};

// Parses "R(C(..),C(..),cct,tct)". Method, seed and other learner fields
// come from the two base configurations.
CascadeConfig parse_cascade_literal(std::string_view text,
                                    const EnsembleConfig& coarse_base = {},
                                    const EnsembleConfig& expert_base = {});

enum class Path : std::uint8_t { kShort = 0, kExpert1 = 1, kExpert2 = 2 };

std::string_view path_name(Path path);

// Expert training sets a training row is forwarded to.
struct RouteSet {
  bool expert1 = false;
  bool expert2 = false;

  bool empty() const { return !expert1 && !expert2; }
  friend bool operator==(const RouteSet&, const RouteSet&) = default;
};

// Training-time routing of one row with coarse distribution `d`. Confident
// rows (confidence >= tct) go nowhere; low-confidence anomalies go to both
// experts; low-confidence normals follow the coarse verdict.
RouteSet route_training_instance(const DistributionVector& d, Label label,
                                 double tct);

struct RoutingStats {
  std::uint64_t n_train = 0;
  std::uint64_t fg1_rows = 0;
  std::uint64_t fg2_rows = 0;
  double fg1_train_fraction = 0.0;
  double fg2_train_fraction = 0.0;
  // Normal/Anomaly count ratio per expert set; NaN without anomalies.
  double fg1_ratio = 0.0;
  double fg2_ratio = 0.0;
  // Anomaly rows placed in both expert sets.
  std::uint64_t duplicated_anomaly_count = 0;

  // Share of training rows sent to at least one expert.
  double expert_fraction() const {
    if (n_train == 0) return 0.0;
    return static_cast<double>(fg1_rows + fg2_rows -
                               duplicated_anomaly_count) /
           static_cast<double>(n_train);
  }

  bool operator==(const RoutingStats& other) const;
};

// Row indices (into the training Dataset) of each expert set, ascending.
struct TrainingPartition {
  std::vector<std::size_t> expert1;
  std::vector<std::size_t> expert2;
  RoutingStats stats;
};

// Scores every row of `data` with `coarse` and applies
// route_training_instance at `tct`.
TrainingPartition partition_training_set(const EnsembleModel& coarse,
                                         const Dataset& data, double tct);

struct ClassificationResult {
  Label label = Label::kNormal;
  double confidence = 0.0;
  Path path = Path::kShort;
  DistributionVector coarse_distribution;
  std::optional<DistributionVector> expert_distribution;
};

class CascadeModel {
 public:
  CascadeModel() = default;
  // An absent expert was trained on an empty set and echoes the coarse
  // distribution. All present models must share the coarse arity.
  CascadeModel(CascadeConfig config, EnsembleModel coarse,
               std::optional<EnsembleModel> expert1,
               std::optional<EnsembleModel> expert2, RoutingStats stats);

  ClassificationResult classify(std::span<const double> x) const;

  // Long-path query through the given expert regardless of the gate
  // (worst-case latency measurement). `expert` must not be kShort.
  ClassificationResult classify_forced(std::span<const double> x,
                                       Path expert) const;

  // Tree nodes visited by classify(x).
  std::size_t path_length(std::span<const double> x) const;

  const CascadeConfig& config() const { return config_; }
  const EnsembleModel& coarse() const { return coarse_; }
  const std::optional<EnsembleModel>& expert1() const { return expert1_; }
  const std::optional<EnsembleModel>& expert2() const { return expert2_; }
  const RoutingStats& training_stats() const { return stats_; }
  std::uint32_t n_features() const { return coarse_.n_features(); }

  // Same trained models gated at different thresholds. Expert sets were
  // built with the original tct, so only cct is meaningful to change.
  CascadeModel with_cct(double cct) const;

  friend bool operator==(const CascadeModel&, const CascadeModel&) = default;

 private:
  ClassificationResult finish(std::span<const double> x,
                              const DistributionVector& d, Path path) const;

  CascadeConfig config_;
  EnsembleModel coarse_;
  std::optional<EnsembleModel> expert1_;
  std::optional<EnsembleModel> expert2_;
  RoutingStats stats_;
};

struct CascadeTrainOptions {
  unsigned threads = 1;
};

// Trains the coarse model on all rows, builds the expert sets from its own
// training-set confidences and trains both experts. Empty expert sets give
// absent experts; single-class sets give constant experts.
CascadeModel train_cascade(const Dataset& data, const CascadeConfig& config,
                           const CascadeTrainOptions& options = {});

// Same, reusing an already trained coarse model (it must have been trained
// on `data` with config.coarse()).
CascadeModel train_cascade_with_coarse(const Dataset& data,
                                       const CascadeConfig& config,
                                       EnsembleModel coarse,
                                       const CascadeTrainOptions& options = {});

ModelSize model_size(const CascadeModel& model);

// ---------------------------------------------------------------------------
// Confidence-threshold sweep.

struct SweepPoint {
  double threshold = 0.5;
  std::size_t valid_normal = 0;
  std::size_t valid_anomaly = 0;
  double valid_fraction_normal = 0.0;
  double valid_fraction_anomaly = 0.0;
  // Absent when no row of that true class is valid.
  std::optional<double> f1_normal;
  std::optional<double> f1_anomaly;
};

// Valid rows at threshold t are those with confidence >= t; F1 is computed
// over the valid rows only. Thresholds must be ascending within [0.5, 1].
std::vector<SweepPoint> sweep_cct(const EnsembleModel& model,
                                  const Dataset& eval_data,
                                  std::span<const double> thresholds);

// Same on precomputed distributions.
std::vector<SweepPoint> sweep_cct(std::span<const DistributionVector> scores,
                                  std::span<const Label> labels,
                                  std::span<const double> thresholds);

struct ClassPair {
  double normal = 0.0;
  double anomaly = 0.0;
};

// Lowest threshold whose valid-set F1 beats `baseline` for both classes.
std::optional<double> find_lowest_beating_cct(
    std::span<const SweepPoint> sweep, const ClassPair& baseline);

// 0.5, 0.5 + g, ..., 1.0. Throws ConfigError unless 0.5 / g is an integer.
std::vector<double> threshold_lattice(double granularity);

// All (cct, tct) with cct <= tct on the lattice, ordered by cct then tct.
std::vector<std::pair<double, double>> threshold_pairs(double granularity);

}  // namespace cforest

#endif  // CASCADE_FOREST_CASCADE_H_
