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

#ifndef CASCADE_FOREST_ENSEMBLE_H_
#define CASCADE_FOREST_ENSEMBLE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cascade_forest/common.h"
#include "cascade_forest/dataset.h"
#include "cascade_forest/tree.h"

namespace cforest {

enum class Method : std::uint8_t {
  kBagging = 0,
  kGradientBoosting = 1,
  kAdaBoost = 2,
};

std::string_view method_name(Method method);
// Accepts "bagging"/"rf", "gbt"/"gradient-boosting", "adaboost".
Method parse_method(std::string_view text);

// Hyper-parameters of one ensemble: T trees of depth at most D, written
// C(T,D) or C(T,None) for unlimited depth.
struct EnsembleConfig {
  Method method = Method::kBagging;
  std::uint32_t n_trees = 100;
  std::optional<std::uint32_t> max_depth;
  double learning_rate = 0.1;
  // Bagging only. nullopt means sqrt(p)/p of the p features.
  std::optional<double> feature_subsample;
  std::uint32_t min_samples_leaf = 1;
  std::uint64_t seed = 0;
  // Bagging only; disabling trains every tree on the full weighted data.
  bool bootstrap = true;

  // Throws ConfigError on any out-of-range field. Unlimited depth is only
  // allowed for bagging.
  void validate() const;

  // "C(T,D)" / "C(T,None)".
  std::string literal() const;

  friend bool operator==(const EnsembleConfig&,
                         const EnsembleConfig&) = default;
};

// Parses "C(T,D)" or "C(T,None)" into `base` (method, seed and other fields
// are kept from `base`).
EnsembleConfig parse_ensemble_literal(std::string_view text,
                                      const EnsembleConfig& base = {});

// Per-stage diagnostics recorded during boosting.
struct TrainingTrace {
  // Mean binomial deviance on the training rows: entry 0 is the prior-only
  // model, entry t is after stage t.
  std::vector<double> deviance;
  // Weighted training error of every AdaBoost stage that was fitted,
  // including a final rejected one.
  std::vector<double> stage_error;
};

struct TrainOptions {
  // Worker threads for independent trees. Results never depend on it.
  unsigned threads = 1;
  TrainingTrace* trace = nullptr;
  // Test hook: lets gradient boosting run with learning_rate == 0.
  bool allow_zero_learning_rate = false;
};

// A trained tree ensemble. Immutable; prediction is reentrant.
class EnsembleModel {
 public:
  EnsembleModel() = default;

  // Assembles a model from parts (used by the learners and deserializers);
  // checks that the parts are mutually consistent.
  EnsembleModel(EnsembleConfig config, std::uint32_t n_features,
                std::vector<DecisionTree> trees,
                std::vector<double> tree_weights, double base_score,
                std::optional<DistributionVector> constant);

  // Degenerate model with no trees that always answers `distribution`.
  static EnsembleModel constant(EnsembleConfig config,
                                std::uint32_t n_features,
                                DistributionVector distribution);

  // Throws InvalidInput on an arity mismatch.
  DistributionVector predict_proba(std::span<const double> x) const;

  // Tree nodes visited to answer `x` (a hardware-independent latency cost).
  std::size_t path_length(std::span<const double> x) const;

  const EnsembleConfig& config() const { return config_; }
  std::uint32_t n_features() const { return n_features_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  const std::vector<double>& tree_weights() const { return tree_weights_; }
  double base_score() const { return base_score_; }
  const std::optional<DistributionVector>& constant_distribution() const {
    return constant_;
  }
  bool is_degenerate() const { return constant_.has_value(); }
  // Trees actually trained (boosting may stop before config().n_trees).
  std::size_t effective_trees() const { return trees_.size(); }

  friend bool operator==(const EnsembleModel&, const EnsembleModel&) = default;

 private:
  DistributionVector predict_unchecked(std::span<const double> x) const;

  EnsembleConfig config_;
  std::uint32_t n_features_ = 0;
  std::vector<DecisionTree> trees_;
  std::vector<double> tree_weights_;
  double base_score_ = 0.0;
  std::optional<DistributionVector> constant_;
};

EnsembleModel fit_bagging(const Dataset& data, const EnsembleConfig& config,
                          const TrainOptions& options = {});
EnsembleModel fit_gradient_boosting(const Dataset& data,
                                    const EnsembleConfig& config,
                                    const TrainOptions& options = {});
EnsembleModel fit_adaboost(const Dataset& data, const EnsembleConfig& config,
                           const TrainOptions& options = {});

// Dispatches on config.method.
EnsembleModel fit_ensemble(const Dataset& data, const EnsembleConfig& config,
                           const TrainOptions& options = {});

inline DistributionVector predict_proba(const EnsembleModel& model,
                                        std::span<const double> x) {
  return model.predict_proba(x);
}

struct ModelSize {
  std::size_t node_count = 0;
  std::size_t serialized_bytes = 0;
};

ModelSize model_size(const EnsembleModel& model);

// AdaBoost stage weight for a stage with weighted error 0.
double adaboost_capped_alpha();

}  // namespace cforest

#endif  // CASCADE_FOREST_ENSEMBLE_H_
