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

#include "cascade_forest/ensemble.h"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>

#include "parallel.h"
#include "tree_builder.h"

namespace cforest {
namespace {

double sigmoid(double score) {
  if (score >= 0.0) return 1.0 / (1.0 + std::exp(-score));
  const double e = std::exp(score);
  return e / (1.0 + e);
}

// Binomial deviance of one row: log(1 + exp(-s * score)), s = +-1.
double deviance(double score, Label label) {
  const double z = label == Label::kAnomaly ? -score : score;
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double mean_deviance(std::span<const double> scores,
                     std::span<const Label> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    total += deviance(scores[i], labels[i]);
  }
  return total / static_cast<double>(scores.size());
}

void require_method(const EnsembleConfig& config, Method expected,
                    std::string_view op) {
  if (config.method != expected) {
    throw InvalidInput(fmt::format("{} called with a {} configuration", op,
                                   method_name(config.method)));
  }
}

std::optional<EnsembleModel> single_class_model(const Dataset& data,
                                                const EnsembleConfig& config) {
  const std::size_t anomalies = data.count(Label::kAnomaly);
  const auto p = static_cast<std::uint32_t>(data.n_features());
  if (anomalies == 0) {
    return EnsembleModel::constant(config, p, {1.0, 0.0});
  }
  if (anomalies == data.n_rows()) {
    return EnsembleModel::constant(config, p, {0.0, 1.0});
  }
  return std::nullopt;
}

void check_training_data(const Dataset& data) {
  if (data.empty()) throw InvalidInput("cannot train on an empty dataset");
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kBagging:
      return "bagging";
    case Method::kGradientBoosting:
      return "gradient-boosting";
    case Method::kAdaBoost:
      return "adaboost";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "bagging" || text == "rf" || text == "random-forest") {
    return Method::kBagging;
  }
  if (text == "gbt" || text == "gradient-boosting" || text == "gbdt" ||
      text == "xgboost") {
    return Method::kGradientBoosting;
  }
  if (text == "adaboost") return Method::kAdaBoost;
  throw ConfigError(fmt::format("unknown learner method '{}'", text));
}

void EnsembleConfig::validate() const {
  if (n_trees == 0) throw ConfigError("n_trees must be positive");
  if (max_depth && *max_depth == 0) {
    throw ConfigError("max_depth must be positive (or None)");
  }
  if (!max_depth && method != Method::kBagging) {
    throw ConfigError(fmt::format("{} requires a finite max_depth",
                                  method_name(method)));
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and > 0");
  }
  if (feature_subsample &&
      !(*feature_subsample > 0.0 && *feature_subsample <= 1.0)) {
    throw ConfigError("feature_subsample must lie in (0, 1]");
  }
  if (min_samples_leaf == 0) {
    throw ConfigError("min_samples_leaf must be positive");
  }
}

std::string EnsembleConfig::literal() const {
  return max_depth ? fmt::format("C({},{})", n_trees, *max_depth)
                   : fmt::format("C({},None)", n_trees);
}

EnsembleConfig parse_ensemble_literal(std::string_view text,
                                      const EnsembleConfig& base) {
  const auto fail = [&] {
    return ConfigError(fmt::format(
        "'{}' is not a classifier literal of the form C(T,D) or C(T,None)",
        text));
  };
  std::string compact;
  for (const char c : text) {
    if (c != ' ' && c != '\t') compact.push_back(c);
  }
  if (compact.size() < 6 || compact.substr(0, 2) != "C(" ||
      compact.back() != ')') {
    throw fail();
  }
  const std::string body = compact.substr(2, compact.size() - 3);
  const std::size_t comma = body.find(',');
  if (comma == std::string::npos) throw fail();
  const std::string trees = body.substr(0, comma);
  const std::string depth = body.substr(comma + 1);

  const auto parse_positive = [&](const std::string& s) {
    std::uint32_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v == 0) {
      throw fail();
    }
    return v;
  };
  EnsembleConfig out = base;
  out.n_trees = parse_positive(trees);
  if (depth == "None" || depth == "none" || depth == "null") {
    out.max_depth.reset();
  } else {
    out.max_depth = parse_positive(depth);
  }
  return out;
}

double adaboost_capped_alpha() {
  constexpr double kEps = 1e-10;
  return 0.5 * std::log((1.0 - kEps) / kEps);
}

// ---------------------------------------------------------------------------
// EnsembleModel

EnsembleModel::EnsembleModel(EnsembleConfig config, std::uint32_t n_features,
                             std::vector<DecisionTree> trees,
                             std::vector<double> tree_weights,
                             double base_score,
                             std::optional<DistributionVector> constant)
    : config_(std::move(config)),
      n_features_(n_features),
      trees_(std::move(trees)),
      tree_weights_(std::move(tree_weights)),
      base_score_(base_score),
      constant_(constant) {
  if (trees_.size() != tree_weights_.size()) {
    throw FormatError("tree and weight counts differ");
  }
  if (trees_.size() > config_.n_trees) {
    throw FormatError("model holds more trees than configured");
  }
  if (!std::isfinite(base_score_)) throw FormatError("base score not finite");
  if (constant_) {
    if (!trees_.empty()) throw FormatError("constant model with trees");
    if (!constant_->is_valid()) {
      throw FormatError("constant distribution is not a probability pair");
    }
    return;
  }
  if (trees_.empty()) throw FormatError("model has no trees");
  const NodeKind leaf_kind = config_.method == Method::kGradientBoosting
                                 ? NodeKind::kScoreLeaf
                                 : NodeKind::kClassLeaf;
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    const double w = tree_weights_[t];
    if (!std::isfinite(w)) throw FormatError("tree weight not finite");
    if (config_.method == Method::kBagging && w != 1.0) {
      throw FormatError("bagging tree weights must be 1");
    }
    if (config_.method == Method::kAdaBoost && !(w > 0.0)) {
      throw FormatError("AdaBoost stage weights must be positive");
    }
    for (const auto& node : trees_[t].nodes()) {
      if (node.is_leaf() && node.kind != leaf_kind) {
        throw FormatError(fmt::format("tree {} has a leaf of the wrong kind",
                                      t));
      }
    }
    const auto f = trees_[t].max_feature();
    if (f && *f >= n_features_) {
      throw FormatError(fmt::format("tree {} splits on feature {} of {}", t,
                                    *f, n_features_));
    }
  }
}

EnsembleModel EnsembleModel::constant(EnsembleConfig config,
                                      std::uint32_t n_features,
                                      DistributionVector distribution) {
  return EnsembleModel(std::move(config), n_features, {}, {}, 0.0,
                       distribution);
}

DistributionVector EnsembleModel::predict_proba(
    std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw InvalidInput(fmt::format(
        "model expects {} features, got {}", n_features_, x.size()));
  }
  return predict_unchecked(x);
}

DistributionVector EnsembleModel::predict_unchecked(
    std::span<const double> x) const {
  if (constant_) return *constant_;
  switch (config_.method) {
    case Method::kBagging: {
      double normal = 0.0;
      double anomaly = 0.0;
      for (const auto& tree : trees_) {
        const auto& leaf = tree.leaf_for(x);
        normal += leaf.value[0];
        anomaly += leaf.value[1];
      }
      const auto t = static_cast<double>(trees_.size());
      return {std::clamp(normal / t, 0.0, 1.0),
              std::clamp(anomaly / t, 0.0, 1.0)};
    }
    case Method::kGradientBoosting: {
      double score = base_score_;
      for (std::size_t t = 0; t < trees_.size(); ++t) {
        score += tree_weights_[t] * trees_[t].leaf_for(x).value[0];
      }
      return DistributionVector::from_anomaly(sigmoid(score));
    }
    case Method::kAdaBoost: {
      double anomaly_vote = 0.0;
      double total = 0.0;
      for (std::size_t t = 0; t < trees_.size(); ++t) {
        const auto& leaf = trees_[t].leaf_for(x);
        const DistributionVector d{leaf.value[0], leaf.value[1]};
        if (d.top_label() == Label::kAnomaly) anomaly_vote += tree_weights_[t];
        total += tree_weights_[t];
      }
      return DistributionVector::from_anomaly(anomaly_vote / total);
    }
  }
  throw InvalidInput("unknown ensemble method");
}

std::size_t EnsembleModel::path_length(std::span<const double> x) const {
  std::size_t visited = 0;
  for (const auto& tree : trees_) visited += tree.path_length(x);
  return visited;
}

// ---------------------------------------------------------------------------
// Learners

EnsembleModel fit_bagging(const Dataset& data, const EnsembleConfig& config,
                          const TrainOptions& options) {
  require_method(config, Method::kBagging, "fit_bagging");
  config.validate();
  check_training_data(data);
  const std::size_t n = data.n_rows();
  const std::size_t p = data.n_features();

  TreeParams params;
  params.max_depth = config.max_depth;
  params.min_samples_leaf = config.min_samples_leaf;
  params.feature_subsample = config.feature_subsample.value_or(
      std::sqrt(static_cast<double>(p)) / static_cast<double>(p));

  const internal::ColumnStore store(data);
  std::vector<DecisionTree> trees(config.n_trees);
  internal::parallel_for(config.n_trees, options.threads, [&](std::size_t t) {
    Rng rng(derive_seed(config.seed, t));
    std::vector<double> weights(n, 1.0);
    if (config.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        weights[rng.uniform_index(n)] += 1.0;
      }
    }
    const internal::GiniCriterion criterion(data.labels(), weights);
    trees[t] = internal::grow_tree(store, criterion, params, rng, false).tree;
  });
  std::vector<double> weights(trees.size(), 1.0);
  return EnsembleModel(config, static_cast<std::uint32_t>(p), std::move(trees),
                       std::move(weights), 0.0, std::nullopt);
}

EnsembleModel fit_gradient_boosting(const Dataset& data,
                                    const EnsembleConfig& config,
                                    const TrainOptions& options) {
  require_method(config, Method::kGradientBoosting, "fit_gradient_boosting");
  EnsembleConfig checked = config;
  if (options.allow_zero_learning_rate && config.learning_rate == 0.0) {
    checked.learning_rate = 1.0;
  }
  checked.validate();
  check_training_data(data);
  if (auto model = single_class_model(data, config)) return *std::move(model);

  const std::size_t n = data.n_rows();
  const auto labels = data.labels();
  const double lr = config.learning_rate;
  const auto anomalies = static_cast<double>(data.count(Label::kAnomaly));
  const double base =
      std::log(anomalies / (static_cast<double>(n) - anomalies));

  TreeParams params;
  params.max_depth = config.max_depth;
  params.min_samples_leaf = config.min_samples_leaf;
  params.feature_subsample = 1.0;

  const internal::ColumnStore store(data);
  Rng rng(config.seed);
  std::vector<double> scores(n, base);
  std::vector<double> gradient(n);
  std::vector<double> hessian(n);
  std::vector<DecisionTree> trees;
  trees.reserve(config.n_trees);
  if (options.trace) {
    options.trace->deviance = {mean_deviance(scores, labels)};
  }

  std::vector<std::uint32_t> leaf_start;
  std::vector<std::uint32_t> leaf_rows(n);
  for (std::uint32_t stage = 0; stage < config.n_trees; ++stage) {
    for (std::size_t i = 0; i < n; ++i) {
      const double prob = sigmoid(scores[i]);
      const double y = labels[i] == Label::kAnomaly ? 1.0 : 0.0;
      gradient[i] = y - prob;
      hessian[i] = prob * (1.0 - prob);
    }
    const internal::VarianceCriterion criterion(gradient);
    auto grown = internal::grow_tree(store, criterion, params, rng, true);
    std::vector<TreeNode> nodes(grown.tree.nodes().begin(),
                                grown.tree.nodes().end());

    // Group rows by leaf (counting sort on leaf index).
    leaf_start.assign(nodes.size() + 1, 0);
    for (const auto leaf : grown.leaf_of_row) ++leaf_start[leaf + 1];
    for (std::size_t k = 1; k < leaf_start.size(); ++k) {
      leaf_start[k] += leaf_start[k - 1];
    }
    {
      std::vector<std::uint32_t> cursor(leaf_start.begin(),
                                        leaf_start.end() - 1);
      for (std::uint32_t i = 0; i < n; ++i) {
        leaf_rows[cursor[grown.leaf_of_row[i]]++] = i;
      }
    }

    for (std::size_t leaf = 0; leaf < nodes.size(); ++leaf) {
      if (!nodes[leaf].is_leaf()) continue;
      const std::span<const std::uint32_t> rows(
          leaf_rows.data() + leaf_start[leaf],
          leaf_start[leaf + 1] - leaf_start[leaf]);
      double sum_g = 0.0;
      double sum_h = 0.0;
      for (const auto r : rows) {
        sum_g += gradient[r];
        sum_h += hessian[r];
      }
      double step = std::abs(sum_h) < 1e-150 ? 0.0 : sum_g / sum_h;
      if (!std::isfinite(step)) step = 0.0;
      // One Newton step per leaf, halved while it would raise the leaf's
      // deviance so the training loss never increases.
      if (step != 0.0 && lr != 0.0) {
        double before = 0.0;
        for (const auto r : rows) before += deviance(scores[r], labels[r]);
        int halvings = 0;
        while (true) {
          double after = 0.0;
          for (const auto r : rows) {
            after += deviance(scores[r] + lr * step, labels[r]);
          }
          if (after <= before) break;
          if (++halvings > 60) {
            step = 0.0;
            break;
          }
          step *= 0.5;
        }
      }
      nodes[leaf].value = {step, 0.0};
      for (const auto r : rows) scores[r] += lr * step;
    }
    trees.emplace_back(std::move(nodes));
    if (options.trace) {
      options.trace->deviance.push_back(mean_deviance(scores, labels));
    }
  }
  std::vector<double> weights(trees.size(), lr);
  return EnsembleModel(config, static_cast<std::uint32_t>(data.n_features()),
                       std::move(trees), std::move(weights), base,
                       std::nullopt);
}

EnsembleModel fit_adaboost(const Dataset& data, const EnsembleConfig& config,
                           const TrainOptions& options) {
  require_method(config, Method::kAdaBoost, "fit_adaboost");
  config.validate();
  check_training_data(data);
  if (auto model = single_class_model(data, config)) return *std::move(model);

  const std::size_t n = data.n_rows();
  const auto labels = data.labels();
  TreeParams params;
  params.max_depth = config.max_depth;
  params.min_samples_leaf = config.min_samples_leaf;
  params.feature_subsample = 1.0;

  const internal::ColumnStore store(data);
  Rng rng(config.seed);
  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  std::vector<std::uint8_t> wrong(n);
  std::vector<DecisionTree> trees;
  std::vector<double> alphas;
  if (options.trace) options.trace->stage_error.clear();

  for (std::uint32_t stage = 0; stage < config.n_trees; ++stage) {
    const internal::GiniCriterion criterion(labels, weights);
    DecisionTree tree =
        internal::grow_tree(store, criterion, params, rng, false).tree;
    double error = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& leaf = tree.leaf_for(data.row(i));
      const DistributionVector d{leaf.value[0], leaf.value[1]};
      wrong[i] = d.top_label() != labels[i] ? 1 : 0;
      total += weights[i];
      if (wrong[i]) error += weights[i];
    }
    error /= total;
    if (options.trace) options.trace->stage_error.push_back(error);
    if (error >= 0.5) break;
    if (error <= 0.0) {
      trees.push_back(std::move(tree));
      alphas.push_back(adaboost_capped_alpha());
      break;
    }
    const double alpha = 0.5 * std::log((1.0 - error) / error);
    trees.push_back(std::move(tree));
    alphas.push_back(alpha);
    const double up = std::exp(alpha);
    const double down = std::exp(-alpha);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] *= wrong[i] ? up : down;
      sum += weights[i];
    }
    for (auto& w : weights) w /= sum;
  }

  const auto p = static_cast<std::uint32_t>(data.n_features());
  if (trees.empty()) {
    // Not even the first stage beat chance: answer the class prior.
    return EnsembleModel::constant(
        config, p, DistributionVector::from_anomaly(data.anomaly_rate()));
  }
  return EnsembleModel(config, p, std::move(trees), std::move(alphas), 0.0,
                       std::nullopt);
}

EnsembleModel fit_ensemble(const Dataset& data, const EnsembleConfig& config,
                           const TrainOptions& options) {
  switch (config.method) {
    case Method::kBagging:
      return fit_bagging(data, config, options);
    case Method::kGradientBoosting:
      return fit_gradient_boosting(data, config, options);
    case Method::kAdaBoost:
      return fit_adaboost(data, config, options);
  }
  throw ConfigError("unknown ensemble method");
}

}  // namespace cforest
