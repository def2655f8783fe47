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

#include <cmath>
#include <vector>

#include "cascade_forest/ensemble.h"
#include "cascade_forest/serialization.h"
#include "doctest.h"
#include "support/oracles.h"

namespace cforest {
namespace {

EnsembleConfig make_config(Method method, std::uint32_t trees,
                           std::optional<std::uint32_t> depth,
                           std::uint64_t seed = 11) {
  EnsembleConfig c;
  c.method = method;
  c.n_trees = trees;
  c.max_depth = depth;
  c.seed = seed;
  return c;
}

double accuracy(const EnsembleModel& m, const Dataset& d) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    ok += m.predict_proba(d.row(i)).top_label() == d.label(i);
  }
  return double(ok) / double(d.n_rows());
}

Dataset xor_data(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x;
  std::vector<Label> y;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.uniform01(), b = rng.uniform01();
    x.push_back(a);
    x.push_back(b);
    y.push_back((a > 0.5) != (b > 0.5) ? Label::kAnomaly : Label::kNormal);
  }
  return Dataset(std::move(x), 2, std::move(y));
}

TEST_CASE("config literals") {
  const EnsembleConfig c = parse_ensemble_literal("C(80, None)");
  CHECK(c.n_trees == 80);
  CHECK(!c.max_depth);
  CHECK(c.literal() == "C(80,None)");
  CHECK(parse_ensemble_literal("C(2000,3)").literal() == "C(2000,3)");
  CHECK_THROWS_AS(parse_ensemble_literal("C(0,3)").validate(), ConfigError);
  CHECK_THROWS_AS(parse_ensemble_literal("C(3)"), ConfigError);
  CHECK_THROWS_AS(parse_ensemble_literal("R(3,3)"), ConfigError);
  EnsembleConfig boost = make_config(Method::kGradientBoosting, 5, {});
  CHECK_THROWS_AS(boost.validate(), ConfigError);
  boost.max_depth = 3;
  CHECK_NOTHROW(boost.validate());
  boost.learning_rate = 0.0;
  CHECK_THROWS_AS(boost.validate(), ConfigError);
  CHECK(parse_method("rf") == Method::kBagging);
  CHECK(parse_method("gbt") == Method::kGradientBoosting);
  CHECK(parse_method("adaboost") == Method::kAdaBoost);
  CHECK_THROWS_AS(parse_method("svm"), ConfigError);
}

TEST_CASE("large boosting configurations are representable") {
  EnsembleConfig gbt = parse_ensemble_literal(
      "C(2000,3)", make_config(Method::kGradientBoosting, 1, 1));
  CHECK_NOTHROW(gbt.validate());
  EnsembleConfig ada =
      parse_ensemble_literal("C(1100,2)", make_config(Method::kAdaBoost, 1, 1));
  CHECK_NOTHROW(ada.validate());
}

TEST_CASE("bagging with unlimited depth grows the configured tree count") {
  const Dataset d = make_synthetic(300, 4, 0.2, 2.0, 5);
  const EnsembleModel m =
      fit_ensemble(d, make_config(Method::kBagging, 8, std::nullopt));
  CHECK(m.trees().size() == 8);
  for (double w : m.tree_weights()) CHECK(w == 1.0);
}

TEST_CASE("a single unbootstrapped bagged tree equals fit_tree") {
  const Dataset d = make_synthetic(200, 3, 0.3, 1.0, 9);
  EnsembleConfig c = make_config(Method::kBagging, 1, 5);
  c.bootstrap = false;
  c.feature_subsample = 1.0;
  const EnsembleModel m = fit_ensemble(d, c);
  const std::vector<double> w(d.n_rows(), 1.0);
  Rng rng(12345);
  TreeParams p;
  p.max_depth = 5;
  CHECK(m.trees().at(0) == fit_tree(d, w, p, rng));
}

TEST_CASE("bagging averages pure leaves") {
  TreeNode normal_leaf;
  normal_leaf.value = {1.0, 0.0};
  TreeNode anomaly_leaf;
  anomaly_leaf.value = {0.0, 1.0};
  EnsembleModel m(make_config(Method::kBagging, 2, 1), 1,
                  {DecisionTree({normal_leaf}), DecisionTree({anomaly_leaf})},
                  {1.0, 1.0}, 0.0, std::nullopt);
  const std::vector<double> x = {0.0};
  CHECK(m.predict_proba(x) == DistributionVector{0.5, 0.5});
  CHECK(m.predict_proba(x).top_label() == Label::kAnomaly);
  const std::vector<double> wrong = {0.0, 1.0};
  CHECK_THROWS_AS(m.predict_proba(wrong), InvalidInput);
}

TEST_CASE("bagging fits separable data exactly") {
  const Dataset d = make_synthetic(500, 2, 0.3, 12.0, 2);
  const EnsembleModel m =
      fit_ensemble(d, make_config(Method::kBagging, 50, std::nullopt));
  CHECK(accuracy(m, d) == 1.0);
}

TEST_CASE("gradient boosting deviance never increases") {
  std::vector<double> x;
  std::vector<Label> y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(i);
    y.push_back(i >= 25 ? Label::kAnomaly : Label::kNormal);
  }
  const Dataset d(std::move(x), 1, std::move(y));
  EnsembleConfig c = make_config(Method::kGradientBoosting, 50, 2);
  c.learning_rate = 0.3;
  TrainingTrace trace;
  TrainOptions options;
  options.trace = &trace;
  const EnsembleModel m = fit_ensemble(d, c, options);
  REQUIRE(trace.deviance.size() == m.trees().size() + 1);
  for (std::size_t t = 1; t < trace.deviance.size(); ++t) {
    CHECK(trace.deviance[t] <= trace.deviance[t - 1]);
  }
  CHECK(trace.deviance.back() < trace.deviance.front());
  CHECK(accuracy(m, d) == 1.0);
}

TEST_CASE("gradient boosting on noisy data keeps a monotone trace") {
  const Dataset d = make_synthetic(400, 5, 0.2, 0.7, 4);
  EnsembleConfig c = make_config(Method::kGradientBoosting, 40, 3);
  TrainingTrace trace;
  TrainOptions options;
  options.trace = &trace;
  fit_ensemble(d, c, options);
  for (std::size_t t = 1; t < trace.deviance.size(); ++t) {
    CHECK(trace.deviance[t] <= trace.deviance[t - 1]);
  }
}

TEST_CASE("zero learning rate predicts the prior everywhere") {
  const Dataset d = make_synthetic(200, 3, 0.25, 1.0, 8);
  EnsembleConfig c = make_config(Method::kGradientBoosting, 5, 2);
  c.learning_rate = 0.0;
  TrainOptions options;
  options.allow_zero_learning_rate = true;
  const EnsembleModel m = fit_ensemble(d, c, options);
  const double prior = d.anomaly_rate();
  CHECK(m.base_score() == doctest::Approx(std::log(prior / (1 - prior))));
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    CHECK(m.predict_proba(d.row(i)).anomaly == doctest::Approx(prior));
  }
}

TEST_CASE("single-class data gives a constant model") {
  const Dataset d({1, 2, 3}, 1,
                  {Label::kAnomaly, Label::kAnomaly, Label::kAnomaly});
  for (Method method : {Method::kGradientBoosting, Method::kAdaBoost}) {
    const EnsembleModel m = fit_ensemble(d, make_config(method, 10, 2));
    CHECK(m.is_degenerate());
    CHECK(m.trees().empty());
    const std::vector<double> x = {7.0};
    CHECK(m.predict_proba(x) == DistributionVector{0.0, 1.0});
    CHECK(model_size(m).node_count == 0);
  }
}

TEST_CASE("adaboost stops after a perfect stump") {
  const Dataset d({0, 1, 2, 3}, 1, {Label::kNormal, Label::kNormal,
                                    Label::kAnomaly, Label::kAnomaly});
  TrainingTrace trace;
  TrainOptions options;
  options.trace = &trace;
  const EnsembleModel m =
      fit_ensemble(d, make_config(Method::kAdaBoost, 20, 1), options);
  CHECK(m.trees().size() == 1);
  CHECK(m.tree_weights()[0] == doctest::Approx(adaboost_capped_alpha()));
  CHECK(adaboost_capped_alpha() ==
        doctest::Approx(0.5 * std::log((1 - 1e-10) / 1e-10)));
}

TEST_CASE("adaboost makes progress on XOR and accepts only weak learners") {
  const Dataset d = xor_data(400, 3);
  TrainingTrace trace;
  TrainOptions options;
  options.trace = &trace;
  const EnsembleModel one = fit_ensemble(d, make_config(Method::kAdaBoost, 1, 2));
  const EnsembleModel many =
      fit_ensemble(d, make_config(Method::kAdaBoost, 50, 2), options);
  CHECK(accuracy(many, d) > accuracy(one, d));
  for (std::size_t s = 0; s < many.trees().size(); ++s) {
    CHECK(trace.stage_error[s] < 0.5);
    CHECK(std::isfinite(many.tree_weights()[s]));
    CHECK(many.tree_weights()[s] > 0.0);
  }
}

TEST_CASE("distributions are closed for every learner") {
  const Dataset d = make_synthetic(300, 4, 0.3, 1.0, 6);
  const Dataset q = make_synthetic(200, 4, 0.3, 3.0, 60);
  for (Method method :
       {Method::kBagging, Method::kGradientBoosting, Method::kAdaBoost}) {
    const EnsembleModel m = fit_ensemble(d, make_config(method, 15, 3));
    for (std::size_t i = 0; i < q.n_rows(); ++i) {
      const DistributionVector p = m.predict_proba(q.row(i));
      CHECK(p.normal >= 0.0);
      CHECK(p.anomaly >= 0.0);
      CHECK(p.normal <= 1.0);
      CHECK(p.anomaly <= 1.0);
      CHECK(std::abs(p.normal + p.anomaly - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("model size counts nodes and serialized bytes") {
  TreeNode split;
  split.kind = NodeKind::kSplit;
  split.feature = 0;
  split.threshold = 0.5;
  split.left = 1;
  split.right = 2;
  TreeNode l, r;
  r.value = {0.0, 1.0};
  const EnsembleModel stump(make_config(Method::kBagging, 1, 1), 1,
                            {DecisionTree({split, l, r})}, {1.0}, 0.0,
                            std::nullopt);
  CHECK(model_size(stump).node_count == 3);
  CHECK(model_size(stump).serialized_bytes == serialize_model(stump).size());

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Dataset d = make_synthetic(60, 3, 0.3, 0.5, seed);
    const Method method = static_cast<Method>(seed % 3);
    const EnsembleModel m =
        fit_ensemble(d, make_config(method, 1 + seed % 5, 1 + seed % 4, seed));
    CHECK(model_size(m).node_count == oracle::node_count(m));
  }
}

TEST_CASE("training is independent of the worker count") {
  const Dataset d = make_synthetic(400, 6, 0.2, 1.0, 13);
  const EnsembleConfig c = make_config(Method::kBagging, 12, std::nullopt, 99);
  TrainOptions one, many;
  many.threads = 8;
  CHECK(serialize_model(fit_ensemble(d, c, one)) ==
        serialize_model(fit_ensemble(d, c, many)));
}

TEST_CASE("model constructor checks consistency") {
  TreeNode leaf;
  CHECK_THROWS_AS(EnsembleModel(make_config(Method::kBagging, 1, 1), 1,
                                {DecisionTree({leaf})}, {2.0}, 0.0,
                                std::nullopt),
                  FormatError);
  CHECK_THROWS_AS(EnsembleModel(make_config(Method::kBagging, 1, 1), 1,
                                {DecisionTree({leaf}), DecisionTree({leaf})},
                                {1.0, 1.0}, 0.0, std::nullopt),
                  FormatError);
}

}  // namespace
}  // namespace cforest
