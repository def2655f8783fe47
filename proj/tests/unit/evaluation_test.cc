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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <vector>

#include "cascade_forest/evaluation.h"
#include "cascade_forest/metrics.h"
#include "doctest.h"
#include "support/oracles.h"

namespace cforest {
namespace {

constexpr Label N = Label::kNormal;
constexpr Label A = Label::kAnomaly;

EnsembleConfig bagging(std::uint32_t trees, std::optional<std::uint32_t> depth) {
  EnsembleConfig c;
  c.n_trees = trees;
  c.max_depth = depth;
  c.seed = 5;
  return c;
}

EvalOptions quiet() {
  EvalOptions o;
  o.measure_latency = false;
  return o;
}

TEST_CASE("per-class F1 examples") {
  const std::vector<Label> truth = {N, A, N, A, A, N};
  const ClassF1 perfect = per_class_f1(truth, truth);
  CHECK(perfect.normal == 1.0);
  CHECK(perfect.anomaly == 1.0);

  // Anomaly: tp=2, fp=1, fn=1.
  const std::vector<Label> pred = {A, A, N, N, A, N};
  CHECK(per_class_f1(pred, truth).anomaly == doctest::Approx(2.0 / 3.0));

  const std::vector<Label> all_normal(truth.size(), N);
  CHECK(per_class_f1(all_normal, truth).anomaly == 0.0);

  const std::vector<Label> short_pred = {N};
  CHECK_THROWS_AS(per_class_f1(short_pred, truth), InvalidInput);
  CHECK_THROWS_AS(per_class_f1({}, {}), InvalidInput);
}

TEST_CASE("per-class F1 agrees with the confusion oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(60);
    const double bias = rng.uniform01();
    std::vector<Label> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.uniform01() < bias ? A : N;
      t[i] = rng.uniform01() < bias ? A : N;
    }
    const ClassF1 f = per_class_f1(p, t);
    CHECK(f.normal == doctest::Approx(oracle::f1(p, t, N)).epsilon(1e-12));
    CHECK(f.anomaly == doctest::Approx(oracle::f1(p, t, A)).epsilon(1e-12));
    const ConfusionCounts c = confusion(p, t, A);
    CHECK(c.total() == n);
    const oracle::Confusion o = oracle::count(p, t, A);
    CHECK(c.tp == o.tp);
    CHECK(c.fp == o.fp);
    CHECK(c.fn == o.fn);
  }
}

TEST_CASE("stratified folds") {
  const Dataset tiny({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 1,
                     {N, A, N, A, N, A, N, A, N, A});
  const auto folds = stratified_kfold(tiny, 5, 1);
  REQUIRE(folds.size() == 5);
  for (const auto& f : folds) {
    REQUIRE(f.test.size() == 2);
    CHECK(tiny.label(f.test[0]) != tiny.label(f.test[1]));
  }
  CHECK_THROWS_AS(stratified_kfold(tiny, 1, 1), InvalidInput);
  CHECK_THROWS_AS(stratified_kfold(tiny, 6, 1), InvalidInput);

  const Dataset d = make_synthetic(1003, 2, 0.07, 1.0, 3);
  const auto parts = stratified_kfold(d, 5, 9);
  std::multiset<std::size_t> seen;
  const double anomalies = double(d.count(A));
  for (const auto& f : parts) {
    std::set<std::size_t> train(f.train.begin(), f.train.end());
    for (auto i : f.test) {
      CHECK(train.count(i) == 0);
      seen.insert(i);
    }
    CHECK(f.train.size() + f.test.size() == d.n_rows());
    std::size_t a = 0;
    for (auto i : f.test) a += d.label(i) == A;
    CHECK(std::abs(double(a) - anomalies / 5.0) <= 1.0);
  }
  CHECK(seen.size() == d.n_rows());
  for (std::size_t i = 0; i < d.n_rows(); ++i) CHECK(seen.count(i) == 1);
  const auto again = stratified_kfold(d, 5, 9);
  for (std::size_t f = 0; f < 5; ++f) CHECK(again[f].test == parts[f].test);
}

TEST_CASE("aggregate reports mean and sample variance") {
  std::vector<FoldMetrics> folds(3);
  folds[0].f1_anomaly = 0.5;
  folds[1].f1_anomaly = 0.7;
  folds[2].f1_anomaly = 0.9;
  folds[0].fg1_train_ratio = NAN;
  folds[1].fg1_train_ratio = 2.0;
  folds[2].fg1_train_ratio = 4.0;
  const auto [mean, var] = aggregate(folds);
  CHECK(mean.f1_anomaly == doctest::Approx(0.7));
  CHECK(var.f1_anomaly == doctest::Approx(0.04));
  CHECK(mean.fg1_train_ratio == doctest::Approx(3.0));
  CHECK(var.fg1_train_ratio == doctest::Approx(2.0));
}

TEST_CASE("latency of a calibrated spin stub") {
  const Dataset q = make_synthetic(50, 2, 0.2, 1.0, 1);
  LatencyOptions o;
  o.warmup = 20;
  o.repetitions = 1000;
  constexpr double kTauUs = 50.0;
  const LatencyStats s = measure_latency_of(q, o, [](std::span<const double>) {
    const auto until =
        std::chrono::steady_clock::now() + std::chrono::microseconds(50);
    int spins = 0;
    while (std::chrono::steady_clock::now() < until) ++spins;
    return spins;
  });
  CHECK(s.samples == 1000);
  CHECK(s.mean_us >= 0.8 * kTauUs);
  CHECK(s.mean_us <= 1.2 * kTauUs);
  CHECK(s.p99_us >= s.mean_us * 0.9);
  CHECK(s.io_during_timing.dataset_loads == 0);
  CHECK_THROWS_AS(measure_latency_of(Dataset(), o, [](auto) { return 0; }),
                  InvalidInput);
}

TEST_CASE("summary statistics of latency samples") {
  std::vector<double> samples(100);
  for (int i = 0; i < 100; ++i) samples[i] = i + 1;
  const LatencyStats s = summarize_latency(samples);
  CHECK(s.mean_us == doctest::Approx(50.5));
  CHECK(s.p99_us == 99.0);
  CHECK(s.worst_case_us == s.mean_us);
}

TEST_CASE("cascade worst case is forced and finite") {
  const Dataset d = make_synthetic(400, 3, 0.3, 1.0, 8);
  const CascadeModel m = train_cascade(
      d, CascadeConfig(bagging(11, std::nullopt), bagging(5, 3), 0.5, 0.5));
  REQUIRE(!m.expert1());
  LatencyOptions o;
  o.repetitions = 1000;
  const LatencyStats s = measure_latency(m, d, o);
  CHECK(std::isfinite(s.worst_case_us));
  CHECK(s.worst_case_us >= s.mean_us);

  const CascadeModel used = train_cascade(
      d, CascadeConfig(bagging(5, 3), bagging(20, 8), 0.9, 0.95));
  const LatencyStats u = measure_latency(used, d, o);
  CHECK(u.worst_case_us >= u.mean_us);
  CHECK(u.io_during_timing.dataset_loads == 0);
  CHECK(u.io_during_timing.model_deserializations == 0);
}

TEST_CASE("gate-bypass cascade reports equal the coarse-only report") {
  const Dataset d = make_synthetic(500, 3, 0.3, 1.0, 14);
  const EnsembleConfig coarse = bagging(11, std::nullopt);
  const EvalReport base = evaluate_baseline_cv(d, coarse, 5, 3, quiet());
  const EvalReport casc = evaluate_cascade_cv(
      d, CascadeConfig(coarse, bagging(5, 3), 0.5, 0.5), 5, 3, quiet());
  CHECK(casc.mean.f1_normal == base.mean.f1_normal);
  CHECK(casc.mean.f1_anomaly == base.mean.f1_anomaly);
  CHECK(casc.mean.fg1_test_fraction == 0.0);
  CHECK(casc.mean.fg2_test_fraction == 0.0);
  CHECK(casc.mean.fg_train_fraction == 0.0);
}

TEST_CASE("test-path fractions equal a recount of classify paths") {
  const Dataset d = make_synthetic(600, 3, 0.25, 1.0, 19);
  const CascadeConfig c(bagging(4, 3), bagging(6, 5), 0.9, 0.95);
  const EvalReport r = evaluate_cascade_cv(d, c, 3, 7, quiet());
  const auto folds = stratified_kfold(d, 3, 7);
  for (std::size_t f = 0; f < 3; ++f) {
    const CascadeModel m = train_cascade(d.subset(folds[f].train), c);
    const Dataset test = d.subset(folds[f].test);
    std::size_t e1 = 0, e2 = 0;
    std::vector<Label> pred;
    for (std::size_t i = 0; i < test.n_rows(); ++i) {
      const auto res = m.classify(test.row(i));
      e1 += res.path == Path::kExpert1;
      e2 += res.path == Path::kExpert2;
      pred.push_back(res.label);
    }
    const FoldMetrics& fm = r.per_fold[f];
    CHECK(fm.fg1_test_fraction == doctest::Approx(double(e1) / test.n_rows()));
    CHECK(fm.fg2_test_fraction == doctest::Approx(double(e2) / test.n_rows()));
    CHECK(fm.fg1_test_fraction + fm.fg2_test_fraction <= 1.0);
    CHECK(fm.f1_anomaly ==
          doctest::Approx(oracle::f1(pred, test.labels(), Label::kAnomaly)));
    CHECK(fm.fg1_train_fraction ==
          doctest::Approx(m.training_stats().fg1_train_fraction));
  }
  CHECK(r.folds == 3);
  CHECK(r.kind == "cascade");
  CHECK(r.config == c.literal());
}

TEST_CASE("evaluation is deterministic apart from timings") {
  const Dataset d = make_synthetic(300, 3, 0.25, 1.0, 4);
  const CascadeConfig c(bagging(3, 3), bagging(4, 4), 0.85, 0.9);
  const EvalReport a = evaluate_cascade_cv(d, c, 3, 11, quiet());
  const EvalReport b = evaluate_cascade_cv(d, c, 3, 11, quiet());
  for (std::size_t f = 0; f < 3; ++f) {
    CHECK(a.per_fold[f].f1_anomaly == b.per_fold[f].f1_anomaly);
    CHECK(a.per_fold[f].node_count == b.per_fold[f].node_count);
    CHECK(a.per_fold[f].serialized_bytes == b.per_fold[f].serialized_bytes);
    CHECK(a.per_fold[f].mean_path_nodes == b.per_fold[f].mean_path_nodes);
  }
}

TEST_CASE("grid search enumerates and ranks") {
  const Dataset d = make_synthetic(300, 3, 0.25, 1.0, 6);
  const std::vector<EnsembleConfig> coarse = {bagging(3, 2)};
  const std::vector<EnsembleConfig> expert = {bagging(4, 4)};
  CHECK(grid_search(d, coarse, expert, 0.5, 3, 1, quiet()).size() == 3);

  const std::vector<EnsembleConfig> two = {bagging(3, 2), bagging(5, 3)};
  const auto entries = grid_search(d, two, expert, 0.05, 3, 1, quiet());
  REQUIRE(entries.size() == 2 * 66);
  auto resorted = entries;
  std::sort(resorted.begin(), resorted.end(),
            [](const GridEntry& a, const GridEntry& b) {
              if (a.report.mean.f1_anomaly != b.report.mean.f1_anomaly) {
                return a.report.mean.f1_anomaly > b.report.mean.f1_anomaly;
              }
              if (a.report.mean.mean_path_nodes !=
                  b.report.mean.mean_path_nodes) {
                return a.report.mean.mean_path_nodes <
                       b.report.mean.mean_path_nodes;
              }
              return a.lattice_index < b.lattice_index;
            });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CHECK(entries[i].lattice_index == resorted[i].lattice_index);
    CHECK(entries[i].config.cct() <= entries[i].config.tct());
  }
  std::set<std::size_t> indices;
  for (const auto& e : entries) indices.insert(e.lattice_index);
  CHECK(indices.size() == entries.size());
  CHECK_THROWS_AS(grid_search(d, {}, expert, 0.05, 3, 1), InvalidInput);
}

TEST_CASE("grid points match standalone cross-validation") {
  const Dataset d = make_synthetic(300, 3, 0.25, 1.0, 10);
  const EnsembleConfig coarse = bagging(3, 2), expert = bagging(4, 4);
  const std::vector<std::pair<double, double>> pairs = {{0.6, 0.9},
                                                        {0.8, 0.9}};
  const auto grid =
      evaluate_cascade_grid_cv(d, coarse, expert, pairs, 3, 2, quiet());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const EvalReport alone = evaluate_cascade_cv(
        d, CascadeConfig(coarse, expert, pairs[i].first, pairs[i].second), 3,
        2, quiet());
    CHECK(grid[i].mean.f1_anomaly == alone.mean.f1_anomaly);
    CHECK(grid[i].mean.fg1_test_fraction == alone.mean.fg1_test_fraction);
    CHECK(grid[i].config == alone.config);
  }
}

TEST_CASE("cross-validated sweep") {
  const Dataset d = make_synthetic(400, 3, 0.25, 1.0, 12);
  const std::vector<double> ts = {0.5, 0.7, 0.9, 1.0};
  const SweepCvResult r = sweep_cct_cv(d, bagging(7, 3), ts, 4, 3, quiet());
  REQUIRE(r.summary.size() == 4);
  CHECK(r.per_fold.size() == 4);
  CHECK(r.summary[0].valid_fraction_normal_mean == 1.0);
  CHECK(r.summary[0].f1_anomaly_mean == doctest::Approx(r.overall_f1.anomaly));
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(r.summary[i].valid_fraction_anomaly_mean <=
          r.summary[i - 1].valid_fraction_anomaly_mean);
  }
  const auto points = summary_points(r.summary);
  CHECK(points.size() == 4);
}

TEST_CASE("bench ratios") {
  EvalReport b, c;
  b.mean.node_count = 100;
  c.mean.node_count = 25;
  b.mean.train_seconds = 6;
  c.mean.train_seconds = 2;
  b.mean.mean_latency_us = 10;
  c.mean.mean_latency_us = 4;
  b.mean.f1_anomaly = 0.9;
  c.mean.f1_anomaly = 0.95;
  const BenchComparison cmp = compare_reports(b, c);
  CHECK(cmp.size_ratio == 4.0);
  CHECK(cmp.train_ratio == 3.0);
  CHECK(cmp.latency_ratio == 2.5);
  const std::string json = bench_to_json(b, c, cmp);
  CHECK(json.find("\"size_ratio\"") != std::string::npos);
  CHECK(json.find("\"train_ratio\"") != std::string::npos);
  CHECK(json.find("\"latency_ratio\"") != std::string::npos);
}

}  // namespace
}  // namespace cforest
