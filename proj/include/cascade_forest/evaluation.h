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

#ifndef CASCADE_FOREST_EVALUATION_H_
#define CASCADE_FOREST_EVALUATION_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cascade_forest/cascade.h"
#include "cascade_forest/dataset.h"
#include "cascade_forest/ensemble.h"
#include "cascade_forest/instrumentation.h"
#include "cascade_forest/metrics.h"

namespace cforest {

// ---------------------------------------------------------------------------
// Cross-validation folds.

struct FoldSplit {
  std::vector<std::size_t> train;  // ascending row indices
  std::vector<std::size_t> test;   // ascending row indices
};

// Each class is shuffled and dealt round-robin, continuing the rotation
// across classes, so per-fold class counts and fold sizes differ by at most
// one. Requires k >= 2 and at least k rows of every class.
std::vector<FoldSplit> stratified_kfold(const Dataset& data, std::size_t k,
                                        std::uint64_t seed);

// ---------------------------------------------------------------------------
// Latency.

struct LatencyOptions {
  std::size_t warmup = 100;
  // Timed single-query calls; the query set is cycled as needed.
  std::size_t repetitions = 1000;
};

struct LatencyStats {
  double mean_us = 0.0;
  double p99_us = 0.0;
  // Equals mean_us for single-path models; for cascades the slower of the
  // two forced long paths (coarse then expert).
  double worst_case_us = 0.0;
  std::size_t samples = 0;
  // I/O events observed inside the timed region (expected all zero).
  IoCounters io_during_timing;
};

LatencyStats summarize_latency(std::vector<double> samples_us);

// Times fn(x) one query at a time on a monotonic clock. fn must return a
// value convertible to double, which is folded into a sink so the call
// cannot be elided.
template <typename Fn>
LatencyStats measure_latency_of(const Dataset& queries,
                                const LatencyOptions& options, Fn&& fn) {
  if (queries.empty()) throw InvalidInput("latency needs at least one query");
  if (options.repetitions == 0) {
    throw InvalidInput("latency needs at least one repetition");
  }
  using Clock = std::chrono::steady_clock;
  volatile double sink = 0.0;
  const std::size_t n = queries.n_rows();
  for (std::size_t i = 0; i < options.warmup; ++i) {
    sink = sink + static_cast<double>(fn(queries.row(i % n)));
  }
  std::vector<double> samples(options.repetitions);
  const IoCounters before = io_counters();
  for (std::size_t i = 0; i < options.repetitions; ++i) {
    const auto x = queries.row(i % n);
    const auto t0 = Clock::now();
    const double r = static_cast<double>(fn(x));
    const auto t1 = Clock::now();
    sink = sink + r;
    samples[i] = std::chrono::duration<double, std::micro>(t1 - t0).count();
  }
  const IoCounters after = io_counters();
  LatencyStats stats = summarize_latency(std::move(samples));
  stats.io_during_timing = {after.dataset_loads - before.dataset_loads,
                            after.model_deserializations -
                                before.model_deserializations};
  return stats;
}

LatencyStats measure_latency(const EnsembleModel& model,
                             const Dataset& queries,
                             const LatencyOptions& options = {});
LatencyStats measure_latency(const CascadeModel& model,
                             const Dataset& queries,
                             const LatencyOptions& options = {});

// ---------------------------------------------------------------------------
// Reports.

// One fold's measurements, or their mean / sample variance across folds.
// Ratio fields are NaN when undefined and skipped by the aggregation.
struct FoldMetrics {
  double f1_normal = 0.0;
  double f1_anomaly = 0.0;
  double node_count = 0.0;
  double serialized_bytes = 0.0;
  double train_seconds = 0.0;
  double mean_latency_us = 0.0;
  double p99_latency_us = 0.0;
  double worst_case_latency_us = 0.0;
  // Tree nodes visited per query (hardware-independent latency proxy).
  double mean_path_nodes = 0.0;
  double fg1_train_fraction = 0.0;
  double fg2_train_fraction = 0.0;
  // Training rows sent to at least one expert (anomalies counted once).
  double fg_train_fraction = 0.0;
  double fg1_test_fraction = 0.0;
  double fg2_test_fraction = 0.0;
  double fg1_train_ratio = 0.0;
  double fg2_train_ratio = 0.0;
};

struct MachineInfo {
  std::string cpu;
  unsigned hardware_threads = 0;
  std::string compiler;
};

MachineInfo machine_info();

struct EvalReport {
  std::string kind;  // "baseline" or "cascade"
  std::string method;
  std::string config;  // C(..) or R(..) literal
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::string provenance;
  std::size_t n_rows = 0;
  FoldMetrics mean;
  FoldMetrics variance;
  std::vector<FoldMetrics> per_fold;
  MachineInfo machine;
  IoCounters io_during_timing;
};

// Field-wise mean and sample variance (n - 1) ignoring NaN entries.
std::pair<FoldMetrics, FoldMetrics> aggregate(
    std::span<const FoldMetrics> folds);

struct EvalOptions {
  unsigned threads = 1;
  bool measure_latency = true;
  // Timed repetitions per fold are max(latency.repetitions, test rows).
  LatencyOptions latency;
};

EvalReport evaluate_baseline_cv(const Dataset& data,
                                const EnsembleConfig& config, std::size_t k,
                                std::uint64_t seed,
                                const EvalOptions& options = {});

EvalReport evaluate_cascade_cv(const Dataset& data,
                               const CascadeConfig& config, std::size_t k,
                               std::uint64_t seed,
                               const EvalOptions& options = {});

// Scores an already trained model on `test` (no training, folds = 0).
EvalReport evaluate_model(const EnsembleModel& model, const Dataset& test,
                          const EvalOptions& options = {});
EvalReport evaluate_model(const CascadeModel& model, const Dataset& test,
                          const EvalOptions& options = {});

// Cross-validates every (cct, tct) pair for one coarse/expert pair, reusing
// the coarse model per fold and the experts per (fold, tct). Reports follow
// the order of `pairs`.
std::vector<EvalReport> evaluate_cascade_grid_cv(
    const Dataset& data, const EnsembleConfig& coarse,
    const EnsembleConfig& expert,
    std::span<const std::pair<double, double>> pairs, std::size_t k,
    std::uint64_t seed, const EvalOptions& options = {});

// ---------------------------------------------------------------------------
// Cross-validated confidence sweep of a single ensemble.

struct SweepSummary {
  double threshold = 0.5;
  double valid_fraction_normal_mean = 0.0;
  double valid_fraction_normal_var = 0.0;
  double valid_fraction_anomaly_mean = 0.0;
  double valid_fraction_anomaly_var = 0.0;
  // Means over the folds where the value is defined; NaN if none.
  double f1_normal_mean = 0.0;
  double f1_normal_var = 0.0;
  double f1_anomaly_mean = 0.0;
  double f1_anomaly_var = 0.0;
  std::size_t folds_with_f1_normal = 0;
  std::size_t folds_with_f1_anomaly = 0;
};

struct SweepCvResult {
  std::vector<std::vector<SweepPoint>> per_fold;
  std::vector<SweepSummary> summary;
  // Fold-mean F1 of the same model over all test rows.
  ClassF1 overall_f1;
};

SweepCvResult sweep_cct_cv(const Dataset& data, const EnsembleConfig& config,
                           std::span<const double> thresholds, std::size_t k,
                           std::uint64_t seed, const EvalOptions& options = {});

// Threshold points of a CV sweep in the shape find_lowest_beating_cct takes
// (fold means; F1 absent where no fold defines it).
std::vector<SweepPoint> summary_points(std::span<const SweepSummary> summary);

// ---------------------------------------------------------------------------
// Grid search.

struct GridEntry {
  CascadeConfig config;
  EvalReport report;
  // Position in enumeration order (coarse, expert, cct, tct).
  std::size_t lattice_index = 0;
};

// Strict ranking used by grid_search: higher anomaly F1 first, then fewer
// visited tree nodes per query, then enumeration order.
bool grid_rank_less(const GridEntry& a, const GridEntry& b);

// Evaluates every coarse x expert candidate on the granularity lattice with
// cct <= tct and returns the entries ranked by grid_rank_less.
std::vector<GridEntry> grid_search(
    const Dataset& data, std::span<const EnsembleConfig> coarse_candidates,
    std::span<const EnsembleConfig> expert_candidates, double granularity,
    std::size_t k, std::uint64_t seed, const EvalOptions& options = {});

// ---------------------------------------------------------------------------
// Output formats.

std::string report_to_json(const EvalReport& report);
// Aligned text table, one row per report.
std::string reports_table(std::span<const EvalReport> reports);

std::string sweep_to_csv(std::span<const SweepPoint> sweep);
std::string sweep_summary_to_csv(std::span<const SweepSummary> summary);

// Baseline-over-cascade resource ratios (values > 1 favor the cascade).
struct BenchComparison {
  double size_ratio = 0.0;   // node counts
  double bytes_ratio = 0.0;  // serialized bytes
  double train_ratio = 0.0;
  double latency_ratio = 0.0;
  double worst_case_latency_ratio = 0.0;
  double path_nodes_ratio = 0.0;
  double f1_normal_delta = 0.0;  // cascade minus baseline
  double f1_anomaly_delta = 0.0;
};

BenchComparison compare_reports(const EvalReport& baseline,
                                const EvalReport& cascade);
std::string bench_to_json(const EvalReport& baseline, const EvalReport& cascade,
                          const BenchComparison& comparison);
std::string bench_table(const EvalReport& baseline, const EvalReport& cascade,
                        const BenchComparison& comparison);

}  // namespace cforest

#endif  // CASCADE_FOREST_EVALUATION_H_
