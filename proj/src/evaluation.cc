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

#include "cascade_forest/evaluation.h"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "cascade_forest/random.h"

namespace cforest {
namespace {

using Clock = std::chrono::steady_clock;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr std::array kMetricFields = {
    &FoldMetrics::f1_normal,          &FoldMetrics::f1_anomaly,
    &FoldMetrics::node_count,         &FoldMetrics::serialized_bytes,
    &FoldMetrics::train_seconds,      &FoldMetrics::mean_latency_us,
    &FoldMetrics::p99_latency_us,     &FoldMetrics::worst_case_latency_us,
    &FoldMetrics::mean_path_nodes,    &FoldMetrics::fg1_train_fraction,
    &FoldMetrics::fg2_train_fraction, &FoldMetrics::fg_train_fraction,
    &FoldMetrics::fg1_test_fraction,
    &FoldMetrics::fg2_test_fraction,  &FoldMetrics::fg1_train_ratio,
    &FoldMetrics::fg2_train_ratio,
};

// Mean and sample variance of the non-NaN values.
std::pair<double, double> mean_var(std::span<const double> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const double v : values) {
    if (!std::isnan(v)) {
      sum += v;
      ++n;
    }
  }
  if (n == 0) return {kNaN, kNaN};
  const double mean = sum / static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  double ss = 0.0;
  for (const double v : values) {
    if (!std::isnan(v)) ss += (v - mean) * (v - mean);
  }
  return {mean, ss / static_cast<double>(n - 1)};
}

struct FoldData {
  Dataset train;
  Dataset test;
};

FoldData fold_data(const Dataset& data, const FoldSplit& split) {
  return {data.subset(split.train), data.subset(split.test)};
}

LatencyOptions fold_latency(const EvalOptions& options, std::size_t n_test) {
  LatencyOptions out = options.latency;
  out.repetitions = std::max(out.repetitions, n_test);
  return out;
}

void add_io(IoCounters& total, const IoCounters& more) {
  total.dataset_loads += more.dataset_loads;
  total.model_deserializations += more.model_deserializations;
}

FoldMetrics baseline_fold(const EnsembleModel& model, double train_seconds,
                          const Dataset& test, const EvalOptions& options,
                          IoCounters& io) {
  FoldMetrics m;
  std::vector<Label> predicted(test.n_rows());
  double nodes = 0.0;
  for (std::size_t i = 0; i < test.n_rows(); ++i) {
    predicted[i] = model.predict_proba(test.row(i)).top_label();
    nodes += static_cast<double>(model.path_length(test.row(i)));
  }
  const ClassF1 f1 = per_class_f1(predicted, test.labels());
  m.f1_normal = f1.normal;
  m.f1_anomaly = f1.anomaly;
  const ModelSize size = model_size(model);
  m.node_count = static_cast<double>(size.node_count);
  m.serialized_bytes = static_cast<double>(size.serialized_bytes);
  m.train_seconds = train_seconds;
  m.mean_path_nodes = nodes / static_cast<double>(test.n_rows());
  if (options.measure_latency) {
    const LatencyStats lat =
        measure_latency(model, test, fold_latency(options, test.n_rows()));
    m.mean_latency_us = lat.mean_us;
    m.p99_latency_us = lat.p99_us;
    m.worst_case_latency_us = lat.worst_case_us;
    add_io(io, lat.io_during_timing);
  }
  m.fg1_train_ratio = kNaN;
  m.fg2_train_ratio = kNaN;
  return m;
}

FoldMetrics cascade_fold(const CascadeModel& model, double train_seconds,
                         const Dataset& test, const EvalOptions& options,
                         IoCounters& io) {
  FoldMetrics m;
  std::vector<Label> predicted(test.n_rows());
  std::size_t routed[3] = {0, 0, 0};
  double nodes = 0.0;
  for (std::size_t i = 0; i < test.n_rows(); ++i) {
    const ClassificationResult r = model.classify(test.row(i));
    predicted[i] = r.label;
    ++routed[static_cast<int>(r.path)];
    nodes += static_cast<double>(model.path_length(test.row(i)));
  }
  const auto n = static_cast<double>(test.n_rows());
  const ClassF1 f1 = per_class_f1(predicted, test.labels());
  m.f1_normal = f1.normal;
  m.f1_anomaly = f1.anomaly;
  const ModelSize size = model_size(model);
  m.node_count = static_cast<double>(size.node_count);
  m.serialized_bytes = static_cast<double>(size.serialized_bytes);
  m.train_seconds = train_seconds;
  m.mean_path_nodes = nodes / n;
  if (options.measure_latency) {
    const LatencyStats lat =
        measure_latency(model, test, fold_latency(options, test.n_rows()));
    m.mean_latency_us = lat.mean_us;
    m.p99_latency_us = lat.p99_us;
    m.worst_case_latency_us = lat.worst_case_us;
    add_io(io, lat.io_during_timing);
  }
  const RoutingStats& s = model.training_stats();
  m.fg1_train_fraction = s.fg1_train_fraction;
  m.fg2_train_fraction = s.fg2_train_fraction;
  m.fg_train_fraction = s.expert_fraction();
  m.fg1_test_fraction = static_cast<double>(routed[1]) / n;
  m.fg2_test_fraction = static_cast<double>(routed[2]) / n;
  m.fg1_train_ratio = s.fg1_ratio;
  m.fg2_train_ratio = s.fg2_ratio;
  return m;
}

EvalReport make_report(std::string kind, const EnsembleConfig& learner,
                       std::string literal, const Dataset& data, std::size_t k,
                       std::uint64_t seed, std::vector<FoldMetrics> folds,
                       const IoCounters& io) {
  EvalReport r;
  r.kind = std::move(kind);
  r.method = std::string(method_name(learner.method));
  r.config = std::move(literal);
  r.folds = k;
  r.seed = seed;
  r.provenance = data.source();
  r.n_rows = data.n_rows();
  std::tie(r.mean, r.variance) = aggregate(folds);
  r.per_fold = std::move(folds);
  r.machine = machine_info();
  r.io_during_timing = io;
  return r;
}

}  // namespace

std::vector<FoldSplit> stratified_kfold(const Dataset& data, std::size_t k,
                                        std::uint64_t seed) {
  if (k < 2) throw InvalidInput("cross-validation needs k >= 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    by_class[label_index(data.label(i))].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < k) {
      throw InvalidInput(fmt::format(
          "class {} has {} rows, fewer than k = {}",
          label_name(static_cast<Label>(c)), by_class[c].size(), k));
    }
  }
  std::vector<std::vector<std::size_t>> tests(k);
  std::size_t offset = 0;
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(by_class[c]);
    for (std::size_t j = 0; j < by_class[c].size(); ++j) {
      tests[(offset + j) % k].push_back(by_class[c][j]);
    }
    offset = (offset + by_class[c].size()) % k;
  }
  std::vector<FoldSplit> out(k);
  std::vector<std::uint8_t> in_test(data.n_rows());
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(tests[f].begin(), tests[f].end());
    std::fill(in_test.begin(), in_test.end(), 0);
    for (const auto i : tests[f]) in_test[i] = 1;
    out[f].train.reserve(data.n_rows() - tests[f].size());
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
      if (!in_test[i]) out[f].train.push_back(i);
    }
    out[f].test = std::move(tests[f]);
  }
  return out;
}

LatencyStats summarize_latency(std::vector<double> samples_us) {
  LatencyStats s;
  if (samples_us.empty()) return s;
  double sum = 0.0;
  for (const double v : samples_us) sum += v;
  s.samples = samples_us.size();
  s.mean_us = sum / static_cast<double>(s.samples);
  const auto rank = static_cast<std::size_t>(
      std::ceil(0.99 * static_cast<double>(s.samples)));
  const std::size_t idx = std::clamp<std::size_t>(rank, 1, s.samples) - 1;
  std::nth_element(samples_us.begin(),
                   samples_us.begin() + static_cast<std::ptrdiff_t>(idx),
                   samples_us.end());
  s.p99_us = samples_us[idx];
  s.worst_case_us = s.mean_us;
  return s;
}

LatencyStats measure_latency(const EnsembleModel& model,
                             const Dataset& queries,
                             const LatencyOptions& options) {
  return measure_latency_of(queries, options, [&model](auto x) {
    return model.predict_proba(x).anomaly;
  });
}

LatencyStats measure_latency(const CascadeModel& model,
                             const Dataset& queries,
                             const LatencyOptions& options) {
  LatencyStats stats = measure_latency_of(
      queries, options, [&model](auto x) { return model.classify(x).confidence; });
  double worst = stats.mean_us;
  for (const Path path : {Path::kExpert1, Path::kExpert2}) {
    const LatencyStats forced =
        measure_latency_of(queries, options, [&model, path](auto x) {
          return model.classify_forced(x, path).confidence;
        });
    worst = std::max(worst, forced.mean_us);
    add_io(stats.io_during_timing, forced.io_during_timing);
  }
  stats.worst_case_us = worst;
  return stats;
}

MachineInfo machine_info() {
  MachineInfo info;
  info.hardware_threads = std::thread::hardware_concurrency();
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        info.cpu = line.substr(line.find_first_not_of(' ', colon + 1));
      }
      break;
    }
  }
#if defined(__clang__)
  info.compiler = fmt::format("clang {}", __clang_version__);
#elif defined(__GNUC__)
  info.compiler = fmt::format("gcc {}", __VERSION__);
#else
  info.compiler = "unknown";
#endif
  return info;
}

std::pair<FoldMetrics, FoldMetrics> aggregate(
    std::span<const FoldMetrics> folds) {
  FoldMetrics mean;
  FoldMetrics var;
  std::vector<double> column(folds.size());
  for (const auto field : kMetricFields) {
    for (std::size_t f = 0; f < folds.size(); ++f) {
      column[f] = folds[f].*field;
    }
    std::tie(mean.*field, var.*field) = mean_var(column);
  }
  return {mean, var};
}

EvalReport evaluate_baseline_cv(const Dataset& data,
                                const EnsembleConfig& config, std::size_t k,
                                std::uint64_t seed,
                                const EvalOptions& options) {
  config.validate();
  const auto splits = stratified_kfold(data, k, seed);
  std::vector<FoldMetrics> folds;
  IoCounters io;
  TrainOptions train_options;
  train_options.threads = options.threads;
  for (const auto& split : splits) {
    const FoldData fd = fold_data(data, split);
    const auto start = Clock::now();
    const EnsembleModel model = fit_ensemble(fd.train, config, train_options);
    const double train_seconds = seconds_since(start);
    folds.push_back(baseline_fold(model, train_seconds, fd.test, options, io));
  }
  return make_report("baseline", config, config.literal(), data, k, seed,
                     std::move(folds), io);
}

EvalReport evaluate_cascade_cv(const Dataset& data,
                               const CascadeConfig& config, std::size_t k,
                               std::uint64_t seed,
                               const EvalOptions& options) {
  const std::pair<double, double> pair{config.cct(), config.tct()};
  return evaluate_cascade_grid_cv(data, config.coarse(), config.expert(),
                                  std::span(&pair, 1), k, seed, options)
      .front();
}

EvalReport evaluate_model(const EnsembleModel& model, const Dataset& test,
                          const EvalOptions& options) {
  IoCounters io;
  std::vector<FoldMetrics> folds = {
      baseline_fold(model, kNaN, test, options, io)};
  return make_report("baseline", model.config(), model.config().literal(),
                     test, 0, model.config().seed, std::move(folds), io);
}

EvalReport evaluate_model(const CascadeModel& model, const Dataset& test,
                          const EvalOptions& options) {
  IoCounters io;
  std::vector<FoldMetrics> folds = {
      cascade_fold(model, kNaN, test, options, io)};
  return make_report("cascade", model.config().coarse(),
                     model.config().literal(), test, 0,
                     model.config().coarse().seed, std::move(folds), io);
}

std::vector<EvalReport> evaluate_cascade_grid_cv(
    const Dataset& data, const EnsembleConfig& coarse,
    const EnsembleConfig& expert,
    std::span<const std::pair<double, double>> pairs, std::size_t k,
    std::uint64_t seed, const EvalOptions& options) {
  if (pairs.empty()) throw InvalidInput("no threshold pairs to evaluate");
  std::vector<CascadeConfig> configs;
  for (const auto& [cct, tct] : pairs) {
    configs.emplace_back(coarse, expert, cct, tct);
  }
  std::vector<double> tcts;
  for (const auto& [cct, tct] : pairs) {
    if (std::find(tcts.begin(), tcts.end(), tct) == tcts.end()) {
      tcts.push_back(tct);
    }
  }
  const auto splits = stratified_kfold(data, k, seed);
  std::vector<std::vector<FoldMetrics>> folds(pairs.size());
  std::vector<IoCounters> io(pairs.size());
  TrainOptions coarse_options;
  coarse_options.threads = options.threads;
  CascadeTrainOptions cascade_options;
  cascade_options.threads = options.threads;

  for (const auto& split : splits) {
    const FoldData fd = fold_data(data, split);
    if (!fd.train.has_both_classes()) {
      throw InvalidInput("a training fold lacks one of the classes");
    }
    const auto coarse_start = Clock::now();
    const EnsembleModel coarse_model =
        fit_ensemble(fd.train, coarse, coarse_options);
    const double coarse_seconds = seconds_since(coarse_start);
    for (const double tct : tcts) {
      const auto expert_start = Clock::now();
      const CascadeModel trained = train_cascade_with_coarse(
          fd.train, CascadeConfig(coarse, expert, 0.5, tct), coarse_model,
          cascade_options);
      const double train_seconds = coarse_seconds + seconds_since(expert_start);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        if (pairs[p].second != tct) continue;
        folds[p].push_back(cascade_fold(trained.with_cct(pairs[p].first),
                                        train_seconds, fd.test, options,
                                        io[p]));
      }
    }
  }
  std::vector<EvalReport> out;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    out.push_back(make_report("cascade", configs[p].coarse(),
                              configs[p].literal(), data, k, seed,
                              std::move(folds[p]), io[p]));
  }
  return out;
}

SweepCvResult sweep_cct_cv(const Dataset& data, const EnsembleConfig& config,
                           std::span<const double> thresholds, std::size_t k,
                           std::uint64_t seed, const EvalOptions& options) {
  config.validate();
  const auto splits = stratified_kfold(data, k, seed);
  SweepCvResult result;
  TrainOptions train_options;
  train_options.threads = options.threads;
  std::vector<double> f1n;
  std::vector<double> f1a;
  for (const auto& split : splits) {
    const FoldData fd = fold_data(data, split);
    const EnsembleModel model = fit_ensemble(fd.train, config, train_options);
    std::vector<DistributionVector> scores(fd.test.n_rows());
    std::vector<Label> predicted(fd.test.n_rows());
    for (std::size_t i = 0; i < fd.test.n_rows(); ++i) {
      scores[i] = model.predict_proba(fd.test.row(i));
      predicted[i] = scores[i].top_label();
    }
    const ClassF1 f1 = per_class_f1(predicted, fd.test.labels());
    f1n.push_back(f1.normal);
    f1a.push_back(f1.anomaly);
    result.per_fold.push_back(sweep_cct(scores, fd.test.labels(), thresholds));
  }
  result.overall_f1 = {mean_var(f1n).first, mean_var(f1a).first};

  std::vector<double> column(splits.size());
  const auto stat = [&](auto get) {
    for (std::size_t f = 0; f < splits.size(); ++f) column[f] = get(f);
    return mean_var(column);
  };
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    SweepSummary s;
    s.threshold = thresholds[t];
    const auto point = [&](std::size_t f) -> const SweepPoint& {
      return result.per_fold[f][t];
    };
    std::tie(s.valid_fraction_normal_mean, s.valid_fraction_normal_var) =
        stat([&](std::size_t f) { return point(f).valid_fraction_normal; });
    std::tie(s.valid_fraction_anomaly_mean, s.valid_fraction_anomaly_var) =
        stat([&](std::size_t f) { return point(f).valid_fraction_anomaly; });
    std::tie(s.f1_normal_mean, s.f1_normal_var) = stat(
        [&](std::size_t f) { return point(f).f1_normal.value_or(kNaN); });
    std::tie(s.f1_anomaly_mean, s.f1_anomaly_var) = stat(
        [&](std::size_t f) { return point(f).f1_anomaly.value_or(kNaN); });
    for (std::size_t f = 0; f < splits.size(); ++f) {
      s.folds_with_f1_normal += point(f).f1_normal ? 1 : 0;
      s.folds_with_f1_anomaly += point(f).f1_anomaly ? 1 : 0;
    }
    result.summary.push_back(s);
  }
  return result;
}

std::vector<SweepPoint> summary_points(std::span<const SweepSummary> summary) {
  std::vector<SweepPoint> out;
  for (const auto& s : summary) {
    SweepPoint p;
    p.threshold = s.threshold;
    p.valid_fraction_normal = s.valid_fraction_normal_mean;
    p.valid_fraction_anomaly = s.valid_fraction_anomaly_mean;
    if (s.folds_with_f1_normal > 0) p.f1_normal = s.f1_normal_mean;
    if (s.folds_with_f1_anomaly > 0) p.f1_anomaly = s.f1_anomaly_mean;
    out.push_back(p);
  }
  return out;
}

}  // namespace cforest
