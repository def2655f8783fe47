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

#include "cascade_forest/cascade.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "cascade_forest/metrics.h"
#include "parallel.h"
#include "text_input.h"

namespace cforest {
namespace {

bool same_double(double a, double b) {
  return a == b || (std::isnan(a) && std::isnan(b));
}

// Splits "a,b(c,d),e" at top-level commas.
std::vector<std::string> split_top_level(std::string_view body) {
  std::vector<std::string> parts(1);
  int depth = 0;
  for (const char c : body) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth < 0) return {};
    if (c == ',' && depth == 0) {
      parts.emplace_back();
    } else {
      parts.back().push_back(c);
    }
  }
  if (depth != 0) return {};
  return parts;
}

double count_ratio(std::uint64_t normals, std::uint64_t anomalies) {
  if (anomalies == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(normals) / static_cast<double>(anomalies);
}

}  // namespace

CascadeConfig::CascadeConfig(EnsembleConfig coarse, EnsembleConfig expert,
                             double cct, double tct)
    : coarse_(std::move(coarse)),
      expert_(std::move(expert)),
      cct_(cct),
      tct_(tct) {
  coarse_.validate();
  expert_.validate();
  if (!(cct_ >= 0.5 && cct_ <= 1.0) || !(tct_ >= 0.5 && tct_ <= 1.0)) {
    throw ConfigError(fmt::format(
        "cct ({}) and tct ({}) must both lie in [0.5, 1]", cct_, tct_));
  }
  if (tct_ < cct_) {
    throw ConfigError(
        fmt::format("tct ({}) must not be below cct ({})", tct_, cct_));
  }
}

std::string CascadeConfig::literal() const {
  return fmt::format("R({},{},{},{})", coarse_.literal(), expert_.literal(),
                     cct_, tct_);
}

CascadeConfig parse_cascade_literal(std::string_view text,
                                    const EnsembleConfig& coarse_base,
                                    const EnsembleConfig& expert_base) {
  std::string compact;
  for (const char c : text) {
    if (c != ' ' && c != '\t') compact.push_back(c);
  }
  const auto fail = [&] {
    return ConfigError(fmt::format(
        "'{}' is not a cascade literal of the form R(C(T,D),C(T,D),cct,tct)",
        text));
  };
  if (compact.size() < 4 || compact.substr(0, 2) != "R(" ||
      compact.back() != ')') {
    throw fail();
  }
  const auto parts =
      split_top_level(std::string_view(compact).substr(2, compact.size() - 3));
  if (parts.size() != 4) throw fail();
  const auto cct = internal::parse_double(parts[2]);
  const auto tct = internal::parse_double(parts[3]);
  if (!cct || !tct || !std::isfinite(*cct) || !std::isfinite(*tct)) {
    throw fail();
  }
  return CascadeConfig(parse_ensemble_literal(parts[0], coarse_base),
                       parse_ensemble_literal(parts[1], expert_base), *cct,
                       *tct);
}

std::string_view path_name(Path path) {
  switch (path) {
    case Path::kShort:
      return "short";
    case Path::kExpert1:
      return "expert1";
    case Path::kExpert2:
      return "expert2";
  }
  return "unknown";
}

RouteSet route_training_instance(const DistributionVector& d, Label label,
                                 double tct) {
  if (d.confidence() >= tct) return {};
  if (label == Label::kAnomaly) return {true, true};
  return d.top_label() == Label::kNormal ? RouteSet{true, false}
                                         : RouteSet{false, true};
}

bool RoutingStats::operator==(const RoutingStats& o) const {
  return n_train == o.n_train && fg1_rows == o.fg1_rows &&
         fg2_rows == o.fg2_rows &&
         same_double(fg1_train_fraction, o.fg1_train_fraction) &&
         same_double(fg2_train_fraction, o.fg2_train_fraction) &&
         same_double(fg1_ratio, o.fg1_ratio) &&
         same_double(fg2_ratio, o.fg2_ratio) &&
         duplicated_anomaly_count == o.duplicated_anomaly_count;
}

TrainingPartition partition_training_set(const EnsembleModel& coarse,
                                         const Dataset& data, double tct) {
  if (!(tct >= 0.5 && tct <= 1.0)) {
    throw InvalidInput(fmt::format("tct {} outside [0.5, 1]", tct));
  }
  TrainingPartition out;
  std::uint64_t anomalies[2] = {0, 0};
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    const auto d = coarse.predict_proba(data.row(i));
    const Label label = data.label(i);
    const RouteSet route = route_training_instance(d, label, tct);
    if (route.expert1) {
      out.expert1.push_back(i);
      if (label == Label::kAnomaly) ++anomalies[0];
    }
    if (route.expert2) {
      out.expert2.push_back(i);
      if (label == Label::kAnomaly) ++anomalies[1];
    }
    if (route.expert1 && route.expert2) ++out.stats.duplicated_anomaly_count;
  }
  RoutingStats& s = out.stats;
  s.n_train = data.n_rows();
  s.fg1_rows = out.expert1.size();
  s.fg2_rows = out.expert2.size();
  const auto n = static_cast<double>(std::max<std::size_t>(1, data.n_rows()));
  s.fg1_train_fraction = static_cast<double>(s.fg1_rows) / n;
  s.fg2_train_fraction = static_cast<double>(s.fg2_rows) / n;
  s.fg1_ratio = count_ratio(s.fg1_rows - anomalies[0], anomalies[0]);
  s.fg2_ratio = count_ratio(s.fg2_rows - anomalies[1], anomalies[1]);
  return out;
}

// ---------------------------------------------------------------------------
// CascadeModel

CascadeModel::CascadeModel(CascadeConfig config, EnsembleModel coarse,
                           std::optional<EnsembleModel> expert1,
                           std::optional<EnsembleModel> expert2,
                           RoutingStats stats)
    : config_(std::move(config)),
      coarse_(std::move(coarse)),
      expert1_(std::move(expert1)),
      expert2_(std::move(expert2)),
      stats_(stats) {
  for (const auto* expert : {&expert1_, &expert2_}) {
    if (*expert && (*expert)->n_features() != coarse_.n_features()) {
      throw InvalidInput(fmt::format(
          "expert arity {} differs from coarse arity {}",
          (*expert)->n_features(), coarse_.n_features()));
    }
  }
}

ClassificationResult CascadeModel::finish(std::span<const double> x,
                                          const DistributionVector& d,
                                          Path path) const {
  const auto& expert = path == Path::kExpert1 ? expert1_ : expert2_;
  const DistributionVector e = expert ? expert->predict_proba(x) : d;
  return {e.top_label(), e.confidence(), path, d, e};
}

ClassificationResult CascadeModel::classify(std::span<const double> x) const {
  const DistributionVector d = coarse_.predict_proba(x);
  const Label y = d.top_label();
  if (d.confidence() >= config_.cct()) {
    return {y, d.confidence(), Path::kShort, d, std::nullopt};
  }
  return finish(x, d, y == Label::kNormal ? Path::kExpert1 : Path::kExpert2);
}

ClassificationResult CascadeModel::classify_forced(std::span<const double> x,
                                                   Path expert) const {
  if (expert == Path::kShort) {
    throw InvalidInput("classify_forced needs an expert path");
  }
  return finish(x, coarse_.predict_proba(x), expert);
}

std::size_t CascadeModel::path_length(std::span<const double> x) const {
  const DistributionVector d = coarse_.predict_proba(x);
  std::size_t visited = coarse_.path_length(x);
  if (d.confidence() >= config_.cct()) return visited;
  const auto& expert =
      d.top_label() == Label::kNormal ? expert1_ : expert2_;
  if (expert) visited += expert->path_length(x);
  return visited;
}

CascadeModel CascadeModel::with_cct(double cct) const {
  CascadeModel out = *this;
  out.config_ = config_.with_thresholds(cct, config_.tct());
  return out;
}

CascadeModel train_cascade(const Dataset& data, const CascadeConfig& config,
                           const CascadeTrainOptions& options) {
  if (data.empty()) throw InvalidInput("cannot train a cascade on no rows");
  if (!data.has_both_classes()) {
    throw InvalidInput("cascade training data must contain both classes");
  }
  TrainOptions coarse_options;
  coarse_options.threads = options.threads;
  EnsembleModel coarse = fit_ensemble(data, config.coarse(), coarse_options);
  return train_cascade_with_coarse(data, config, std::move(coarse), options);
}

CascadeModel train_cascade_with_coarse(const Dataset& data,
                                       const CascadeConfig& config,
                                       EnsembleModel coarse,
                                       const CascadeTrainOptions& options) {
  if (coarse.n_features() != data.n_features()) {
    throw InvalidInput("coarse model arity does not match the data");
  }
  const TrainingPartition partition =
      partition_training_set(coarse, data, config.tct());

  const unsigned outer = std::min(2u, std::max(1u, options.threads));
  TrainOptions inner;
  inner.threads = std::max(1u, options.threads / outer);
  const auto p = static_cast<std::uint32_t>(data.n_features());

  std::optional<EnsembleModel> experts[2];
  const std::vector<std::size_t>* sets[2] = {&partition.expert1,
                                             &partition.expert2};
  internal::parallel_for(2, outer, [&](std::size_t k) {
    const auto& rows = *sets[k];
    if (rows.empty()) return;
    const Dataset subset = data.subset(rows);
    const std::size_t anomalies = subset.count(Label::kAnomaly);
    if (anomalies == 0 || anomalies == subset.n_rows()) {
      experts[k] = EnsembleModel::constant(
          config.expert(), p,
          anomalies == 0 ? DistributionVector{1.0, 0.0}
                         : DistributionVector{0.0, 1.0});
      return;
    }
    experts[k] = fit_ensemble(subset, config.expert(), inner);
  });
  return CascadeModel(config, std::move(coarse), std::move(experts[0]),
                      std::move(experts[1]), partition.stats);
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<SweepPoint> sweep_cct(std::span<const DistributionVector> scores,
                                  std::span<const Label> labels,
                                  std::span<const double> thresholds) {
  if (scores.size() != labels.size()) {
    throw InvalidInput("sweep_cct: scores and labels differ in length");
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const double t = thresholds[i];
    if (!(t >= 0.5 && t <= 1.0)) {
      throw InvalidInput(fmt::format("threshold {} outside [0.5, 1]", t));
    }
    if (i > 0 && t < thresholds[i - 1]) {
      throw InvalidInput("sweep thresholds must be ascending");
    }
  }
  std::size_t totals[2] = {0, 0};
  for (const Label l : labels) ++totals[label_index(l)];

  std::vector<SweepPoint> out;
  out.reserve(thresholds.size());
  for (const double t : thresholds) {
    ConfusionCounts normal;
    ConfusionCounts anomaly;
    SweepPoint point;
    point.threshold = t;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!(scores[i].confidence() >= t)) continue;
      const Label predicted = scores[i].top_label();
      normal.add(predicted, labels[i], Label::kNormal);
      anomaly.add(predicted, labels[i], Label::kAnomaly);
      if (labels[i] == Label::kNormal) {
        ++point.valid_normal;
      } else {
        ++point.valid_anomaly;
      }
    }
    const auto fraction = [](std::size_t valid, std::size_t total) {
      return total == 0 ? 0.0
                        : static_cast<double>(valid) /
                              static_cast<double>(total);
    };
    point.valid_fraction_normal = fraction(point.valid_normal, totals[0]);
    point.valid_fraction_anomaly = fraction(point.valid_anomaly, totals[1]);
    if (point.valid_normal > 0) point.f1_normal = f1_score(normal);
    if (point.valid_anomaly > 0) point.f1_anomaly = f1_score(anomaly);
    out.push_back(point);
  }
  return out;
}

std::vector<SweepPoint> sweep_cct(const EnsembleModel& model,
                                  const Dataset& eval_data,
                                  std::span<const double> thresholds) {
  std::vector<DistributionVector> scores(eval_data.n_rows());
  for (std::size_t i = 0; i < eval_data.n_rows(); ++i) {
    scores[i] = model.predict_proba(eval_data.row(i));
  }
  return sweep_cct(scores, eval_data.labels(), thresholds);
}

std::optional<double> find_lowest_beating_cct(
    std::span<const SweepPoint> sweep, const ClassPair& baseline) {
  if (sweep.empty()) throw InvalidInput("find_lowest_beating_cct: no sweep");
  for (const auto& point : sweep) {
    if (point.f1_normal && point.f1_anomaly &&
        *point.f1_normal > baseline.normal &&
        *point.f1_anomaly > baseline.anomaly) {
      return point.threshold;
    }
  }
  return std::nullopt;
}

std::vector<double> threshold_lattice(double granularity) {
  if (!(granularity > 0.0) || !std::isfinite(granularity)) {
    throw ConfigError("threshold granularity must be positive");
  }
  const double steps = 0.5 / granularity;
  const double rounded = std::round(steps);
  if (rounded < 1.0 || rounded > 1e6 ||
      std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
    throw ConfigError(fmt::format(
        "granularity {} does not divide 0.5 into whole steps", granularity));
  }
  const auto n = static_cast<std::size_t>(rounded);
  std::vector<double> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    out[i] = i == n ? 1.0
                    : 0.5 + 0.5 * static_cast<double>(i) /
                                static_cast<double>(n);
  }
  return out;
}

std::vector<std::pair<double, double>> threshold_pairs(double granularity) {
  const auto lattice = threshold_lattice(granularity);
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    for (std::size_t j = i; j < lattice.size(); ++j) {
      out.emplace_back(lattice[i], lattice[j]);
    }
  }
  return out;
}

}  // namespace cforest
