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

// JSON, text-table and CSV renderings of evaluation results.

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <limits>

#include "cascade_forest/evaluation.h"
#include "json.hpp"

namespace cforest {
namespace {

using nlohmann::json;

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json metrics_json(const FoldMetrics& m) {
  return {{"f1_normal", num(m.f1_normal)},
          {"f1_anomaly", num(m.f1_anomaly)},
          {"node_count", num(m.node_count)},
          {"serialized_bytes", num(m.serialized_bytes)},
          {"train_seconds", num(m.train_seconds)},
          {"mean_latency_us", num(m.mean_latency_us)},
          {"p99_latency_us", num(m.p99_latency_us)},
          {"worst_case_latency_us", num(m.worst_case_latency_us)},
          {"mean_path_nodes", num(m.mean_path_nodes)},
          {"fg_train_fractions",
           {num(m.fg1_train_fraction), num(m.fg2_train_fraction)}},
          {"fg_train_fraction", num(m.fg_train_fraction)},
          {"fg_test_fractions",
           {num(m.fg1_test_fraction), num(m.fg2_test_fraction)}},
          {"fg_train_ratios", {num(m.fg1_train_ratio), num(m.fg2_train_ratio)}}};
}

json report_json(const EvalReport& r) {
  json folds = json::array();
  for (const auto& f : r.per_fold) folds.push_back(metrics_json(f));
  return {{"kind", r.kind},
          {"method", r.method},
          {"config", r.config},
          {"folds", r.folds},
          {"seed", r.seed},
          {"provenance", r.provenance},
          {"n_rows", r.n_rows},
          {"mean", metrics_json(r.mean)},
          {"variance", metrics_json(r.variance)},
          {"per_fold", std::move(folds)},
          {"machine",
           {{"cpu", r.machine.cpu},
            {"hardware_threads", r.machine.hardware_threads},
            {"compiler", r.machine.compiler}}},
          {"io_during_timing",
           {{"dataset_loads", r.io_during_timing.dataset_loads},
            {"model_deserializations",
             r.io_during_timing.model_deserializations}}}};
}

std::string cell(double v, int precision) {
  if (!std::isfinite(v)) return "nan";
  return fmt::format("{:.{}f}", v, precision);
}

std::string optional_cell(const std::optional<double>& v) {
  return v ? fmt::format("{}", *v) : std::string();
}

std::string shortest(double v) {
  return std::isfinite(v) ? fmt::format("{}", v) : std::string();
}

double ratio(double baseline, double cascade) {
  return cascade > 0.0 ? baseline / cascade
                       : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  return report_json(report).dump(2) + "\n";
}

std::string reports_table(std::span<const EvalReport> reports) {
  std::string out = fmt::format(
      "{:<9} {:<34} {:>9} {:>9} {:>9} {:>11} {:>9} {:>10} {:>10} {:>8} "
      "{:>8}\n",
      "kind", "config", "F1 norm", "F1 anom", "nodes", "bytes", "train s",
      "mean us", "worst us", "fg1 te%", "fg2 te%");
  for (const auto& r : reports) {
    const FoldMetrics& m = r.mean;
    out += fmt::format(
        "{:<9} {:<34} {:>9} {:>9} {:>9} {:>11} {:>9} {:>10} {:>10} {:>8} "
        "{:>8}\n",
        r.kind, r.config, cell(m.f1_normal, 6), cell(m.f1_anomaly, 6),
        cell(m.node_count, 0), cell(m.serialized_bytes, 0),
        cell(m.train_seconds, 3), cell(m.mean_latency_us, 3),
        cell(m.worst_case_latency_us, 3), cell(100.0 * m.fg1_test_fraction, 2),
        cell(100.0 * m.fg2_test_fraction, 2));
  }
  return out;
}

std::string sweep_to_csv(std::span<const SweepPoint> sweep) {
  std::string out =
      "threshold,valid_fraction_normal,valid_fraction_anomaly,f1_normal,"
      "f1_anomaly,valid_normal,valid_anomaly\n";
  for (const auto& p : sweep) {
    out += fmt::format("{},{},{},{},{},{},{}\n", p.threshold,
                       p.valid_fraction_normal, p.valid_fraction_anomaly,
                       optional_cell(p.f1_normal), optional_cell(p.f1_anomaly),
                       p.valid_normal, p.valid_anomaly);
  }
  return out;
}

std::string sweep_summary_to_csv(std::span<const SweepSummary> summary) {
  std::string out =
      "threshold,valid_fraction_normal_mean,valid_fraction_normal_var,"
      "valid_fraction_anomaly_mean,valid_fraction_anomaly_var,"
      "f1_normal_mean,f1_normal_var,f1_anomaly_mean,f1_anomaly_var,"
      "folds_with_f1_normal,folds_with_f1_anomaly\n";
  for (const auto& s : summary) {
    out += fmt::format(
        "{},{},{},{},{},{},{},{},{},{},{}\n", s.threshold,
        s.valid_fraction_normal_mean, s.valid_fraction_normal_var,
        s.valid_fraction_anomaly_mean, s.valid_fraction_anomaly_var,
        shortest(s.f1_normal_mean), shortest(s.f1_normal_var),
        shortest(s.f1_anomaly_mean), shortest(s.f1_anomaly_var),
        s.folds_with_f1_normal, s.folds_with_f1_anomaly);
  }
  return out;
}

BenchComparison compare_reports(const EvalReport& baseline,
                                const EvalReport& cascade) {
  const FoldMetrics& b = baseline.mean;
  const FoldMetrics& c = cascade.mean;
  BenchComparison out;
  out.size_ratio = ratio(b.node_count, c.node_count);
  out.bytes_ratio = ratio(b.serialized_bytes, c.serialized_bytes);
  out.train_ratio = ratio(b.train_seconds, c.train_seconds);
  out.latency_ratio = ratio(b.mean_latency_us, c.mean_latency_us);
  out.worst_case_latency_ratio =
      ratio(b.worst_case_latency_us, c.worst_case_latency_us);
  out.path_nodes_ratio = ratio(b.mean_path_nodes, c.mean_path_nodes);
  out.f1_normal_delta = c.f1_normal - b.f1_normal;
  out.f1_anomaly_delta = c.f1_anomaly - b.f1_anomaly;
  return out;
}

std::string bench_to_json(const EvalReport& baseline, const EvalReport& cascade,
                          const BenchComparison& cmp) {
  const json j = {{"baseline", report_json(baseline)},
                  {"cascade", report_json(cascade)},
                  {"ratios",
                   {{"size_ratio", num(cmp.size_ratio)},
                    {"bytes_ratio", num(cmp.bytes_ratio)},
                    {"train_ratio", num(cmp.train_ratio)},
                    {"latency_ratio", num(cmp.latency_ratio)},
                    {"worst_case_latency_ratio",
                     num(cmp.worst_case_latency_ratio)},
                    {"path_nodes_ratio", num(cmp.path_nodes_ratio)},
                    {"f1_normal_delta", num(cmp.f1_normal_delta)},
                    {"f1_anomaly_delta", num(cmp.f1_anomaly_delta)}}}};
  return j.dump(2) + "\n";
}

std::string bench_table(const EvalReport& baseline, const EvalReport& cascade,
                        const BenchComparison& cmp) {
  const std::array<EvalReport, 2> both = {baseline, cascade};
  std::string out = reports_table(both);
  out += fmt::format(
      "\nsize x{}  bytes x{}  train x{}  latency x{}  worst-case x{}  "
      "path-nodes x{}\nF1 delta (cascade - baseline): normal {:+.6f}  "
      "anomaly {:+.6f}\n",
      cell(cmp.size_ratio, 2), cell(cmp.bytes_ratio, 2),
      cell(cmp.train_ratio, 2), cell(cmp.latency_ratio, 2),
      cell(cmp.worst_case_latency_ratio, 2), cell(cmp.path_nodes_ratio, 2),
      cmp.f1_normal_delta, cmp.f1_anomaly_delta);
  return out;
}

}  // namespace cforest
