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

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "cascade_forest/cascade.h"
#include "cascade_forest/cli.h"
#include "cascade_forest/dataset.h"
#include "cascade_forest/evaluation.h"
#include "cascade_forest/serialization.h"
#include "json.hpp"
#include "text_input.h"

namespace cforest::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Effective settings: command-line flags override the --config file.
class Settings {
 public:
  void set_flag(const std::string& key, std::string value) {
    flags_[key] = std::move(value);
  }

  void load_config_file(const std::string& path) {
    const KeyValueFile file = parse_key_value(read_file(path));
    for (const auto& [section, values] : file) {
      if (!section.empty() && section != "experiment") {
        throw ConfigError(fmt::format("{}: unknown section [{}]", path,
                                      section));
      }
      for (const auto& [k, v] : values) file_[k] = v;
    }
  }

  std::optional<std::string> get(const std::string& key) const {
    if (const auto it = flags_.find(key); it != flags_.end()) {
      return it->second;
    }
    if (const auto it = file_.find(key); it != file_.end()) return it->second;
    return std::nullopt;
  }

  std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v || v->empty()) {
      throw ConfigError(fmt::format("--{} is required", key));
    }
    return *v;
  }

  template <typename T>
  std::optional<T> number(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    const std::string_view s = internal::trim(*v);
    if constexpr (std::is_floating_point_v<T>) {
      const auto d = internal::parse_double(s);
      if (!d || !std::isfinite(*d)) {
        throw ConfigError(fmt::format("--{}: '{}' is not a number", key, *v));
      }
      return static_cast<T>(*d);
    } else {
      T out{};
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigError(
            fmt::format("--{}: '{}' is not a non-negative integer", key, *v));
      }
      return out;
    }
  }

  bool flag(const std::string& key) const {
    const auto v = get(key);
    return v && (*v == "true" || *v == "1" || *v == "yes");
  }

 private:
  std::map<std::string, std::string> flags_;
  std::map<std::string, std::string> file_;
};

// Flags accepted by the experiment subcommands.
const std::vector<std::pair<std::string, std::string>>& experiment_flags() {
  static const std::vector<std::pair<std::string, std::string>> flags = {
      {"dataset", "Registry name, or a file path (see --adapter)"},
      {"adapter", "Raw file format for a path: csv (default), kdd, ccf, fc"},
      {"label-column", "Label column of a plain CSV (default 'label')"},
      {"positive-rule", "Anomaly rule on the label cell (default '==1')"},
      {"registry", "Registry written by prepare"},
      {"baseline", "Baseline literal C(T,D) or C(T,None)"},
      {"cascade", "Cascade literal R(C(T,D),C(T,D),cct,tct)"},
      {"method", "Learner: bagging, gbt or adaboost (default bagging)"},
      {"learning-rate", "Gradient-boosting learning rate (default 0.1)"},
      {"seed", "Random seed (mandatory)"},
      {"folds", "Cross-validation folds (default 5)"},
      {"subsample", "N, 0.25 or 25%, optionally ',stratified'"},
      {"out", "Output directory (default '.')"},
      {"threads", "Worker threads (fallback: CF_THREADS, then 1)"},
      {"repetitions", "Timed queries per latency measurement (min 1000)"},
  };
  return flags;
}

struct Context {
  Settings settings;
  std::ostream& out;
};

unsigned thread_count(const Settings& s) {
  if (auto t = s.number<unsigned>("threads")) return std::max(1u, *t);
  if (const char* env = std::getenv("CF_THREADS")) {
    unsigned v = 0;
    const std::string_view e(env);
    const auto [ptr, ec] = std::from_chars(e.data(), e.data() + e.size(), v);
    if (ec != std::errc() || ptr != e.data() + e.size()) {
      throw ConfigError(fmt::format("CF_THREADS='{}' is not an integer", env));
    }
    return std::max(1u, v);
  }
  return 1;
}

std::uint64_t require_seed(const Settings& s) {
  const auto seed = s.number<std::uint64_t>("seed");
  if (!seed) throw ConfigError("--seed is required (no clock-based default)");
  return *seed;
}

EnsembleConfig learner_base(const Settings& s) {
  EnsembleConfig c;
  c.method = parse_method(s.get("method").value_or("bagging"));
  c.learning_rate = s.number<double>("learning-rate").value_or(0.1);
  c.seed = require_seed(s);
  return c;
}

EnsembleConfig baseline_config(const Settings& s) {
  EnsembleConfig c = parse_ensemble_literal(s.require("baseline"),
                                            learner_base(s));
  c.validate();
  return c;
}

CascadeConfig cascade_config(const Settings& s) {
  const EnsembleConfig base = learner_base(s);
  return parse_cascade_literal(s.require("cascade"), base, base);
}

fs::path output_dir(const Settings& s) {
  fs::path dir = s.get("out").value_or(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DataError(fmt::format("cannot create '{}': {}", dir.string(),
                                ec.message()));
  }
  return dir;
}

fs::path default_data_dir() {
  const char* env = std::getenv("CF_DATA_DIR");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("data");
}

Dataset run_adapter(const std::string& adapter, const std::string& path,
                    const std::string& label_column,
                    const std::string& positive_rule, bool allow_drop,
                    bool deduplicate, std::ostream& out) {
  if (adapter == "kdd") {
    KddOptions options;
    options.deduplicate = deduplicate;
    return adapt_kdd(path, options);
  }
  if (adapter == "ccf") return adapt_ccf(path);
  if (adapter == "fc") return adapt_fc(path);
  if (adapter == "csv") {
    CsvSchema schema;
    schema.label_column = label_column;
    schema.positive_rule = positive_rule;
    schema.allow_drop = allow_drop;
    CsvLoad load = load_csv(path, schema);
    if (!load.rejected.empty()) {
      out << fmt::format("dropped {} malformed rows from {}\n",
                         load.rejected.size(), path);
    }
    return std::move(load.data);
  }
  throw ConfigError(fmt::format("unknown adapter '{}'", adapter));
}

json read_registry(const fs::path& path) {
  if (!fs::exists(path)) return json::object();
  try {
    return json::parse(read_file(path.string()));
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: malformed registry: {}", path.string(),
                                e.what()));
  }
}

Dataset load_dataset(const Context& ctx, std::uint64_t seed) {
  const Settings& s = ctx.settings;
  const std::string name = s.require("dataset");
  const fs::path registry_path = s.get("registry").value_or(
      (default_data_dir() / "registry.json").string());
  const json registry = read_registry(registry_path);
  Dataset data;
  if (registry.contains(name)) {
    const json& entry = registry.at(name);
    const fs::path csv =
        registry_path.parent_path() / entry.at("csv").get<std::string>();
    if (sha256_file(csv.string()) != entry.at("csv_sha256").get<std::string>()) {
      throw DataError(fmt::format(
          "cached dataset '{}' no longer matches its checksum; rerun prepare",
          csv.string()));
    }
    CsvSchema schema;
    data = load_csv(csv.string(), schema).data.with_source(fmt::format(
        "{}:{}", name,
        fs::path(entry.at("source_file").get<std::string>()).filename()
            .string()));
  } else if (fs::exists(name)) {
    data = run_adapter(s.get("adapter").value_or("csv"), name,
                       s.get("label-column").value_or("label"),
                       s.get("positive-rule").value_or("==1"),
                       s.flag("allow-drop"), true, ctx.out);
  } else {
    throw DataError(fmt::format(
        "unknown dataset '{}': not in registry '{}' and not a file", name,
        registry_path.string()));
  }
  if (const auto spec = s.get("subsample")) {
    const SubsampleSpec sub = parse_subsample(*spec);
    const std::size_t n = sub.resolve(data.n_rows());
    data = subsample(data, n, sub.stratified, seed)
               .with_source(fmt::format("{} (subsample {} of {}{})",
                                        data.source(), n, data.n_rows(),
                                        sub.stratified ? ", stratified" : ""));
  }
  ctx.out << fmt::format("dataset {}: {} rows, {} features, anomaly rate "
                         "{:.4f}%\n",
                         data.source(), data.n_rows(), data.n_features(),
                         100.0 * data.anomaly_rate());
  return data;
}

EvalOptions eval_options(const Settings& s) {
  EvalOptions options;
  options.threads = thread_count(s);
  if (auto reps = s.number<std::size_t>("repetitions")) {
    options.latency.repetitions = std::max<std::size_t>(1000, *reps);
  }
  return options;
}

std::size_t fold_count(const Settings& s) {
  return s.number<std::size_t>("folds").value_or(5);
}

void write_text(const fs::path& path, std::string_view text,
                std::ostream& out) {
  write_file(path.string(), text);
  out << "wrote " << path.string() << "\n";
}

std::vector<double> sweep_thresholds(const Settings& s) {
  if (const auto list = s.get("thresholds")) {
    std::vector<double> out;
    std::string_view rest = *list;
    while (!rest.empty()) {
      const std::size_t comma = rest.find(',');
      const auto item = internal::trim(rest.substr(0, comma));
      const auto v = internal::parse_double(item);
      if (!v) {
        throw ConfigError(fmt::format("--thresholds: '{}' is not a number",
                                      item));
      }
      out.push_back(*v);
      rest = comma == std::string_view::npos ? std::string_view()
                                             : rest.substr(comma + 1);
    }
    if (out.empty()) throw ConfigError("--thresholds is empty");
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!(out[i] >= 0.5 && out[i] <= 1.0) ||
          (i > 0 && out[i] < out[i - 1])) {
        throw ConfigError("--thresholds must ascend within [0.5, 1]");
      }
    }
    return out;
  }
  return threshold_lattice(s.number<double>("granularity").value_or(0.05));
}

std::vector<EnsembleConfig> literal_list(const std::string& text,
                                         const EnsembleConfig& base) {
  std::vector<EnsembleConfig> out;
  std::string_view rest = text;
  while (!rest.empty()) {
    const std::size_t semi = rest.find(';');
    const auto item = internal::trim(rest.substr(0, semi));
    if (!item.empty()) out.push_back(parse_ensemble_literal(item, base));
    rest = semi == std::string_view::npos ? std::string_view()
                                          : rest.substr(semi + 1);
  }
  if (out.empty()) throw ConfigError("empty candidate list");
  for (const auto& c : out) c.validate();
  return out;
}

json stats_json(const RoutingStats& s) {
  const auto num = [](double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
  };
  return {{"n_train", s.n_train},
          {"fg1_rows", s.fg1_rows},
          {"fg2_rows", s.fg2_rows},
          {"fg1_train_fraction", s.fg1_train_fraction},
          {"fg2_train_fraction", s.fg2_train_fraction},
          {"expert_train_fraction", s.expert_fraction()},
          {"fg1_ratio", num(s.fg1_ratio)},
          {"fg2_ratio", num(s.fg2_ratio)},
          {"duplicated_anomaly_count", s.duplicated_anomaly_count}};
}

// ---------------------------------------------------------------------------
// Subcommands.

int cmd_prepare(Context& ctx) {
  const Settings& s = ctx.settings;
  const std::string manifest_path = s.require("manifest");
  if (!fs::exists(manifest_path)) {
    throw DataError(fmt::format("manifest '{}' not found", manifest_path));
  }
  const KeyValueFile manifest = parse_key_value(read_file(manifest_path));
  const fs::path out_dir =
      s.get("out") ? output_dir(s) : default_data_dir();
  fs::create_directories(out_dir);
  const fs::path registry_path = out_dir / "registry.json";
  json registry = read_registry(registry_path);
  const fs::path manifest_dir = fs::path(manifest_path).parent_path();

  for (const auto& [name, entry] : manifest) {
    if (name.empty()) {
      if (!entry.empty()) {
        throw ConfigError("manifest keys must sit under a [dataset] section");
      }
      continue;
    }
    const auto field = [&](const char* key) -> std::optional<std::string> {
      const auto it = entry.find(key);
      if (it == entry.end()) return std::nullopt;
      return it->second;
    };
    const auto path_text = field("path");
    if (!path_text) throw ConfigError(fmt::format("[{}] lacks path", name));
    fs::path raw = *path_text;
    if (raw.is_relative()) raw = manifest_dir / raw;
    if (!fs::exists(raw)) {
      throw DataError(fmt::format("[{}] file '{}' is missing", name,
                                  raw.string()));
    }
    const std::string actual = sha256_file(raw.string());
    const auto expected = field("sha256");
    if (!expected) {
      throw ConfigError(fmt::format(
          "[{}] lacks sha256; the file currently hashes to {}", name, actual));
    }
    if (*expected != actual) {
      throw DataError(fmt::format(
          "[{}] checksum mismatch for '{}': expected {}, got {}", name,
          raw.string(), *expected, actual));
    }
    const std::string adapter = field("adapter").value_or(name);
    const std::string csv_name = name + ".csv";
    const fs::path csv = out_dir / csv_name;

    if (registry.contains(name) &&
        registry[name].value("source_sha256", "") == actual &&
        registry[name].value("adapter", "") == adapter && fs::exists(csv) &&
        sha256_file(csv.string()) == registry[name].value("csv_sha256", "")) {
      const json& e = registry[name];
      ctx.out << fmt::format(
          "{}: cached, {} rows, anomaly rate {:.4f}%\n", name,
          e.at("rows").get<std::size_t>(),
          100.0 * e.at("anomaly_rate").get<double>());
      continue;
    }

    const bool dedup = field("deduplicate").value_or("true") != "false";
    const Dataset data = run_adapter(
        adapter, raw.string(), field("label_column").value_or("label"),
        field("positive_rule").value_or("==1"),
        field("allow_drop").value_or("false") == "true", dedup, ctx.out);
    write_csv(data, csv.string());
    json e;
    e["source_file"] = raw.string();
    e["source_sha256"] = actual;
    e["adapter"] = adapter;
    e["csv"] = csv_name;
    e["csv_sha256"] = sha256_file(csv.string());
    e["rows"] = data.n_rows();
    e["features"] = data.n_features();
    e["anomalies"] = data.count(Label::kAnomaly);
    e["anomaly_rate"] = data.anomaly_rate();
    const DatasetSpec* spec = adapter == "kdd"   ? &kdd_spec()
                              : adapter == "ccf" ? &ccf_spec()
                              : adapter == "fc"  ? &fc_spec()
                                                 : nullptr;
    std::string expectation;
    if (spec != nullptr) {
      const double dev_pp =
          100.0 * std::abs(data.anomaly_rate() - spec->expected_anomaly_rate);
      e["expected_anomaly_rate"] = spec->expected_anomaly_rate;
      e["within_tolerance"] = dev_pp <= spec->rate_tolerance_pp;
      expectation = fmt::format(" (published {:.3f}% +- {} pp)",
                                100.0 * spec->expected_anomaly_rate,
                                spec->rate_tolerance_pp);
    }
    registry[name] = e;
    ctx.out << fmt::format("{}: {} rows, {} features, {} anomalies, anomaly "
                           "rate {:.4f}%{}\n",
                           name, data.n_rows(), data.n_features(),
                           data.count(Label::kAnomaly),
                           100.0 * data.anomaly_rate(), expectation);
  }
  write_file(registry_path.string(), registry.dump(2) + "\n");
  ctx.out << "registry " << registry_path.string() << "\n";
  return kExitOk;
}

int cmd_train(Context& ctx) {
  const Settings& s = ctx.settings;
  const std::uint64_t seed = require_seed(s);
  const bool is_cascade = s.get("cascade").has_value();
  if (is_cascade == s.get("baseline").has_value()) {
    throw ConfigError("train needs exactly one of --cascade or --baseline");
  }
  // Parse the literal before touching data so config errors exit first.
  std::optional<CascadeConfig> cascade;
  std::optional<EnsembleConfig> baseline;
  if (is_cascade) {
    cascade = cascade_config(s);
  } else {
    baseline = baseline_config(s);
  }
  const Dataset data = load_dataset(ctx, seed);
  const fs::path dir = output_dir(s);
  const unsigned threads = thread_count(s);

  json report;
  std::string blob;
  std::string mirror;
  const auto start = std::chrono::steady_clock::now();
  if (is_cascade) {
    CascadeTrainOptions options;
    options.threads = threads;
    const CascadeModel model = train_cascade(data, *cascade, options);
    report["train_seconds"] = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
    blob = serialize_cascade(model);
    mirror = cascade_to_json(model);
    const ModelSize size = model_size(model);
    report["kind"] = "cascade";
    report["config"] = cascade->literal();
    report["method"] = std::string(method_name(cascade->coarse().method));
    report["node_count"] = size.node_count;
    report["serialized_bytes"] = size.serialized_bytes;
    report["routing_stats"] = stats_json(model.training_stats());
    report["expert1"] = model.expert1()
                            ? (model.expert1()->is_degenerate() ? "constant"
                                                                : "trained")
                            : "absent";
    report["expert2"] = model.expert2()
                            ? (model.expert2()->is_degenerate() ? "constant"
                                                                : "trained")
                            : "absent";
  } else {
    TrainOptions options;
    options.threads = threads;
    const EnsembleModel model = fit_ensemble(data, *baseline, options);
    report["train_seconds"] = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
    blob = serialize_model(model);
    mirror = model_to_json(model);
    const ModelSize size = model_size(model);
    report["kind"] = "baseline";
    report["config"] = baseline->literal();
    report["method"] = std::string(method_name(baseline->method));
    report["node_count"] = size.node_count;
    report["serialized_bytes"] = size.serialized_bytes;
    report["effective_trees"] = model.effective_trees();
    report["degenerate"] = model.is_degenerate();
  }
  report["seed"] = seed;
  report["dataset"] = data.source();
  report["n_rows"] = data.n_rows();
  report["model_sha256"] = sha256_hex(blob);
  write_text(dir / "model.bin", blob, ctx.out);
  write_text(dir / "model.json", mirror, ctx.out);
  write_text(dir / "train_report.json", report.dump(2) + "\n", ctx.out);
  ctx.out << fmt::format("trained {} in {:.3f} s, {} nodes\n",
                         report["config"].get<std::string>(),
                         report["train_seconds"].get<double>(),
                         report["node_count"].get<std::size_t>());
  return kExitOk;
}

int cmd_eval(Context& ctx) {
  const Settings& s = ctx.settings;
  const std::uint64_t seed = require_seed(s);
  EvalReport report;
  if (const auto model_path = s.get("model")) {
    const std::string bytes = read_file(*model_path);
    const Dataset data = load_dataset(ctx, seed);
    const EvalOptions options = eval_options(s);
    switch (sniff_blob(bytes)) {
      case BlobKind::kEnsemble:
        report = evaluate_model(deserialize_model(bytes), data, options);
        break;
      case BlobKind::kCascade:
        report = evaluate_model(deserialize_cascade(bytes), data, options);
        break;
      case BlobKind::kUnknown:
        throw DataError(fmt::format("'{}' is not a model file", *model_path));
    }
  } else if (s.get("cascade")) {
    const CascadeConfig config = cascade_config(s);
    const Dataset data = load_dataset(ctx, seed);
    report = evaluate_cascade_cv(data, config, fold_count(s), seed,
                                 eval_options(s));
  } else if (s.get("baseline")) {
    const EnsembleConfig config = baseline_config(s);
    const Dataset data = load_dataset(ctx, seed);
    report = evaluate_baseline_cv(data, config, fold_count(s), seed,
                                  eval_options(s));
  } else {
    throw ConfigError("eval needs --model, --cascade or --baseline");
  }
  const fs::path dir = output_dir(s);
  write_text(dir / "eval_report.json", report_to_json(report), ctx.out);
  const std::string table = reports_table(std::span(&report, 1));
  write_text(dir / "eval_report.txt", table, ctx.out);
  ctx.out << table;
  return kExitOk;
}

int cmd_sweep(Context& ctx) {
  const Settings& s = ctx.settings;
  const std::uint64_t seed = require_seed(s);
  const std::vector<double> thresholds = sweep_thresholds(s);
  const fs::path dir = output_dir(s);
  const EvalOptions options = [&] {
    EvalOptions o = eval_options(s);
    o.measure_latency = s.flag("latency");
    return o;
  }();

  if (s.get("cascade")) {
    // Cascade sweep with tct = cct = t over the thresholds.
    const CascadeConfig config = cascade_config(s);
    const Dataset data = load_dataset(ctx, seed);
    std::vector<std::pair<double, double>> pairs;
    for (const double t : thresholds) pairs.emplace_back(t, t);
    const auto reports =
        evaluate_cascade_grid_cv(data, config.coarse(), config.expert(), pairs,
                                 fold_count(s), seed, options);
    std::string csv =
        "threshold,f1_normal,f1_anomaly,expert_train_fraction,"
        "fg1_train_fraction,fg2_train_fraction,fg1_ratio,fg2_ratio,"
        "fg_test_fraction,fg1_test_fraction,fg2_test_fraction,"
        "mean_path_nodes\n";
    json rows = json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const FoldMetrics& m = reports[i].mean;
      const auto opt = [](double v) {
        return std::isfinite(v) ? fmt::format("{}", v) : std::string();
      };
      csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n",
                         thresholds[i], m.f1_normal, m.f1_anomaly,
                         m.fg_train_fraction, m.fg1_train_fraction,
                         m.fg2_train_fraction, opt(m.fg1_train_ratio),
                         opt(m.fg2_train_ratio),
                         m.fg1_test_fraction + m.fg2_test_fraction,
                         m.fg1_test_fraction, m.fg2_test_fraction,
                         m.mean_path_nodes);
      rows.push_back(json::parse(report_to_json(reports[i])));
    }
    write_text(dir / "cascade_sweep.csv", csv, ctx.out);
    write_text(dir / "cascade_sweep.json", rows.dump(2) + "\n", ctx.out);
    ctx.out << csv;
    return kExitOk;
  }

  const EnsembleConfig config = baseline_config(s);
  const Dataset data = load_dataset(ctx, seed);
  const std::size_t k = fold_count(s);
  const SweepCvResult result =
      sweep_cct_cv(data, config, thresholds, k, seed, options);
  json summary;
  summary["config"] = config.literal();
  summary["method"] = std::string(method_name(config.method));
  summary["folds"] = k;
  summary["seed"] = seed;
  summary["dataset"] = data.source();
  summary["overall_f1"] = {{"normal", result.overall_f1.normal},
                           {"anomaly", result.overall_f1.anomaly}};
  if (const auto reference = s.get("reference")) {
    const EnsembleConfig ref =
        parse_ensemble_literal(*reference, learner_base(s));
    EvalOptions ref_options = options;
    ref_options.measure_latency = false;
    const EvalReport ref_report =
        evaluate_baseline_cv(data, ref, k, seed, ref_options);
    const ClassPair base{ref_report.mean.f1_normal,
                         ref_report.mean.f1_anomaly};
    const auto points = summary_points(result.summary);
    const auto lowest = find_lowest_beating_cct(points, base);
    summary["reference"] = {{"config", ref.literal()},
                            {"f1_normal", base.normal},
                            {"f1_anomaly", base.anomaly}};
    summary["lowest_beating_cct"] = lowest ? json(*lowest) : json(nullptr);
  }
  std::string per_fold = "fold," + sweep_to_csv({}).substr(0);
  per_fold = per_fold.substr(0, per_fold.find('\n') + 1);
  for (std::size_t f = 0; f < result.per_fold.size(); ++f) {
    const std::string body = sweep_to_csv(result.per_fold[f]);
    std::string_view rows = body;
    rows.remove_prefix(body.find('\n') + 1);
    std::size_t pos = 0;
    while (pos < rows.size()) {
      const std::size_t end = rows.find('\n', pos);
      per_fold += fmt::format("{},{}\n", f, rows.substr(pos, end - pos));
      pos = end + 1;
    }
  }
  const std::string csv = sweep_summary_to_csv(result.summary);
  write_text(dir / "sweep.csv", csv, ctx.out);
  write_text(dir / "sweep_folds.csv", per_fold, ctx.out);
  write_text(dir / "sweep.json", summary.dump(2) + "\n", ctx.out);
  ctx.out << csv;
  return kExitOk;
}

int cmd_bench(Context& ctx) {
  const Settings& s = ctx.settings;
  const std::uint64_t seed = require_seed(s);
  const EnsembleConfig baseline = baseline_config(s);
  const CascadeConfig cascade = cascade_config(s);
  const Dataset data = load_dataset(ctx, seed);
  const EvalOptions options = eval_options(s);
  const std::size_t k = fold_count(s);
  const EvalReport b = evaluate_baseline_cv(data, baseline, k, seed, options);
  const EvalReport c = evaluate_cascade_cv(data, cascade, k, seed, options);
  const BenchComparison cmp = compare_reports(b, c);
  const fs::path dir = output_dir(s);
  write_text(dir / "bench.json", bench_to_json(b, c, cmp), ctx.out);
  const std::string table = bench_table(b, c, cmp);
  write_text(dir / "bench.txt", table, ctx.out);
  ctx.out << table;
  return kExitOk;
}

int cmd_grid(Context& ctx) {
  const Settings& s = ctx.settings;
  const std::uint64_t seed = require_seed(s);
  const EnsembleConfig base = learner_base(s);
  const auto coarse = literal_list(s.require("coarse"), base);
  const auto expert = literal_list(s.require("expert"), base);
  const double granularity = s.number<double>("granularity").value_or(0.05);
  threshold_lattice(granularity);
  const Dataset data = load_dataset(ctx, seed);
  EvalOptions options = eval_options(s);
  options.measure_latency = s.flag("latency");
  const auto entries = grid_search(data, coarse, expert, granularity,
                                   fold_count(s), seed, options);
  json out = json::array();
  std::vector<EvalReport> reports;
  for (const auto& e : entries) {
    json j = json::parse(report_to_json(e.report));
    j["lattice_index"] = e.lattice_index;
    out.push_back(std::move(j));
    reports.push_back(e.report);
  }
  const fs::path dir = output_dir(s);
  write_text(dir / "grid.json", out.dump(2) + "\n", ctx.out);
  const std::string table = reports_table(reports);
  write_text(dir / "grid.txt", table, ctx.out);
  ctx.out << table;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Confidence-gated cascades of decision-tree ensembles"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  struct Bound {
    std::string value;
    CLI::Option* option = nullptr;
  };
  std::map<std::string, std::map<std::string, Bound>> bound;
  std::map<std::string, std::map<std::string, bool>> switches;
  std::string config_path;

  const auto add_flags = [&](CLI::App* sub,
                             const std::vector<std::pair<std::string,
                                                         std::string>>& flags) {
    for (const auto& [name, help] : flags) {
      Bound& b = bound[sub->get_name()][name];
      b.option = sub->add_option("--" + name, b.value, help);
    }
  };

  using Commands = std::vector<std::pair<CLI::App*, int (*)(Context&)>>;
  Commands commands;

  CLI::App* prepare =
      app.add_subcommand("prepare", "Verify, adapt and cache datasets");
  add_flags(prepare, {{"manifest", "Dataset manifest file"},
                      {"out", "Cache directory (default CF_DATA_DIR or data)"}});
  commands.emplace_back(prepare, &cmd_prepare);

  const auto experiment = [&](const char* name, const char* help,
                              int (*fn)(Context&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_flags(sub, experiment_flags());
    sub->add_option("--config", config_path, "TOML-like experiment file");
    sub->add_flag("--allow-drop", switches[name]["allow-drop"],
                  "Drop malformed CSV rows instead of failing");
    commands.emplace_back(sub, fn);
    return sub;
  };
  experiment("train", "Train a baseline or cascade model", &cmd_train);
  CLI::App* eval =
      experiment("eval", "Cross-validate a configuration or score a model",
                 &cmd_eval);
  add_flags(eval, {{"model", "Saved model to score instead of training"}});
  CLI::App* sweep = experiment(
      "sweep", "Confidence-threshold sweep (ensemble or cascade)", &cmd_sweep);
  add_flags(sweep, {{"thresholds", "Comma-separated ascending thresholds"},
                    {"granularity", "Lattice step when no list (default 0.05)"},
                    {"reference", "Baseline literal to find the beating CCT"}});
  sweep->add_flag("--latency", switches["sweep"]["latency"],
                  "Also time every configuration");
  experiment("bench", "Baseline versus cascade resource ratios", &cmd_bench);
  CLI::App* grid =
      experiment("grid", "Cross-validated (cct, tct) grid search", &cmd_grid);
  add_flags(grid, {{"coarse", "Coarse candidates, ';'-separated literals"},
                   {"expert", "Expert candidates, ';'-separated literals"},
                   {"granularity", "Threshold lattice step (default 0.05)"}});
  grid->add_flag("--latency", switches["grid"]["latency"],
                 "Also time every configuration");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    for (const auto& [sub, fn] : commands) {
      if (!sub->parsed()) continue;
      Context ctx{Settings{}, out};
      if (!config_path.empty()) ctx.settings.load_config_file(config_path);
      for (auto& [name, b] : bound[sub->get_name()]) {
        if (b.option->count() > 0) ctx.settings.set_flag(name, b.value);
      }
      for (const auto& [name, on] : switches[sub->get_name()]) {
        if (on) ctx.settings.set_flag(name, "true");
      }
      return fn(ctx);
    }
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace cforest::cli
