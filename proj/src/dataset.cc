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

#include "cascade_forest/dataset.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "cascade_forest/instrumentation.h"
#include "text_input.h"

namespace cforest {

Dataset::Dataset(std::vector<double> features, std::size_t n_features,
                 std::vector<Label> labels, std::vector<std::uint64_t> row_ids,
                 std::vector<std::string> feature_names, std::string source)
    : features_(std::move(features)),
      n_features_(n_features),
      labels_(std::move(labels)),
      row_ids_(std::move(row_ids)),
      feature_names_(std::move(feature_names)),
      source_(std::move(source)) {
  const std::size_t n = labels_.size();
  if (n_features_ == 0 && n > 0) {
    throw InvalidInput("dataset needs at least one feature");
  }
  if (features_.size() != n * n_features_) {
    throw InvalidInput(fmt::format(
        "feature matrix has {} values, expected {} rows x {} features",
        features_.size(), n, n_features_));
  }
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (!std::isfinite(features_[i])) {
      throw InvalidInput(fmt::format("non-finite feature value at row {}, "
                                     "feature {}",
                                     i / n_features_, i % n_features_));
    }
  }
  if (row_ids_.empty()) {
    row_ids_.resize(n);
    for (std::size_t i = 0; i < n; ++i) row_ids_[i] = i;
  } else if (row_ids_.size() != n) {
    throw InvalidInput("row_ids length does not match labels");
  } else {
    std::vector<std::uint64_t> sorted = row_ids_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw InvalidInput("row_ids are not unique");
    }
  }
  if (feature_names_.empty()) {
    feature_names_.reserve(n_features_);
    for (std::size_t f = 0; f < n_features_; ++f) {
      feature_names_.push_back("f" + std::to_string(f));
    }
  } else if (feature_names_.size() != n_features_) {
    throw InvalidInput("feature_names length does not match n_features");
  }
}

std::size_t Dataset::count(Label label) const {
  return static_cast<std::size_t>(
      std::count(labels_.begin(), labels_.end(), label));
}

double Dataset::anomaly_rate() const {
  if (labels_.empty()) return 0.0;
  return static_cast<double>(count(Label::kAnomaly)) /
         static_cast<double>(labels_.size());
}

bool Dataset::has_both_classes() const {
  const std::size_t a = count(Label::kAnomaly);
  return a > 0 && a < labels_.size();
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<double> features;
  features.reserve(indices.size() * n_features_);
  std::vector<Label> labels;
  labels.reserve(indices.size());
  std::vector<std::uint64_t> ids;
  ids.reserve(indices.size());
  for (const std::size_t i : indices) {
    if (i >= n_rows()) throw InvalidInput("subset index out of range");
    const auto r = row(i);
    features.insert(features.end(), r.begin(), r.end());
    labels.push_back(labels_[i]);
    ids.push_back(row_ids_[i]);
  }
  Dataset out;
  out.features_ = std::move(features);
  out.n_features_ = n_features_;
  out.labels_ = std::move(labels);
  out.row_ids_ = std::move(ids);
  out.feature_names_ = feature_names_;
  out.source_ = source_;
  // Duplicate indices would duplicate row ids.
  std::vector<std::uint64_t> sorted = out.row_ids_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidInput("subset indices repeat a row");
  }
  return out;
}

Dataset Dataset::with_source(std::string source) const {
  Dataset out = *this;
  out.source_ = std::move(source);
  return out;
}

const DatasetSpec& kdd_spec() {
  static const DatasetSpec spec{"kdd", 0.24389, 0.01,
                                "label != \"normal.\" -> Anomaly"};
  return spec;
}

const DatasetSpec& ccf_spec() {
  static const DatasetSpec spec{"ccf", 0.00172, 0.005, "Class == 1 -> Anomaly"};
  return spec;
}

const DatasetSpec& fc_spec() {
  static const DatasetSpec spec{"fc", 0.009, 0.05,
                                "Cover_Type 4 -> Anomaly, 2 -> Normal"};
  return spec;
}

// ---------------------------------------------------------------------------
// Label rules

namespace {

std::string unquote(std::string_view s) {
  s = internal::trim(s);
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\''))) {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(s);
}

}  // namespace

LabelRule LabelRule::parse(std::string_view text) {
  LabelRule rule;
  std::size_t pos = text.find("==");
  if (pos != std::string_view::npos) {
    rule.negate_ = false;
  } else {
    pos = text.find("!=");
    if (pos == std::string_view::npos) {
      throw ConfigError("label rule '" + std::string(text) +
                        "' needs == or !=");
    }
    rule.negate_ = true;
  }
  rule.column_ = std::string(internal::trim(text.substr(0, pos)));
  rule.value_ = unquote(text.substr(pos + 2));
  if (rule.value_.empty()) {
    throw ConfigError("label rule '" + std::string(text) +
                      "' has an empty value");
  }
  return rule;
}

bool LabelRule::matches(std::string_view cell) const {
  const std::string value = unquote(cell);
  bool equal;
  const auto lhs = internal::parse_double(value);
  const auto rhs = internal::parse_double(value_);
  if (lhs && rhs) {
    equal = *lhs == *rhs;
  } else {
    equal = value == value_;
  }
  return negate_ ? !equal : equal;
}

std::string LabelRule::to_string() const {
  return fmt::format("{}{}\"{}\"", column_, negate_ ? "!=" : "==", value_);
}

// ---------------------------------------------------------------------------
// CSV

CsvLoad read_csv(std::istream& in, const CsvSchema& schema,
                 const std::string& source) {
  internal::count_dataset_load();
  auto lines = internal::lines_from_stream(in);
  internal::CsvReader reader(*lines);
  const LabelRule rule = LabelRule::parse(schema.positive_rule);
  if (!rule.column().empty() && rule.column() != schema.label_column) {
    throw ConfigError(fmt::format("label rule refers to column '{}' but the "
                                  "label column is '{}'",
                                  rule.column(), schema.label_column));
  }

  std::vector<std::string> header;
  if (!reader.next(header)) throw DataError(source + ": missing header row");
  for (auto& h : header) h = std::string(internal::trim(h));
  const auto label_it =
      std::find(header.begin(), header.end(), schema.label_column);
  if (label_it == header.end()) {
    throw DataError(fmt::format("{}: label column '{}' not found", source,
                                schema.label_column));
  }
  const auto label_col =
      static_cast<std::size_t>(label_it - header.begin());
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_col) names.push_back(header[c]);
  }
  const std::size_t p = names.size();
  if (p == 0) throw DataError(source + ": no feature columns");

  CsvLoad result;
  std::vector<double> features;
  std::vector<Label> labels;
  std::vector<std::uint64_t> ids;
  std::vector<std::string> fields;
  std::vector<double> row(p);
  std::uint64_t record = 0;
  while (reader.next(fields)) {
    if (fields.size() == 1 && internal::trim(fields[0]).empty()) continue;
    const std::uint64_t id = record++;
    const std::size_t line = reader.first_line();
    if (fields.size() != header.size()) {
      RowRejection r{line, "",
                     fmt::format("expected {} fields, found {}",
                                 header.size(), fields.size())};
      if (!schema.allow_drop) {
        throw DataError(fmt::format("{}: line {}: {}", source, line,
                                    r.reason));
      }
      result.rejected.push_back(std::move(r));
      continue;
    }
    std::optional<RowRejection> reject;
    std::size_t f = 0;
    for (std::size_t c = 0; c < fields.size() && !reject; ++c) {
      if (c == label_col) continue;
      const auto v = internal::parse_double(fields[c]);
      if (!v) {
        reject = RowRejection{line, header[c],
                              internal::trim(fields[c]).empty()
                                  ? "missing value"
                                  : "non-numeric value '" + fields[c] + "'"};
      } else if (!std::isfinite(*v)) {
        reject = RowRejection{line, header[c],
                              "non-finite value '" + fields[c] + "'"};
      } else {
        row[f++] = *v;
      }
    }
    if (reject) {
      if (!schema.allow_drop) {
        throw DataError(fmt::format("{}: line {}, column '{}': {}", source,
                                    reject->line, reject->column,
                                    reject->reason));
      }
      result.rejected.push_back(std::move(*reject));
      continue;
    }
    features.insert(features.end(), row.begin(), row.end());
    labels.push_back(rule.matches(fields[label_col]) ? Label::kAnomaly
                                                     : Label::kNormal);
    ids.push_back(id);
  }
  if (labels.empty()) throw DataError(source + ": zero data rows");
  result.data = Dataset(std::move(features), p, std::move(labels),
                        std::move(ids), std::move(names), source);
  return result;
}

CsvLoad load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_csv(in, schema, path);
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_csv(const Dataset& data, std::ostream& out) {
  fmt::memory_buffer buf;
  for (const auto& name : data.feature_names()) {
    fmt::format_to(std::back_inserter(buf), "{},", csv_escape(name));
  }
  fmt::format_to(std::back_inserter(buf), "label\n");
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    for (const double v : data.row(i)) {
      // Shortest representation that round-trips exactly.
      fmt::format_to(std::back_inserter(buf), "{},", v);
    }
    fmt::format_to(std::back_inserter(buf), "{}\n",
                   label_index(data.label(i)));
    if (buf.size() > (1 << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(data, out);
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace cforest
