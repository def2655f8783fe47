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

#ifndef CASCADE_FOREST_DATASET_H_
#define CASCADE_FOREST_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cascade_forest/common.h"

namespace cforest {

// Dense numeric feature matrix with binary labels. Immutable once built:
// the constructor checks every invariant (finite values, matching lengths,
// unique row ids) and nothing mutates afterwards.
class Dataset {
 public:
  Dataset() = default;

  // `features` is row-major, n_rows x n_features. Empty `row_ids` assigns
  // 0..n-1; empty `feature_names` assigns f0..f{p-1}.
  Dataset(std::vector<double> features, std::size_t n_features,
          std::vector<Label> labels, std::vector<std::uint64_t> row_ids = {},
          std::vector<std::string> feature_names = {},
          std::string source = "memory");

  std::size_t n_rows() const { return labels_.size(); }
  std::size_t n_features() const { return n_features_; }
  bool empty() const { return labels_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * n_features_, n_features_};
  }
  double value(std::size_t i, std::size_t feature) const {
    return features_[i * n_features_ + feature];
  }
  Label label(std::size_t i) const { return labels_[i]; }
  std::uint64_t row_id(std::size_t i) const { return row_ids_[i]; }

  std::span<const double> features() const { return features_; }
  std::span<const Label> labels() const { return labels_; }
  std::span<const std::uint64_t> row_ids() const { return row_ids_; }
  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }
  const std::string& source() const { return source_; }

  std::size_t count(Label label) const;
  double anomaly_rate() const;
  bool has_both_classes() const;

  // Rows at `indices` in the given order; row ids and names carry over.
  Dataset subset(std::span<const std::size_t> indices) const;

  Dataset with_source(std::string source) const;

 private:
  std::vector<double> features_;
  std::size_t n_features_ = 0;
  std::vector<Label> labels_;
  std::vector<std::uint64_t> row_ids_;
  std::vector<std::string> feature_names_;
  std::string source_;
};

// Published statistics of one of the benchmark corpora.
struct DatasetSpec {
  std::string name;
  double expected_anomaly_rate;
  // Accepted absolute deviation of the anomaly rate, in percentage points.
  double rate_tolerance_pp;
  std::string label_rule;
};

const DatasetSpec& kdd_spec();
const DatasetSpec& ccf_spec();
const DatasetSpec& fc_spec();

// Binary label rule applied to the raw text of a label cell, e.g.
// `y=="bad"`, `Class==1`, `label!="normal."`. The column name is optional.
class LabelRule {
 public:
  static LabelRule parse(std::string_view text);

  // Numeric comparison when both sides parse as numbers, text otherwise.
  bool matches(std::string_view cell) const;

  const std::string& column() const { return column_; }
  std::string to_string() const;

 private:
  std::string column_;
  bool negate_ = false;
  std::string value_;
};

struct CsvSchema {
  std::string label_column = "label";
  std::string positive_rule = "==1";
  // Drop rows with missing or non-numeric cells instead of failing.
  bool allow_drop = false;
};

struct RowRejection {
  std::size_t line = 0;  // 1-based physical line of the record
  std::string column;
  std::string reason;
};

struct CsvLoad {
  Dataset data;
  std::vector<RowRejection> rejected;
};

// RFC-4180 CSV with a header row. Every column other than the label column
// is a numeric feature. Row ids follow file order.
CsvLoad load_csv(const std::string& path, const CsvSchema& schema);
CsvLoad read_csv(std::istream& in, const CsvSchema& schema,
                 const std::string& source);

// Canonical export: feature columns then `label` (0 Normal / 1 Anomaly).
void write_csv(const Dataset& data, std::ostream& out);
void write_csv(const Dataset& data, const std::string& path);

struct KddOptions {
  // Drop exact duplicate records (the corpus is heavily duplicated; the
  // commonly quoted 24.389% anomaly rate refers to the distinct records).
  bool deduplicate = true;
};

// Raw adapters for the public corpora. Plain or gzip-compressed files.
Dataset adapt_kdd(const std::string& path, const KddOptions& options = {});
Dataset adapt_ccf(const std::string& path);
Dataset adapt_fc(const std::string& path);

Dataset adapt_kdd(std::istream& in, const KddOptions& options = {});
Dataset adapt_ccf(std::istream& in);
Dataset adapt_fc(std::istream& in);

// Deterministic sample of n rows, original order preserved. Stratified
// sampling keeps each class count within one row of proportional.
Dataset subsample(const Dataset& data, std::size_t n, bool stratified,
                  std::uint64_t seed);

// Two unit-variance Gaussian clusters whose centroids are
// `class_separation` apart along the all-ones diagonal.
Dataset make_synthetic(std::size_t n_rows, std::size_t n_features,
                       double anomaly_rate, double class_separation,
                       std::uint64_t seed);

}  // namespace cforest

#endif  // CASCADE_FOREST_DATASET_H_
