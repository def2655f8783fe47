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

// Raw-schema adapters for the KDD Cup 1999, credit-card fraud and forest
// cover-type corpora.

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <unordered_set>

#include "cascade_forest/dataset.h"
#include "cascade_forest/instrumentation.h"
#include "text_input.h"

namespace cforest {
namespace {

constexpr std::array<const char*, 41> kKddColumns = {
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
};

constexpr std::array<std::size_t, 3> kKddCategorical = {1, 2, 3};

bool is_kdd_categorical(std::size_t column) {
  return std::find(kKddCategorical.begin(), kKddCategorical.end(), column) !=
         kKddCategorical.end();
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double numeric_cell(std::string_view cell, const std::string& source,
                    std::size_t line, std::string_view column) {
  const auto v = internal::parse_double(cell);
  if (!v || !std::isfinite(*v)) {
    throw DataError(fmt::format("{}: line {}, column '{}': expected a finite "
                                "number, found '{}'",
                                source, line, column, cell));
  }
  return *v;
}

Dataset adapt_kdd_lines(internal::LineSource& lines, const KddOptions& options,
                        const std::string& source) {
  internal::count_dataset_load();
  constexpr std::size_t kFields = kKddColumns.size() + 1;
  constexpr std::size_t kNumeric = kKddColumns.size() - kKddCategorical.size();

  // Categorical values are interned on first sight, then remapped to sorted
  // one-hot positions once the full vocabulary is known.
  std::array<std::map<std::string, std::uint32_t, std::less<>>, 3> vocab;
  std::vector<double> numeric;
  std::vector<std::uint32_t> categories;
  std::vector<Label> labels;
  std::vector<std::uint64_t> ids;
  std::unordered_set<std::string> seen;

  std::string line;
  std::size_t line_no = 0;
  std::uint64_t record = 0;
  while (lines.next_line(line)) {
    ++line_no;
    if (internal::trim(line).empty()) continue;
    const auto fields = split_commas(line);
    if (line_no == 1 && internal::trim(fields[0]) == "duration") continue;
    if (fields.size() != kFields) {
      throw DataError(fmt::format("{}: line {}: KDD records have {} fields, "
                                  "found {}",
                                  source, line_no, kFields, fields.size()));
    }
    const std::uint64_t id = record++;
    if (options.deduplicate && !seen.insert(line).second) continue;

    std::size_t cat = 0;
    for (std::size_t c = 0; c < kKddColumns.size(); ++c) {
      if (is_kdd_categorical(c)) {
        auto& v = vocab[cat++];
        const std::string_view text = internal::trim(fields[c]);
        auto it = v.find(text);
        if (it == v.end()) {
          it = v.emplace(std::string(text),
                         static_cast<std::uint32_t>(v.size()))
                   .first;
        }
        categories.push_back(it->second);
      } else {
        numeric.push_back(
            numeric_cell(fields[c], source, line_no, kKddColumns[c]));
      }
    }
    std::string_view label = internal::trim(fields[kKddColumns.size()]);
    if (!label.empty() && label.back() == '.') label.remove_suffix(1);
    if (label.empty()) {
      throw DataError(
          fmt::format("{}: line {}: empty label", source, line_no));
    }
    labels.push_back(label == "normal" ? Label::kNormal : Label::kAnomaly);
    ids.push_back(id);
  }
  if (labels.empty()) throw DataError(source + ": zero data rows");

  // Insertion id -> rank in lexicographic order.
  std::array<std::vector<std::uint32_t>, 3> rank;
  std::vector<std::string> names;
  std::size_t cat = 0;
  for (std::size_t c = 0; c < kKddColumns.size(); ++c) {
    if (!is_kdd_categorical(c)) {
      names.emplace_back(kKddColumns[c]);
      continue;
    }
    auto& r = rank[cat];
    r.resize(vocab[cat].size());
    std::uint32_t k = 0;
    for (const auto& [value, id] : vocab[cat]) {
      r[id] = k++;
      names.push_back(fmt::format("{}={}", kKddColumns[c], value));
    }
    ++cat;
  }

  const std::size_t p = names.size();
  const std::size_t n = labels.size();
  std::vector<double> features(n * p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* out = features.data() + i * p;
    const double* num = numeric.data() + i * kNumeric;
    const std::uint32_t* cats = categories.data() + i * 3;
    std::size_t offset = 0;
    std::size_t num_i = 0;
    cat = 0;
    for (std::size_t c = 0; c < kKddColumns.size(); ++c) {
      if (is_kdd_categorical(c)) {
        out[offset + rank[cat][cats[cat]]] = 1.0;
        offset += vocab[cat].size();
        ++cat;
      } else {
        out[offset++] = num[num_i++];
      }
    }
  }
  return Dataset(std::move(features), p, std::move(labels), std::move(ids),
                 std::move(names), "kdd");
}

Dataset adapt_ccf_lines(internal::LineSource& lines,
                        const std::string& source) {
  internal::count_dataset_load();
  internal::CsvReader reader(lines);
  std::vector<std::string> header;
  if (!reader.next(header)) throw DataError(source + ": empty file");
  for (auto& h : header) h = std::string(internal::trim(h));
  std::vector<std::string> expected = {"Time"};
  for (int v = 1; v <= 28; ++v) expected.push_back("V" + std::to_string(v));
  expected.emplace_back("Amount");
  expected.emplace_back("Class");
  if (header != expected) {
    throw DataError(source +
                    ": header does not match the credit-card fraud schema "
                    "(Time, V1..V28, Amount, Class)");
  }
  const std::size_t p = expected.size() - 1;
  std::vector<double> features;
  std::vector<Label> labels;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (fields.size() == 1 && internal::trim(fields[0]).empty()) continue;
    if (fields.size() != expected.size()) {
      throw DataError(fmt::format("{}: line {}: expected {} fields, found {}",
                                  source, reader.first_line(),
                                  expected.size(), fields.size()));
    }
    for (std::size_t c = 0; c < p; ++c) {
      features.push_back(
          numeric_cell(fields[c], source, reader.first_line(), expected[c]));
    }
    const double cls =
        numeric_cell(fields[p], source, reader.first_line(), "Class");
    if (cls != 0.0 && cls != 1.0) {
      throw DataError(fmt::format("{}: line {}: Class must be 0 or 1",
                                  source, reader.first_line()));
    }
    labels.push_back(cls == 1.0 ? Label::kAnomaly : Label::kNormal);
  }
  if (labels.empty()) throw DataError(source + ": zero data rows");
  expected.pop_back();
  return Dataset(std::move(features), p, std::move(labels), {},
                 std::move(expected), "ccf");
}

std::vector<std::string> fc_columns() {
  std::vector<std::string> names = {
      "Elevation",
      "Aspect",
      "Slope",
      "Horizontal_Distance_To_Hydrology",
      "Vertical_Distance_To_Hydrology",
      "Horizontal_Distance_To_Roadways",
      "Hillshade_9am",
      "Hillshade_Noon",
      "Hillshade_3pm",
      "Horizontal_Distance_To_Fire_Points"};
  for (int i = 1; i <= 4; ++i) {
    names.push_back("Wilderness_Area" + std::to_string(i));
  }
  for (int i = 1; i <= 40; ++i) {
    names.push_back("Soil_Type" + std::to_string(i));
  }
  return names;
}

Dataset adapt_fc_lines(internal::LineSource& lines,
                       const std::string& source) {
  internal::count_dataset_load();
  std::vector<std::string> names = fc_columns();
  const std::size_t p = names.size();
  std::vector<double> features;
  std::vector<Label> labels;
  std::vector<std::uint64_t> ids;
  std::vector<double> row(p);
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t record = 0;
  while (lines.next_line(line)) {
    ++line_no;
    if (internal::trim(line).empty()) continue;
    const auto fields = split_commas(line);
    if (line_no == 1 && internal::trim(fields[0]) == "Elevation") continue;
    if (fields.size() != p + 1) {
      throw DataError(fmt::format("{}: line {}: cover-type records have {} "
                                  "fields, found {}",
                                  source, line_no, p + 1, fields.size()));
    }
    const std::uint64_t id = record++;
    const double cls =
        numeric_cell(fields[p], source, line_no, "Cover_Type");
    if (cls < 1.0 || cls > 7.0 || cls != std::floor(cls)) {
      throw DataError(fmt::format("{}: line {}: Cover_Type must be 1..7",
                                  source, line_no));
    }
    if (cls != 2.0 && cls != 4.0) continue;
    for (std::size_t c = 0; c < p; ++c) {
      row[c] = numeric_cell(fields[c], source, line_no, names[c]);
    }
    features.insert(features.end(), row.begin(), row.end());
    labels.push_back(cls == 4.0 ? Label::kAnomaly : Label::kNormal);
    ids.push_back(id);
  }
  if (labels.empty()) throw DataError(source + ": no rows of class 2 or 4");
  return Dataset(std::move(features), p, std::move(labels), std::move(ids),
                 std::move(names), "fc");
}

}  // namespace

Dataset adapt_kdd(const std::string& path, const KddOptions& options) {
  auto lines = internal::open_lines(path);
  return adapt_kdd_lines(*lines, options, path);
}

Dataset adapt_kdd(std::istream& in, const KddOptions& options) {
  auto lines = internal::lines_from_stream(in);
  return adapt_kdd_lines(*lines, options, "kdd");
}

Dataset adapt_ccf(const std::string& path) {
  auto lines = internal::open_lines(path);
  return adapt_ccf_lines(*lines, path);
}

Dataset adapt_ccf(std::istream& in) {
  auto lines = internal::lines_from_stream(in);
  return adapt_ccf_lines(*lines, "ccf");
}

Dataset adapt_fc(const std::string& path) {
  auto lines = internal::open_lines(path);
  return adapt_fc_lines(*lines, path);
}

Dataset adapt_fc(std::istream& in) {
  auto lines = internal::lines_from_stream(in);
  return adapt_fc_lines(*lines, "fc");
}

}  // namespace cforest
