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

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include "cascade_forest/dataset.h"
#include "cascade_forest/ensemble.h"
#include "doctest.h"
#include "support/fixtures.h"

namespace cforest {
namespace {

CsvLoad parse(const std::string& text, CsvSchema schema = {}) {
  std::istringstream in(text);
  return read_csv(in, schema, "toy.csv");
}

TEST_CASE("toy csv with a text label rule") {
  CsvSchema schema;
  schema.label_column = "y";
  schema.positive_rule = "y==\"bad\"";
  const CsvLoad load = parse("a,y,b\n1,ok,2\n3,bad,4\n5,ok,6\n", schema);
  const Dataset& d = load.data;
  REQUIRE(d.n_rows() == 3);
  CHECK(d.n_features() == 2);
  CHECK(d.label(0) == Label::kNormal);
  CHECK(d.label(1) == Label::kAnomaly);
  CHECK(d.label(2) == Label::kNormal);
  CHECK(d.value(1, 0) == 3.0);
  CHECK(d.value(1, 1) == 4.0);
  CHECK(d.feature_names() == std::vector<std::string>{"a", "b"});
  CHECK(d.row_id(2) == 2);
}

TEST_CASE("label rules") {
  CHECK(LabelRule::parse("==1").matches("1.0"));
  CHECK(!LabelRule::parse("==1").matches("0"));
  CHECK(LabelRule::parse("label!=\"normal.\"").matches("smurf."));
  CHECK(!LabelRule::parse("label!=\"normal.\"").matches("normal."));
  CHECK_THROWS(LabelRule::parse("~1"));
}

TEST_CASE("strict mode names the bad row and column") {
  try {
    parse("a,b,label\n1,2,0\n3,nan,1\n");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("line 3") != std::string::npos);
    CHECK(what.find("'b'") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("a,b,label\n1,,0\n"), DataError);
  CHECK_THROWS_AS(parse("a,b,label\n1,x,0\n"), DataError);
}

TEST_CASE("allow-drop keeps the good rows and reports the rest") {
  CsvSchema schema;
  schema.allow_drop = true;
  const CsvLoad load = parse("a,label\n1,0\ninf,1\n2,1\n", schema);
  CHECK(load.data.n_rows() == 2);
  REQUIRE(load.rejected.size() == 1);
  CHECK(load.rejected[0].line == 3);
  CHECK(load.rejected[0].column == "a");
}

TEST_CASE("schema errors") {
  CHECK_THROWS_AS(parse("a,b\n1,2\n"), DataError);
  CHECK_THROWS_AS(parse("a,label\n"), DataError);
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(parse("a,label\n1,0,3\n"), DataError);
}

TEST_CASE("csv round trip is exact") {
  const Dataset d = make_synthetic(50, 4, 0.2, 1.0, 3);
  std::ostringstream out;
  write_csv(d, out);
  const Dataset back = parse(out.str()).data;
  REQUIRE(back.n_rows() == d.n_rows());
  CHECK(std::equal(d.features().begin(), d.features().end(),
                   back.features().begin()));
  CHECK(std::equal(d.labels().begin(), d.labels().end(),
                   back.labels().begin()));
}

TEST_CASE("dataset invariants") {
  CHECK_THROWS_AS(Dataset({1, NAN}, 1, {Label::kNormal, Label::kNormal}),
                  InvalidInput);
  CHECK_THROWS_AS(Dataset({1, 2}, 1, {Label::kNormal}), InvalidInput);
  CHECK_THROWS_AS(
      Dataset({1, 2}, 1, {Label::kNormal, Label::kNormal}, {4, 4}),
      InvalidInput);
}

TEST_CASE("subsample") {
  const Dataset d = make_synthetic(1000, 2, 0.1, 1.0, 1);
  const Dataset all = subsample(d, d.n_rows(), false, 5);
  CHECK(std::equal(all.row_ids().begin(), all.row_ids().end(),
                   d.row_ids().begin(), d.row_ids().end()));
  const Dataset a = subsample(d, 300, true, 9);
  const Dataset b = subsample(d, 300, true, 9);
  CHECK(std::equal(a.row_ids().begin(), a.row_ids().end(),
                   b.row_ids().begin(), b.row_ids().end()));
  const double expected = 300.0 * double(d.count(Label::kAnomaly)) / 1000.0;
  CHECK(std::abs(double(a.count(Label::kAnomaly)) - expected) <= 1.0);
  CHECK(std::is_sorted(a.row_ids().begin(), a.row_ids().end()));
  const std::set<std::uint64_t> ids(d.row_ids().begin(), d.row_ids().end());
  for (auto id : a.row_ids()) CHECK(ids.count(id) == 1);
  CHECK_THROWS_AS(subsample(d, 1001, false, 1), InvalidInput);
}

TEST_CASE("stratified subsample keeps a heavy imbalance") {
  // 581:1 normal to anomaly ratio.
  std::vector<double> x;
  std::vector<Label> y;
  for (int i = 0; i < 58200; ++i) {
    x.push_back(i);
    y.push_back(i % 582 == 0 ? Label::kAnomaly : Label::kNormal);
  }
  const Dataset d(std::move(x), 1, std::move(y));
  const Dataset s = subsample(d, d.n_rows() / 10, true, 3);
  const double ratio_full =
      double(d.count(Label::kNormal)) / double(d.count(Label::kAnomaly));
  const double ratio =
      double(s.count(Label::kNormal)) / double(s.count(Label::kAnomaly));
  CHECK(std::abs(ratio / ratio_full - 1.0) <= 0.05);
}

TEST_CASE("synthetic generator") {
  const Dataset a = make_synthetic(400, 2, 0.3, 10.0, 4);
  const Dataset b = make_synthetic(400, 2, 0.3, 10.0, 4);
  CHECK(std::equal(a.features().begin(), a.features().end(),
                   b.features().begin()));
  CHECK(std::equal(a.labels().begin(), a.labels().end(), b.labels().begin()));
  CHECK_THROWS_AS(make_synthetic(10, 2, 0.5, 1.0, 1), InvalidInput);
  CHECK_THROWS_AS(make_synthetic(10, 2, 0.1, -1.0, 1), InvalidInput);

  EnsembleConfig c;
  c.n_trees = 1;
  c.max_depth = 2;
  c.bootstrap = false;
  c.feature_subsample = 1.0;
  const EnsembleModel m = fit_ensemble(a, c);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < a.n_rows(); ++i) {
    ok += m.predict_proba(a.row(i)).top_label() == a.label(i);
  }
  CHECK(double(ok) / double(a.n_rows()) >= 0.99);
}

TEST_CASE("corpus adapters on raw-format fixtures") {
  const auto dir = fixture::temp_dir("adapters");
  fixture::write_kdd(dir / "kdd.data", 400, 0.3, 1);
  fixture::write_ccf(dir / "ccf.csv", 400, 0.05, 2);
  fixture::write_fc(dir / "fc.data", 400, 0.1, 3);

  const Dataset kdd = adapt_kdd((dir / "kdd.data").string());
  CHECK(kdd.source() == "kdd");
  // 38 numeric columns plus one-hot protocol, service and flag columns.
  CHECK(kdd.n_features() == 38 + 3 + 5 + 3);
  CHECK(kdd.count(Label::kAnomaly) > 0);

  const Dataset ccf = adapt_ccf((dir / "ccf.csv").string());
  CHECK(ccf.n_features() == 30);
  CHECK(ccf.n_rows() == 400);

  const Dataset fc = adapt_fc((dir / "fc.data").string());
  CHECK(fc.n_features() == 54);
  CHECK(fc.n_rows() < 400);
  CHECK(fc.count(Label::kAnomaly) > 0);

  std::istringstream bad_header("Time,V1,Class\n0,1,0\n");
  CHECK_THROWS_AS(adapt_ccf(bad_header), DataError);
  std::istringstream short_kdd("0,tcp,http,SF,normal.\n");
  CHECK_THROWS_AS(adapt_kdd(short_kdd), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("kdd duplicates are dropped unless asked to keep them") {
  std::ostringstream line;
  line << "0,tcp,http,SF";
  for (int c = 4; c < 41; ++c) line << ",0";
  const std::string normal = line.str() + ",normal.\n";
  const std::string attack = line.str() + ",smurf.\n";
  std::istringstream a(normal + normal + attack + attack + attack);
  const Dataset dedup = adapt_kdd(a);
  CHECK(dedup.n_rows() == 2);
  std::istringstream b(normal + normal + attack + attack + attack);
  KddOptions keep;
  keep.deduplicate = false;
  CHECK(adapt_kdd(b, keep).n_rows() == 5);
}

TEST_CASE("gzip input is read transparently") {
  const auto dir = fixture::temp_dir("gzip");
  fixture::write_fc(dir / "fc.data", 200, 0.1, 3);
  const std::string plain = [&] {
    std::ifstream in(dir / "fc.data");
    return std::string(std::istreambuf_iterator<char>(in), {});
  }();
  gzFile gz = gzopen((dir / "fc.data.gz").c_str(), "wb");
  gzwrite(gz, plain.data(), static_cast<unsigned>(plain.size()));
  gzclose(gz);
  const Dataset a = adapt_fc((dir / "fc.data").string());
  const Dataset b = adapt_fc((dir / "fc.data.gz").string());
  CHECK(std::equal(a.features().begin(), a.features().end(),
                   b.features().begin(), b.features().end()));
  std::filesystem::remove_all(dir);
}

TEST_CASE("published corpus statistics") {
  CHECK(kdd_spec().expected_anomaly_rate == doctest::Approx(0.24389));
  CHECK(ccf_spec().expected_anomaly_rate == doctest::Approx(0.00172));
  CHECK(fc_spec().expected_anomaly_rate == doctest::Approx(0.009));
  for (const DatasetSpec* s : {&kdd_spec(), &ccf_spec(), &fc_spec()}) {
    CHECK(s->expected_anomaly_rate > 0.0);
    CHECK(s->expected_anomaly_rate < 0.5);
  }
}

}  // namespace
}  // namespace cforest
