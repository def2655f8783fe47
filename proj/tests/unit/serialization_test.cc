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

#include <cstring>
#include <string>

#include "cascade_forest/instrumentation.h"
#include "cascade_forest/serialization.h"
#include "doctest.h"

namespace cforest {
namespace {

EnsembleModel trained(Method method, std::uint64_t seed) {
  EnsembleConfig c;
  c.method = method;
  c.n_trees = 6;
  c.max_depth = 4;
  c.seed = seed;
  return fit_ensemble(make_synthetic(300, 4, 0.25, 1.0, seed), c);
}

CascadeModel trained_cascade() {
  EnsembleConfig small;
  small.n_trees = 3;
  small.max_depth = 3;
  EnsembleConfig big = small;
  big.n_trees = 5;
  big.max_depth = std::nullopt;
  return train_cascade(make_synthetic(400, 3, 0.25, 1.0, 2),
                       CascadeConfig(small, big, 0.9, 0.95));
}

TEST_CASE("binary layout header") {
  const std::string blob = serialize_model(trained(Method::kBagging, 1));
  REQUIRE(blob.size() > 6);
  CHECK(blob.substr(0, 4) == "CFEM");
  std::uint16_t version = 0;
  std::memcpy(&version, blob.data() + 4, 2);
  CHECK(version == kFormatVersion);
  CHECK(sniff_blob(blob) == BlobKind::kEnsemble);
  const std::string cascade = serialize_cascade(trained_cascade());
  CHECK(cascade.substr(0, 4) == "CFCM");
  CHECK(sniff_blob(cascade) == BlobKind::kCascade);
  CHECK(sniff_blob("hello") == BlobKind::kUnknown);
}

TEST_CASE("ensemble round trips are bit-exact") {
  for (Method method :
       {Method::kBagging, Method::kGradientBoosting, Method::kAdaBoost}) {
    const EnsembleModel m = trained(method, 7);
    const std::string blob = serialize_model(m);
    const EnsembleModel back = deserialize_model(blob);
    CHECK(back == m);
    CHECK(serialize_model(back) == blob);
    const EnsembleModel from_json = model_from_json(model_to_json(m));
    CHECK(from_json == m);
    CHECK(serialize_model(from_json) == blob);
  }
  const EnsembleModel constant = EnsembleModel::constant(
      EnsembleConfig{}, 3, DistributionVector{0.0, 1.0});
  CHECK(deserialize_model(serialize_model(constant)) == constant);
}

TEST_CASE("cascade round trips are bit-exact") {
  const CascadeModel m = trained_cascade();
  const std::string blob = serialize_cascade(m);
  const CascadeModel back = deserialize_cascade(blob);
  CHECK(serialize_cascade(back) == blob);
  CHECK(back.config() == m.config());
  CHECK(back.training_stats() == m.training_stats());
  const CascadeModel from_json = cascade_from_json(cascade_to_json(m));
  CHECK(serialize_cascade(from_json) == blob);
}

TEST_CASE("damaged blobs are rejected") {
  const std::string blob = serialize_model(trained(Method::kBagging, 3));
  CHECK_THROWS_AS(deserialize_model(blob.substr(0, blob.size() - 1)),
                  FormatError);
  CHECK_THROWS_AS(deserialize_model(blob + "x"), FormatError);
  std::string bad_magic = blob;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_model(bad_magic), FormatError);
  std::string bad_version = blob;
  bad_version[4] = 99;
  CHECK_THROWS_AS(deserialize_model(bad_version), FormatError);
  CHECK_THROWS_AS(deserialize_cascade(blob), FormatError);
  CHECK_THROWS_AS(model_from_json("{\"trees\": 3}"), FormatError);
  CHECK_THROWS_AS(model_from_json("not json"), FormatError);
}

TEST_CASE("deserialization is counted") {
  const std::string blob = serialize_model(trained(Method::kBagging, 4));
  const IoCounters before = io_counters();
  deserialize_model(blob);
  CHECK(io_counters().model_deserializations ==
        before.model_deserializations + 1);
}

}  // namespace
}  // namespace cforest
