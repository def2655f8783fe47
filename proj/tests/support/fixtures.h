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

// Small files in the raw layouts of the three public corpora, with a
// learnable signal, for exercising the adapters and pipelines offline.

#ifndef CASCADE_FOREST_TESTS_FIXTURES_H_
#define CASCADE_FOREST_TESTS_FIXTURES_H_

#include <fmt/format.h>
#include <unistd.h>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "cascade_forest/random.h"

namespace cforest::fixture {

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   fmt::format("cforest-{}-{}", name, ::getpid());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// kddcup.data layout: 41 fields plus a dotted label.
inline void write_kdd(const std::filesystem::path& path, std::size_t n,
                      double anomaly_rate, std::uint64_t seed) {
  std::ofstream out(path);
  Rng rng(seed);
  const char* protocols[] = {"tcp", "udp", "icmp"};
  const char* services[] = {"http", "smtp", "ftp", "ecr_i", "private"};
  const char* flags[] = {"SF", "S0", "REJ"};
  const char* attacks[] = {"smurf.", "neptune.", "back.", "satan."};
  for (std::size_t i = 0; i < n; ++i) {
    const bool anomaly = rng.uniform01() < anomaly_rate;
    const double shift = anomaly ? 1.5 : 0.0;
    out << rng.uniform_index(5) << ','
        << protocols[anomaly ? rng.uniform_index(3) : rng.uniform_index(2)]
        << ',' << services[rng.uniform_index(5)] << ','
        << flags[anomaly ? 1 + rng.uniform_index(2) : 0];
    for (int c = 4; c < 41; ++c) {
      out << ',' << fmt::format("{:.3f}", rng.normal() + shift * (c % 3 == 0));
    }
    out << ',' << (anomaly ? attacks[rng.uniform_index(4)] : "normal.")
        << '\n';
  }
}

// creditcard.csv layout: Time, V1..V28, Amount, Class.
inline void write_ccf(const std::filesystem::path& path, std::size_t n,
                      double anomaly_rate, std::uint64_t seed) {
  std::ofstream out(path);
  Rng rng(seed);
  out << "\"Time\"";
  for (int v = 1; v <= 28; ++v) out << ",\"V" << v << '"';
  out << ",\"Amount\",\"Class\"\n";
  for (std::size_t i = 0; i < n; ++i) {
    const bool anomaly = rng.uniform01() < anomaly_rate;
    out << i;
    for (int v = 1; v <= 28; ++v) {
      const double shift = anomaly && v <= 4 ? 3.0 : 0.0;
      out << ',' << fmt::format("{:.5f}", rng.normal() + shift);
    }
    out << ',' << fmt::format("{:.2f}", 100.0 * rng.uniform01()) << ",\""
        << (anomaly ? 1 : 0) << "\"\n";
  }
}

// covtype.data layout: 54 features, Cover_Type in 1..7.
inline void write_fc(const std::filesystem::path& path, std::size_t n,
                     double anomaly_rate, std::uint64_t seed) {
  std::ofstream out(path);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    const int cls = u < anomaly_rate ? 4 : (u < 0.7 ? 2 : 1 + 2 * int(u * 3));
    const double base = cls == 4 ? 2200.0 : 2900.0;
    out << fmt::format("{:.0f}", base + 150.0 * rng.normal());
    for (int c = 1; c < 10; ++c) {
      out << ',' << fmt::format("{:.0f}", 100.0 + 30.0 * rng.normal());
    }
    const auto area = rng.uniform_index(4);
    for (std::uint64_t a = 0; a < 4; ++a) out << ',' << (a == area ? 1 : 0);
    const auto soil = cls == 4 ? rng.uniform_index(10) : rng.uniform_index(40);
    for (std::uint64_t s = 0; s < 40; ++s) out << ',' << (s == soil ? 1 : 0);
    out << ',' << cls << '\n';
  }
}

}  // namespace cforest::fixture

#endif  // CASCADE_FOREST_TESTS_FIXTURES_H_
