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

#ifndef CASCADE_FOREST_CLI_H_
#define CASCADE_FOREST_CLI_H_

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cforest::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitRuntime = 4;

// Minimal TOML-like file: `[section]` headers, `key = value` lines, `#`
// comments, values optionally double-quoted. Keys before any header land in
// section "". Throws ConfigError with the offending line number.
using KeyValues = std::map<std::string, std::string>;
using KeyValueFile = std::map<std::string, KeyValues>;
KeyValueFile parse_key_value(std::string_view text);

// Lowercase hex SHA-256 of a file's bytes. Throws DataError.
std::string sha256_file(const std::string& path);
std::string sha256_hex(std::string_view bytes);

// `--subsample N[,stratified]`. N is a row count, or a fraction of the rows
// when written with a decimal point or a trailing '%'.
struct SubsampleSpec {
  std::optional<std::size_t> rows;
  std::optional<double> fraction;
  bool stratified = false;

  std::size_t resolve(std::size_t n_rows) const;
};
SubsampleSpec parse_subsample(std::string_view text);

// Runs one command line (args exclude the program name). Never throws;
// errors are printed to `err` and mapped onto the exit codes above.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace cforest::cli

#endif  // CASCADE_FOREST_CLI_H_
