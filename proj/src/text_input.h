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

// Line and CSV record readers shared by the loaders. Internal header.

#ifndef CASCADE_FOREST_SRC_TEXT_INPUT_H_
#define CASCADE_FOREST_SRC_TEXT_INPUT_H_

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cforest::internal {

class LineSource {
 public:
  virtual ~LineSource() = default;
  // Next physical line without the terminator (and without a trailing CR).
  virtual bool next_line(std::string& line) = 0;
};

std::unique_ptr<LineSource> lines_from_stream(std::istream& in);

// Opens a plain text file, or a gzip stream when the path ends in ".gz".
std::unique_ptr<LineSource> open_lines(const std::string& path);

// RFC-4180 record reader: quoted fields, doubled quotes, embedded newlines.
class CsvReader {
 public:
  explicit CsvReader(LineSource& source) : source_(source) {}

  // Returns false at end of input. `first_line()` is the 1-based physical
  // line on which the returned record started.
  bool next(std::vector<std::string>& fields);
  std::size_t first_line() const { return first_line_; }

 private:
  LineSource& source_;
  std::size_t line_no_ = 0;
  std::size_t first_line_ = 0;
  std::string line_;
};

std::string_view trim(std::string_view s);

// Strict decimal parse of the whole cell (surrounding blanks allowed).
// Returns nullopt on empty or malformed text. Non-finite spellings such as
// "nan" parse successfully and must be rejected by the caller.
std::optional<double> parse_double(std::string_view cell);

}  // namespace cforest::internal

#endif  // CASCADE_FOREST_SRC_TEXT_INPUT_H_
