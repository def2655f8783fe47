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

#include "text_input.h"

#include <zlib.h>

#include <charconv>
#include <fstream>
#include <istream>

#include "cascade_forest/common.h"

namespace cforest::internal {
namespace {

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

class StreamLines : public LineSource {
 public:
  explicit StreamLines(std::istream& in) : in_(in) {}
  bool next_line(std::string& line) override {
    if (!std::getline(in_, line)) return false;
    strip_cr(line);
    return true;
  }

 private:
  std::istream& in_;
};

class FileLines : public LineSource {
 public:
  explicit FileLines(const std::string& path) : in_(path) {
    if (!in_) throw DataError("cannot open '" + path + "'");
  }
  bool next_line(std::string& line) override {
    if (!std::getline(in_, line)) return false;
    strip_cr(line);
    return true;
  }

 private:
  std::ifstream in_;
};

class GzipLines : public LineSource {
 public:
  explicit GzipLines(const std::string& path)
      : file_(gzopen(path.c_str(), "rb")) {
    if (file_ == nullptr) throw DataError("cannot open '" + path + "'");
    gzbuffer(file_, 1 << 18);
  }
  ~GzipLines() override { gzclose(file_); }
  GzipLines(const GzipLines&) = delete;
  GzipLines& operator=(const GzipLines&) = delete;

  bool next_line(std::string& line) override {
    line.clear();
    char buf[4096];
    bool any = false;
    while (gzgets(file_, buf, sizeof(buf)) != nullptr) {
      any = true;
      std::string_view chunk(buf);
      if (!chunk.empty() && chunk.back() == '\n') {
        chunk.remove_suffix(1);
        line.append(chunk);
        strip_cr(line);
        return true;
      }
      line.append(chunk);
    }
    int err = Z_OK;
    const char* msg = gzerror(file_, &err);
    if (err != Z_OK && err != Z_STREAM_END) {
      throw DataError(std::string("gzip read error: ") + msg);
    }
    strip_cr(line);
    return any;
  }

 private:
  gzFile file_;
};

}  // namespace

std::unique_ptr<LineSource> lines_from_stream(std::istream& in) {
  return std::make_unique<StreamLines>(in);
}

std::unique_ptr<LineSource> open_lines(const std::string& path) {
  if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
    return std::make_unique<GzipLines>(path);
  }
  return std::make_unique<FileLines>(path);
}

bool CsvReader::next(std::vector<std::string>& fields) {
  fields.clear();
  if (!source_.next_line(line_)) return false;
  ++line_no_;
  first_line_ = line_no_;

  std::string field;
  bool in_quotes = false;
  bool was_quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line_.size()) {
      if (in_quotes) {
        // Quoted field continues on the next physical line.
        if (!source_.next_line(line_)) {
          throw DataError("unterminated quoted field starting on line " +
                          std::to_string(first_line_));
        }
        ++line_no_;
        field.push_back('\n');
        i = 0;
        continue;
      }
      fields.push_back(std::move(field));
      return true;
    }
    const char c = line_[i++];
    if (in_quotes) {
      if (c == '"') {
        if (i < line_.size() && line_[i] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '"' && !was_quoted && trim(field).empty()) {
      field.clear();
      in_quotes = true;
      was_quoted = true;
    } else {
      field.push_back(c);
    }
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<double> parse_double(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    return std::nullopt;
  }
  return value;
}

}  // namespace cforest::internal
