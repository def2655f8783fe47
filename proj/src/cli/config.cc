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
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>

#include "cascade_forest/cli.h"
#include "cascade_forest/common.h"
#include "text_input.h"

namespace cforest::cli {
namespace {

std::string strip_comment(std::string_view line) {
  // '#' starts a comment unless it sits inside double quotes.
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("SHA-256 initialisation failed");
    }
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) {
      throw Error("SHA-256 update failed");
    }
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), digest.data(), &len) != 1) {
      throw Error("SHA-256 finalisation failed");
    }
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += fmt::format("{:02x}", digest[i]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

KeyValueFile parse_key_value(std::string_view text) {
  KeyValueFile out;
  std::string section;
  out[section];
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string raw = strip_comment(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    const std::string_view line = internal::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(fmt::format("line {}: malformed section header",
                                      line_no));
      }
      section = std::string(internal::trim(line.substr(1, line.size() - 2)));
      out[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    }
    std::string key(internal::trim(line.substr(0, eq)));
    std::string_view value = internal::trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(fmt::format("line {}: empty key", line_no));
    }
    for (auto& c : key) {
      if (c == '_') c = '-';
    }
    if (!value.empty() && value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') {
        throw ConfigError(fmt::format("line {}: unterminated string", line_no));
      }
      value = value.substr(1, value.size() - 2);
    }
    if (!out[section].emplace(key, std::string(value)).second) {
      throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no,
                                    key));
    }
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  Sha256 h;
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    h.update(buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) throw DataError("failed reading '" + path + "'");
  return h.hex();
}

std::size_t SubsampleSpec::resolve(std::size_t n_rows) const {
  if (rows) {
    if (*rows > n_rows) {
      throw ConfigError(fmt::format("subsample of {} rows exceeds the {} "
                                    "available",
                                    *rows, n_rows));
    }
    return *rows;
  }
  const auto n = static_cast<std::size_t>(
      std::llround(fraction.value_or(1.0) * static_cast<double>(n_rows)));
  return std::clamp<std::size_t>(n, 1, n_rows);
}

SubsampleSpec parse_subsample(std::string_view text) {
  SubsampleSpec spec;
  std::string_view head = internal::trim(text);
  const std::size_t comma = head.find(',');
  if (comma != std::string_view::npos) {
    const auto flag = internal::trim(head.substr(comma + 1));
    if (flag != "stratified") {
      throw ConfigError(fmt::format("unknown subsample flag '{}'", flag));
    }
    spec.stratified = true;
    head = internal::trim(head.substr(0, comma));
  }
  const auto fail = [&] {
    return ConfigError(fmt::format(
        "'{}' is not a subsample spec (N, 0.25 or 25%, optionally "
        "followed by ',stratified')",
        text));
  };
  if (head.empty()) throw fail();
  if (head.back() == '%') {
    const auto v = internal::parse_double(head.substr(0, head.size() - 1));
    if (!v || !(*v > 0.0 && *v <= 100.0)) throw fail();
    spec.fraction = *v / 100.0;
  } else if (head.find('.') != std::string_view::npos) {
    const auto v = internal::parse_double(head);
    if (!v || !(*v > 0.0 && *v <= 1.0)) throw fail();
    spec.fraction = *v;
  } else {
    std::size_t n = 0;
    const auto [ptr, ec] =
        std::from_chars(head.data(), head.data() + head.size(), n);
    if (ec != std::errc() || ptr != head.data() + head.size() || n == 0) {
      throw fail();
    }
    spec.rows = n;
  }
  return spec;
}

}  // namespace cforest::cli
