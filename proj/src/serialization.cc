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

#include "cascade_forest/serialization.h"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "cascade_forest/instrumentation.h"
#include "json.hpp"

namespace cforest {
namespace {

using nlohmann::json;

constexpr std::string_view kModelMagic = "CFEM";
constexpr std::string_view kCascadeMagic = "CFCM";

class Writer {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  std::string take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) {
      out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::string_view bytes(std::size_t n) {
    need(n);
    const auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  bool at_end() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw FormatError("model blob is truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_++]))
           << (8 * i);
    }
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

Method method_from_code(std::uint64_t code) {
  if (code > 2) throw FormatError(fmt::format("unknown method code {}", code));
  return static_cast<Method>(code);
}

NodeKind kind_from_code(std::uint64_t code) {
  if (code > 2) throw FormatError(fmt::format("unknown node kind {}", code));
  return static_cast<NodeKind>(code);
}

void write_config(Writer& w, const EnsembleConfig& c) {
  w.u8(static_cast<std::uint8_t>(c.method));
  w.u32(c.n_trees);
  w.u8(c.max_depth ? 1 : 0);
  w.u32(c.max_depth.value_or(0));
  w.f64(c.learning_rate);
  w.u8(c.feature_subsample ? 1 : 0);
  w.f64(c.feature_subsample.value_or(0.0));
  w.u32(c.min_samples_leaf);
  w.u64(c.seed);
  w.u8(c.bootstrap ? 1 : 0);
}

EnsembleConfig read_config(Reader& r) {
  EnsembleConfig c;
  c.method = method_from_code(r.u8());
  c.n_trees = r.u32();
  const bool has_depth = r.u8() != 0;
  const std::uint32_t depth = r.u32();
  if (has_depth) c.max_depth = depth;
  c.learning_rate = r.f64();
  const bool has_subsample = r.u8() != 0;
  const double subsample = r.f64();
  if (has_subsample) c.feature_subsample = subsample;
  c.min_samples_leaf = r.u32();
  c.seed = r.u64();
  c.bootstrap = r.u8() != 0;
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("stored configuration is invalid: ") +
                      e.what());
  }
  return c;
}

// Rebuilds child links of a preorder node list: every node after the root
// becomes the left child of the innermost open split, or its right child
// when the left one is already taken.
DecisionTree link_preorder(std::vector<TreeNode> nodes) {
  std::vector<std::pair<std::size_t, bool>> open;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0) {
      if (open.empty()) throw FormatError("tree has trailing nodes");
      auto& [parent, has_left] = open.back();
      if (!has_left) {
        nodes[parent].left = static_cast<std::uint32_t>(i);
        has_left = true;
      } else {
        nodes[parent].right = static_cast<std::uint32_t>(i);
        open.pop_back();
      }
    }
    if (!nodes[i].is_leaf()) open.emplace_back(i, false);
  }
  if (!open.empty()) throw FormatError("tree is truncated");
  return DecisionTree(std::move(nodes));
}

void write_model_body(Writer& w, const EnsembleModel& m) {
  w.bytes(kModelMagic);
  w.u16(kFormatVersion);
  write_config(w, m.config());
  w.u32(m.n_features());
  w.f64(m.base_score());
  const auto& constant = m.constant_distribution();
  w.u8(constant ? 1 : 0);
  w.f64(constant ? constant->normal : 0.0);
  w.f64(constant ? constant->anomaly : 0.0);
  w.u32(static_cast<std::uint32_t>(m.trees().size()));
  for (std::size_t t = 0; t < m.trees().size(); ++t) {
    w.f64(m.tree_weights()[t]);
    const auto nodes = m.trees()[t].nodes();
    w.u32(static_cast<std::uint32_t>(nodes.size()));
    for (const auto& node : nodes) {
      w.u8(static_cast<std::uint8_t>(node.kind));
      w.u32(node.feature);
      w.f64(node.threshold);
      w.f64(node.value[0]);
      w.f64(node.value[1]);
      w.u64(node.n_train);
    }
  }
}

void check_header(Reader& r, std::string_view magic) {
  if (r.remaining() < magic.size() || r.bytes(magic.size()) != magic) {
    throw FormatError(fmt::format("missing '{}' magic bytes", magic));
  }
  const std::uint16_t version = r.u16();
  if (version != kFormatVersion) {
    throw FormatError(fmt::format("unsupported format version {}", version));
  }
}

constexpr std::size_t kNodeRecordBytes = 1 + 4 + 8 + 8 + 8 + 8;

EnsembleModel read_model_body(Reader& r) {
  check_header(r, kModelMagic);
  EnsembleConfig config = read_config(r);
  const std::uint32_t n_features = r.u32();
  const double base = r.f64();
  const bool is_constant = r.u8() != 0;
  const double c0 = r.f64();
  const double c1 = r.f64();
  const std::uint32_t n_trees = r.u32();
  if (n_trees > config.n_trees) {
    throw FormatError("model holds more trees than configured");
  }
  std::vector<DecisionTree> trees;
  std::vector<double> weights;
  trees.reserve(n_trees);
  for (std::uint32_t t = 0; t < n_trees; ++t) {
    weights.push_back(r.f64());
    const std::uint32_t count = r.u32();
    if (count > r.remaining() / kNodeRecordBytes) {
      throw FormatError("node count exceeds the blob size");
    }
    std::vector<TreeNode> nodes(count);
    for (auto& node : nodes) {
      node.kind = kind_from_code(r.u8());
      node.feature = r.u32();
      node.threshold = r.f64();
      node.value[0] = r.f64();
      node.value[1] = r.f64();
      node.n_train = r.u64();
    }
    trees.push_back(link_preorder(std::move(nodes)));
  }
  std::optional<DistributionVector> constant;
  if (is_constant) constant = DistributionVector{c0, c1};
  return EnsembleModel(std::move(config), n_features, std::move(trees),
                       std::move(weights), base, constant);
}

// JSON -----------------------------------------------------------------

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN()
                     : j.get<double>();
}

json config_json(const EnsembleConfig& c) {
  json j;
  j["method"] = std::string(method_name(c.method));
  j["n_trees"] = c.n_trees;
  j["max_depth"] = c.max_depth ? json(*c.max_depth) : json(nullptr);
  j["learning_rate"] = c.learning_rate;
  j["feature_subsample"] =
      c.feature_subsample ? json(*c.feature_subsample) : json(nullptr);
  j["min_samples_leaf"] = c.min_samples_leaf;
  j["seed"] = c.seed;
  j["bootstrap"] = c.bootstrap;
  return j;
}

EnsembleConfig config_from_json(const json& j) {
  EnsembleConfig c;
  c.method = parse_method(j.at("method").get<std::string>());
  c.n_trees = j.at("n_trees").get<std::uint32_t>();
  if (!j.at("max_depth").is_null()) {
    c.max_depth = j.at("max_depth").get<std::uint32_t>();
  }
  c.learning_rate = j.at("learning_rate").get<double>();
  if (!j.at("feature_subsample").is_null()) {
    c.feature_subsample = j.at("feature_subsample").get<double>();
  }
  c.min_samples_leaf = j.at("min_samples_leaf").get<std::uint32_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.bootstrap = j.at("bootstrap").get<bool>();
  c.validate();
  return c;
}

json model_json(const EnsembleModel& m) {
  json j;
  j["format"] = std::string(kModelMagic);
  j["version"] = kFormatVersion;
  j["config"] = config_json(m.config());
  j["n_features"] = m.n_features();
  j["base_score"] = m.base_score();
  if (const auto& c = m.constant_distribution()) {
    j["constant"] = json::array({c->normal, c->anomaly});
  } else {
    j["constant"] = nullptr;
  }
  json trees = json::array();
  for (std::size_t t = 0; t < m.trees().size(); ++t) {
    json nodes = json::array();
    for (const auto& node : m.trees()[t].nodes()) {
      nodes.push_back({{"kind", static_cast<int>(node.kind)},
                       {"feature", node.feature},
                       {"threshold", node.threshold},
                       {"value", {node.value[0], node.value[1]}},
                       {"n_train", node.n_train}});
    }
    trees.push_back({{"weight", m.tree_weights()[t]}, {"nodes", nodes}});
  }
  j["trees"] = std::move(trees);
  return j;
}

EnsembleModel model_from_json_value(const json& j) {
  if (j.at("format").get<std::string>() != kModelMagic ||
      j.at("version").get<int>() != kFormatVersion) {
    throw FormatError("not a version-1 ensemble JSON document");
  }
  EnsembleConfig config = config_from_json(j.at("config"));
  std::vector<DecisionTree> trees;
  std::vector<double> weights;
  for (const auto& t : j.at("trees")) {
    weights.push_back(t.at("weight").get<double>());
    std::vector<TreeNode> nodes;
    for (const auto& n : t.at("nodes")) {
      TreeNode node;
      node.kind = kind_from_code(n.at("kind").get<std::uint64_t>());
      node.feature = n.at("feature").get<std::uint32_t>();
      node.threshold = n.at("threshold").get<double>();
      node.value = {n.at("value").at(0).get<double>(),
                    n.at("value").at(1).get<double>()};
      node.n_train = n.at("n_train").get<std::uint64_t>();
      nodes.push_back(node);
    }
    trees.push_back(link_preorder(std::move(nodes)));
  }
  std::optional<DistributionVector> constant;
  if (!j.at("constant").is_null()) {
    constant = DistributionVector{j["constant"].at(0).get<double>(),
                                  j["constant"].at(1).get<double>()};
  }
  return EnsembleModel(std::move(config),
                       j.at("n_features").get<std::uint32_t>(),
                       std::move(trees), std::move(weights),
                       j.at("base_score").get<double>(), constant);
}

template <typename Fn>
auto json_guard(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("stored configuration is invalid: ") +
                      e.what());
  }
}

void write_stats(Writer& w, const RoutingStats& s) {
  w.u64(s.n_train);
  w.u64(s.fg1_rows);
  w.u64(s.fg2_rows);
  w.f64(s.fg1_train_fraction);
  w.f64(s.fg2_train_fraction);
  w.f64(s.fg1_ratio);
  w.f64(s.fg2_ratio);
  w.u64(s.duplicated_anomaly_count);
}

RoutingStats read_stats(Reader& r) {
  RoutingStats s;
  s.n_train = r.u64();
  s.fg1_rows = r.u64();
  s.fg2_rows = r.u64();
  s.fg1_train_fraction = r.f64();
  s.fg2_train_fraction = r.f64();
  s.fg1_ratio = r.f64();
  s.fg2_ratio = r.f64();
  s.duplicated_anomaly_count = r.u64();
  return s;
}

json stats_json(const RoutingStats& s) {
  return {{"n_train", s.n_train},
          {"fg1_rows", s.fg1_rows},
          {"fg2_rows", s.fg2_rows},
          {"fg1_train_fraction", s.fg1_train_fraction},
          {"fg2_train_fraction", s.fg2_train_fraction},
          {"fg1_ratio", number_or_null(s.fg1_ratio)},
          {"fg2_ratio", number_or_null(s.fg2_ratio)},
          {"duplicated_anomaly_count", s.duplicated_anomaly_count}};
}

RoutingStats stats_from_json(const json& j) {
  RoutingStats s;
  s.n_train = j.at("n_train").get<std::uint64_t>();
  s.fg1_rows = j.at("fg1_rows").get<std::uint64_t>();
  s.fg2_rows = j.at("fg2_rows").get<std::uint64_t>();
  s.fg1_train_fraction = j.at("fg1_train_fraction").get<double>();
  s.fg2_train_fraction = j.at("fg2_train_fraction").get<double>();
  s.fg1_ratio = number_from(j.at("fg1_ratio"));
  s.fg2_ratio = number_from(j.at("fg2_ratio"));
  s.duplicated_anomaly_count =
      j.at("duplicated_anomaly_count").get<std::uint64_t>();
  return s;
}

CascadeConfig rebuild_config(EnsembleConfig coarse, EnsembleConfig expert,
                             double cct, double tct) {
  try {
    return CascadeConfig(std::move(coarse), std::move(expert), cct, tct);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("stored cascade configuration is invalid: ") +
                      e.what());
  }
}

}  // namespace

std::string serialize_model(const EnsembleModel& model) {
  Writer w;
  write_model_body(w, model);
  return w.take();
}

EnsembleModel deserialize_model(std::string_view bytes) {
  internal::count_model_deserialization();
  Reader r(bytes);
  EnsembleModel model = read_model_body(r);
  if (!r.at_end()) throw FormatError("trailing bytes after model");
  return model;
}

std::string model_to_json(const EnsembleModel& model) {
  return model_json(model).dump(1);
}

EnsembleModel model_from_json(std::string_view text) {
  internal::count_model_deserialization();
  return json_guard([&] { return model_from_json_value(json::parse(text)); });
}

ModelSize model_size(const EnsembleModel& model) {
  ModelSize size;
  for (const auto& tree : model.trees()) size.node_count += tree.node_count();
  size.serialized_bytes = serialize_model(model).size();
  return size;
}

std::string serialize_cascade(const CascadeModel& model) {
  Writer w;
  w.bytes(kCascadeMagic);
  w.u16(kFormatVersion);
  write_config(w, model.config().coarse());
  write_config(w, model.config().expert());
  w.f64(model.config().cct());
  w.f64(model.config().tct());
  write_stats(w, model.training_stats());
  const auto blob = [&w](const EnsembleModel* m) {
    if (m == nullptr) {
      w.u64(0);
      return;
    }
    const std::string bytes = serialize_model(*m);
    w.u64(bytes.size());
    w.bytes(bytes);
  };
  blob(&model.coarse());
  blob(model.expert1() ? &*model.expert1() : nullptr);
  blob(model.expert2() ? &*model.expert2() : nullptr);
  return w.take();
}

CascadeModel deserialize_cascade(std::string_view bytes) {
  internal::count_model_deserialization();
  Reader r(bytes);
  check_header(r, kCascadeMagic);
  EnsembleConfig coarse_config = read_config(r);
  EnsembleConfig expert_config = read_config(r);
  const double cct = r.f64();
  const double tct = r.f64();
  const RoutingStats stats = read_stats(r);
  const auto blob = [&r]() -> std::optional<EnsembleModel> {
    const std::uint64_t n = r.u64();
    if (n == 0) return std::nullopt;
    if (n > r.remaining()) throw FormatError("cascade blob is truncated");
    Reader inner(r.bytes(n));
    EnsembleModel m = read_model_body(inner);
    if (!inner.at_end()) throw FormatError("trailing bytes in model blob");
    return m;
  };
  auto coarse = blob();
  if (!coarse) throw FormatError("cascade lacks a coarse model");
  auto expert1 = blob();
  auto expert2 = blob();
  if (!r.at_end()) throw FormatError("trailing bytes after cascade");
  return CascadeModel(rebuild_config(std::move(coarse_config),
                                     std::move(expert_config), cct, tct),
                      std::move(*coarse), std::move(expert1),
                      std::move(expert2), stats);
}

std::string cascade_to_json(const CascadeModel& model) {
  json j;
  j["format"] = std::string(kCascadeMagic);
  j["version"] = kFormatVersion;
  j["literal"] = model.config().literal();
  j["coarse_config"] = config_json(model.config().coarse());
  j["expert_config"] = config_json(model.config().expert());
  j["cct"] = model.config().cct();
  j["tct"] = model.config().tct();
  j["training_stats"] = stats_json(model.training_stats());
  j["coarse"] = model_json(model.coarse());
  j["expert1"] = model.expert1() ? model_json(*model.expert1()) : json(nullptr);
  j["expert2"] = model.expert2() ? model_json(*model.expert2()) : json(nullptr);
  return j.dump(1);
}

CascadeModel cascade_from_json(std::string_view text) {
  internal::count_model_deserialization();
  return json_guard([&] {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != kCascadeMagic ||
        j.at("version").get<int>() != kFormatVersion) {
      throw FormatError("not a version-1 cascade JSON document");
    }
    const auto expert = [&j](const char* key) -> std::optional<EnsembleModel> {
      if (j.at(key).is_null()) return std::nullopt;
      return model_from_json_value(j.at(key));
    };
    return CascadeModel(
        rebuild_config(config_from_json(j.at("coarse_config")),
                       config_from_json(j.at("expert_config")),
                       j.at("cct").get<double>(), j.at("tct").get<double>()),
        model_from_json_value(j.at("coarse")), expert("expert1"),
        expert("expert2"), stats_from_json(j.at("training_stats")));
  });
}

ModelSize model_size(const CascadeModel& model) {
  ModelSize size = model_size(model.coarse());
  for (const auto* e : {&model.expert1(), &model.expert2()}) {
    if (*e) size.node_count += model_size(**e).node_count;
  }
  size.serialized_bytes = serialize_cascade(model).size();
  return size;
}

BlobKind sniff_blob(std::string_view bytes) {
  if (bytes.substr(0, 4) == kModelMagic) return BlobKind::kEnsemble;
  if (bytes.substr(0, 4) == kCascadeMagic) return BlobKind::kCascade;
  return BlobKind::kUnknown;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("failed reading '" + path + "'");
  return bytes;
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot create '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace cforest
