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

#include "cascade_forest/tree.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <utility>

#include "tree_builder.h"

namespace cforest {

DecisionTree::DecisionTree(std::vector<TreeNode> nodes)
    : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw FormatError("tree has no nodes");
  const std::size_t n = nodes_.size();
  // Walk the preorder layout: each split's left subtree must end exactly
  // where its right child begins.
  struct Frame {
    std::size_t node;
    int stage;
  };
  std::vector<Frame> stack = {{0, 0}};
  std::size_t next = 1;
  while (!stack.empty()) {
    Frame& frame = stack.back();
    const TreeNode& node = nodes_[frame.node];
    if (node.is_leaf()) {
      if (node.kind == NodeKind::kClassLeaf) {
        const double a = node.value[0];
        const double b = node.value[1];
        if (!(a >= 0.0 && b >= 0.0 && std::abs(a + b - 1.0) <= 1e-9)) {
          throw FormatError(
              fmt::format("leaf {} distribution ({}, {}) is not a probability "
                          "pair",
                          frame.node, a, b));
        }
      } else if (node.kind == NodeKind::kScoreLeaf) {
        if (!std::isfinite(node.value[0])) {
          throw FormatError(fmt::format("leaf {} score is not finite",
                                        frame.node));
        }
      } else {
        throw FormatError("unknown node kind");
      }
      stack.pop_back();
      continue;
    }
    if (frame.stage == 0) {
      if (node.feature == TreeNode::kNoFeature ||
          !std::isfinite(node.threshold)) {
        throw FormatError(fmt::format("split {} lacks a feature or a finite "
                                      "threshold",
                                      frame.node));
      }
      if (node.left != frame.node + 1 || next != frame.node + 1 ||
          node.left >= n) {
        throw FormatError(fmt::format("split {} is not in preorder layout",
                                      frame.node));
      }
      frame.stage = 1;
      ++next;
      stack.push_back({node.left, 0});
    } else if (frame.stage == 1) {
      if (node.right != next || node.right >= n) {
        throw FormatError(fmt::format("split {} right child is misplaced",
                                      frame.node));
      }
      frame.stage = 2;
      ++next;
      stack.push_back({node.right, 0});
    } else {
      stack.pop_back();
    }
  }
  if (next != n) throw FormatError("tree has unreachable nodes");
}

std::size_t DecisionTree::path_length(std::span<const double> x) const {
  std::size_t visited = 1;
  const TreeNode* node = nodes_.data();
  while (node->kind == NodeKind::kSplit) {
    node = &nodes_[x[node->feature] <= node->threshold ? node->left
                                                       : node->right];
    ++visited;
  }
  return visited;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::size_t deepest = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack = {{0, 0}};
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes_[i].is_leaf()) {
      stack.emplace_back(nodes_[i].left, d + 1);
      stack.emplace_back(nodes_[i].right, d + 1);
    }
  }
  return deepest;
}

std::optional<std::uint32_t> DecisionTree::max_feature() const {
  std::optional<std::uint32_t> out;
  for (const auto& node : nodes_) {
    if (!node.is_leaf()) {
      out = out ? std::max(*out, node.feature) : node.feature;
    }
  }
  return out;
}

std::size_t features_per_split(double fraction, std::size_t n_features) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidInput(
        fmt::format("feature_subsample must lie in (0, 1], got {}", fraction));
  }
  const auto k = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n_features) + 1e-9));
  return std::clamp<std::size_t>(k, 1, n_features);
}

namespace internal {

ColumnStore::ColumnStore(const Dataset& data)
    : n_(data.n_rows()), p_(data.n_features()) {
  if (n_ >= kNoLeaf) throw InvalidInput("too many rows for a column store");
  values_.resize(n_ * p_);
  for (std::size_t i = 0; i < n_; ++i) {
    const auto row = data.row(i);
    for (std::size_t f = 0; f < p_; ++f) values_[f * n_ + i] = row[f];
  }
  order_.resize(n_ * p_);
  for (std::size_t f = 0; f < p_; ++f) {
    std::uint32_t* order = order_.data() + f * n_;
    std::iota(order, order + n_, 0u);
    const double* column = values_.data() + f * n_;
    std::sort(order, order + n_, [column](std::uint32_t a, std::uint32_t b) {
      return column[a] < column[b] || (column[a] == column[b] && a < b);
    });
  }
}

}  // namespace internal

DecisionTree fit_tree(const Dataset& data, std::span<const double> weights,
                      const TreeParams& params, Rng& rng) {
  if (data.empty()) throw InvalidInput("fit_tree: empty dataset");
  if (weights.size() != data.n_rows()) {
    throw InvalidInput(fmt::format("fit_tree: {} weights for {} rows",
                                   weights.size(), data.n_rows()));
  }
  double total = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidInput("fit_tree: weights must be finite and >= 0");
    }
    total += w;
  }
  if (!(total > 0.0)) throw InvalidInput("fit_tree: all weights are zero");
  if (params.max_depth && *params.max_depth == 0) {
    throw InvalidInput("fit_tree: depth limit must be positive");
  }
  const internal::ColumnStore store(data);
  const internal::GiniCriterion criterion(data.labels(), weights);
  return internal::grow_tree(store, criterion, params, rng, false).tree;
}

}  // namespace cforest
