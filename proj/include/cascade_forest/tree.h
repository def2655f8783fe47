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

#ifndef CASCADE_FOREST_TREE_H_
#define CASCADE_FOREST_TREE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "cascade_forest/common.h"
#include "cascade_forest/dataset.h"
#include "cascade_forest/random.h"

namespace cforest {

enum class NodeKind : std::uint8_t {
  kSplit = 0,
  // Leaf holding a (Normal, Anomaly) distribution.
  kClassLeaf = 1,
  // Leaf holding a real-valued score in value[0] (gradient boosting).
  kScoreLeaf = 2,
};

struct TreeNode {
  static constexpr std::uint32_t kNoFeature =
      std::numeric_limits<std::uint32_t>::max();

  NodeKind kind = NodeKind::kClassLeaf;
  std::uint32_t feature = kNoFeature;
  // Rows with x[feature] <= threshold go left.
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::array<double, 2> value{1.0, 0.0};
  std::uint64_t n_train = 0;

  bool is_leaf() const { return kind != NodeKind::kSplit; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Binary tree stored as a flat preorder array; the root is node 0 and a
// split's left child always immediately follows it.
class DecisionTree {
 public:
  DecisionTree() = default;
  // Checks the preorder layout, child links and leaf invariants.
  explicit DecisionTree(std::vector<TreeNode> nodes);

  const TreeNode& leaf_for(std::span<const double> x) const {
    const TreeNode* node = nodes_.data();
    while (node->kind == NodeKind::kSplit) {
      node = &nodes_[x[node->feature] <= node->threshold ? node->left
                                                         : node->right];
    }
    return *node;
  }

  // Nodes visited on the way to the leaf, leaf included.
  std::size_t path_length(std::span<const double> x) const;

  std::size_t node_count() const { return nodes_.size(); }
  // Edges on the longest root-to-leaf path; a lone root has depth 0.
  std::size_t depth() const;
  std::span<const TreeNode> nodes() const { return nodes_; }
  // Largest feature index referenced by a split, or nullopt for a lone leaf.
  std::optional<std::uint32_t> max_feature() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeParams {
  // nullopt grows until the other stopping rules fire.
  std::optional<std::uint32_t> max_depth;
  std::uint32_t min_samples_leaf = 1;
  // Fraction of features drawn (without replacement) at every split.
  double feature_subsample = 1.0;
};

// Number of features examined per split for `fraction` of `n_features`.
std::size_t features_per_split(double fraction, std::size_t n_features);

// Greedy CART induction on weighted Gini impurity. Rows with zero weight are
// ignored. Split candidates are midpoints between consecutive distinct
// values; among equal gains the lowest (feature, threshold) wins. A node
// becomes a leaf when it reaches the depth limit, is pure, holds fewer than
// 2 * min_samples_leaf rows, or no split reduces impurity.
DecisionTree fit_tree(const Dataset& data, std::span<const double> weights,
                      const TreeParams& params, Rng& rng);

}  // namespace cforest

#endif  // CASCADE_FOREST_TREE_H_
