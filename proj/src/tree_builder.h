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

// Presorted-column tree induction shared by every learner. Internal header.
//
// Each feature keeps the node's rows in value order inside one buffer; a
// node owns the same [begin, end) range in every feature's buffer, and a
// split stably partitions all buffers so both children stay sorted. Split
// search is therefore a linear scan per candidate feature and the whole
// tree costs O(rows * features * depth).

#ifndef CASCADE_FOREST_SRC_TREE_BUILDER_H_
#define CASCADE_FOREST_SRC_TREE_BUILDER_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "cascade_forest/dataset.h"
#include "cascade_forest/random.h"
#include "cascade_forest/tree.h"

namespace cforest::internal {

// Column-major copy of a dataset plus, per feature, the row order sorted by
// value (ties by row index). Built once and shared by all trees of a fit.
class ColumnStore {
 public:
  explicit ColumnStore(const Dataset& data);

  std::size_t n_rows() const { return n_; }
  std::size_t n_features() const { return p_; }
  const double* column(std::size_t f) const { return values_.data() + f * n_; }
  const std::uint32_t* sorted(std::size_t f) const {
    return order_.data() + f * n_;
  }

 private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<double> values_;
  std::vector<std::uint32_t> order_;
};

inline constexpr std::uint32_t kNoLeaf = 0xffffffffu;

struct GrownTree {
  DecisionTree tree;
  // Leaf node index reached by each store row; kNoLeaf for inactive rows.
  // Filled only when requested.
  std::vector<std::uint32_t> leaf_of_row;
};

// Weighted Gini criterion over binary labels.
class GiniCriterion {
 public:
  struct Stats {
    double w[2] = {0.0, 0.0};
  };

  GiniCriterion(std::span<const Label> labels, std::span<const double> weights)
      : labels_(labels), weights_(weights) {}

  bool active(std::uint32_t row) const { return weights_[row] > 0.0; }
  void add(Stats& s, std::uint32_t row) const {
    s.w[label_index(labels_[row])] += weights_[row];
  }
  Stats subtract(const Stats& total, const Stats& part) const {
    return {{total.w[0] - part.w[0], total.w[1] - part.w[1]}};
  }
  // Weighted impurity decrease equals score(children) - score(parent).
  double score(const Stats& s) const {
    const double w = s.w[0] + s.w[1];
    return w > 0.0 ? (s.w[0] * s.w[0] + s.w[1] * s.w[1]) / w : 0.0;
  }
  double gain_scale(const Stats& s) const { return s.w[0] + s.w[1]; }
  bool is_pure(const Stats& s) const { return s.w[0] == 0.0 || s.w[1] == 0.0; }
  TreeNode leaf(const Stats& s) const {
    TreeNode node;
    node.kind = NodeKind::kClassLeaf;
    const double w = s.w[0] + s.w[1];
    if (s.w[1] == 0.0) {
      node.value = {1.0, 0.0};
    } else if (s.w[0] == 0.0) {
      node.value = {0.0, 1.0};
    } else {
      node.value = {s.w[0] / w, s.w[1] / w};
    }
    return node;
  }

 private:
  std::span<const Label> labels_;
  std::span<const double> weights_;
};

// Least-squares criterion on per-row targets; leaves are filled in later by
// the learner (Newton step), so leaf() only records the mean target.
class VarianceCriterion {
 public:
  struct Stats {
    double n = 0.0;
    double sum = 0.0;
    double sum_sq = 0.0;
  };

  explicit VarianceCriterion(std::span<const double> targets)
      : targets_(targets) {}

  bool active(std::uint32_t) const { return true; }
  void add(Stats& s, std::uint32_t row) const {
    const double t = targets_[row];
    s.n += 1.0;
    s.sum += t;
    s.sum_sq += t * t;
  }
  Stats subtract(const Stats& total, const Stats& part) const {
    return {total.n - part.n, total.sum - part.sum,
            total.sum_sq - part.sum_sq};
  }
  double score(const Stats& s) const {
    return s.n > 0.0 ? s.sum * s.sum / s.n : 0.0;
  }
  double gain_scale(const Stats& s) const { return s.sum_sq; }
  bool is_pure(const Stats& s) const {
    return s.n < 2.0 || s.sum_sq - score(s) <= 1e-14 * s.sum_sq;
  }
  TreeNode leaf(const Stats& s) const {
    TreeNode node;
    node.kind = NodeKind::kScoreLeaf;
    node.value = {s.n > 0.0 ? s.sum / s.n : 0.0, 0.0};
    return node;
  }

 private:
  std::span<const double> targets_;
};

// Midpoint of two consecutive distinct values, guaranteed lo <= t < hi.
inline double split_threshold(double lo, double hi) {
  double mid = lo + (hi - lo) * 0.5;
  if (!std::isfinite(mid)) mid = lo * 0.5 + hi * 0.5;
  if (!(mid >= lo && mid < hi)) mid = lo;
  return mid;
}

template <typename Criterion>
GrownTree grow_tree(const ColumnStore& store, const Criterion& criterion,
                    const TreeParams& params, Rng& rng, bool want_leaf_map) {
  using Stats = typename Criterion::Stats;
  const std::size_t n = store.n_rows();
  const std::size_t p = store.n_features();
  const std::size_t msl = std::max<std::uint32_t>(1, params.min_samples_leaf);

  std::size_t m = 0;
  for (std::uint32_t r = 0; r < n; ++r) m += criterion.active(r) ? 1 : 0;
  if (m == 0) throw InvalidInput("no rows with positive weight");

  std::vector<std::uint32_t> buf(p * m);
  for (std::size_t f = 0; f < p; ++f) {
    const std::uint32_t* order = store.sorted(f);
    std::uint32_t* out = buf.data() + f * m;
    for (std::size_t i = 0; i < n; ++i) {
      if (criterion.active(order[i])) *out++ = order[i];
    }
  }

  const std::size_t per_split = features_per_split(params.feature_subsample, p);
  std::vector<std::uint32_t> feature_pool(p);
  std::vector<std::uint32_t> candidates;
  std::vector<std::uint8_t> goes_left(n, 0);
  std::vector<std::uint32_t> scratch(m);

  GrownTree out;
  if (want_leaf_map) out.leaf_of_row.assign(n, kNoLeaf);
  std::vector<TreeNode> nodes;

  struct Task {
    std::size_t begin;
    std::size_t end;
    std::size_t depth;
    std::size_t parent;
    bool is_right;
  };
  constexpr std::size_t kRoot = static_cast<std::size_t>(-1);
  std::vector<Task> stack = {{0, m, 0, kRoot, false}};

  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    const std::size_t index = nodes.size();
    if (task.parent != kRoot && task.is_right) {
      nodes[task.parent].right = static_cast<std::uint32_t>(index);
    }
    const std::size_t count = task.end - task.begin;
    const std::uint32_t* node_rows = buf.data() + task.begin;

    Stats total{};
    for (std::size_t i = 0; i < count; ++i) criterion.add(total, node_rows[i]);

    bool try_split = count >= 2 * msl && !criterion.is_pure(total);
    if (params.max_depth && task.depth >= *params.max_depth) try_split = false;

    double best_score = -std::numeric_limits<double>::infinity();
    std::uint32_t best_feature = TreeNode::kNoFeature;
    double best_threshold = 0.0;
    std::size_t best_left = 0;

    if (try_split) {
      candidates.clear();
      if (per_split >= p) {
        for (std::uint32_t f = 0; f < p; ++f) candidates.push_back(f);
      } else {
        std::iota(feature_pool.begin(), feature_pool.end(), 0u);
        for (std::size_t i = 0; i < per_split; ++i) {
          const auto j = i + static_cast<std::size_t>(
                                 rng.uniform_index(p - i));
          std::swap(feature_pool[i], feature_pool[j]);
          candidates.push_back(feature_pool[i]);
        }
        std::sort(candidates.begin(), candidates.end());
      }

      for (const std::uint32_t f : candidates) {
        const double* column = store.column(f);
        const std::uint32_t* rows = buf.data() + f * m + task.begin;
        Stats left{};
        for (std::size_t i = 0; i + 1 < count; ++i) {
          criterion.add(left, rows[i]);
          const std::size_t n_left = i + 1;
          if (n_left < msl) continue;
          if (count - n_left < msl) break;
          const double v = column[rows[i]];
          const double next = column[rows[i + 1]];
          if (!(v < next)) continue;
          const Stats right = criterion.subtract(total, left);
          const double s = criterion.score(left) + criterion.score(right);
          if (s > best_score) {
            best_score = s;
            best_feature = f;
            best_threshold = split_threshold(v, next);
            best_left = n_left;
          }
        }
      }
      const double gain = best_score - criterion.score(total);
      if (best_feature == TreeNode::kNoFeature ||
          !(gain > 1e-12 * criterion.gain_scale(total))) {
        try_split = false;
      }
    }

    if (!try_split) {
      TreeNode leaf = criterion.leaf(total);
      leaf.n_train = count;
      nodes.push_back(leaf);
      if (want_leaf_map) {
        for (std::size_t i = 0; i < count; ++i) {
          out.leaf_of_row[node_rows[i]] = static_cast<std::uint32_t>(index);
        }
      }
      continue;
    }

    TreeNode split;
    split.kind = NodeKind::kSplit;
    split.feature = best_feature;
    split.threshold = best_threshold;
    split.left = static_cast<std::uint32_t>(index + 1);
    split.value = {0.0, 0.0};
    split.n_train = count;
    nodes.push_back(split);

    const std::uint32_t* chosen = buf.data() + best_feature * m + task.begin;
    for (std::size_t i = 0; i < best_left; ++i) goes_left[chosen[i]] = 1;
    for (std::size_t f = 0; f < p; ++f) {
      if (f == best_feature) continue;
      std::uint32_t* rows = buf.data() + f * m + task.begin;
      std::size_t write = 0;
      std::size_t spill = 0;
      for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t r = rows[i];
        if (goes_left[r]) {
          rows[write++] = r;
        } else {
          scratch[spill++] = r;
        }
      }
      std::copy_n(scratch.begin(), spill, rows + write);
    }
    for (std::size_t i = 0; i < best_left; ++i) goes_left[chosen[i]] = 0;

    const std::size_t mid = task.begin + best_left;
    stack.push_back({mid, task.end, task.depth + 1, index, true});
    stack.push_back({task.begin, mid, task.depth + 1, index, false});
  }

  out.tree = DecisionTree(std::move(nodes));
  return out;
}

}  // namespace cforest::internal

#endif  // CASCADE_FOREST_SRC_TREE_BUILDER_H_
