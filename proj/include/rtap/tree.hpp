// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RTAP_TREE_HPP
#define RTAP_TREE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "rtap/common.hpp"
#include "rtap/rng.hpp"

namespace rtap {

// Binary tree node. Internal nodes route x[feature] <= threshold to the
// left child; leaves have feature == -1.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t count = 0;  // training multiset size routed through this node

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct GrowParams {
  int max_depth = 12;
  int min_samples_split = 5;
  int feature_subset_size = 0;  // 0 = consider every feature at each split
  std::uint64_t rng_seed = 0;
};

namespace detail {

// Argsort of every feature column, computed once per dataset and shared
// by all trees grown on it. Ties sort by sample index so downstream
// expansion is deterministic.
class FeatureSorter {
 public:
  explicit FeatureSorter(const Matrix& x) : x_(&x) {
    order_.resize(x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
      auto& ord = order_[f];
      ord.resize(x.rows());
      std::iota(ord.begin(), ord.end(), 0u);
      std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
        double va = x(a, f), vb = x(b, f);
        if (va != vb) return va < vb;
        return a < b;
      });
    }
  }

  const Matrix& x() const { return *x_; }
  std::span<const std::uint32_t> order(std::size_t feature) const {
    return order_[feature];
  }

 private:
  const Matrix* x_;
  std::vector<std::vector<std::uint32_t>> order_;
};

// Split criterion minimizing the summed squared error of the children.
struct MseCriterion {
  std::span<const double> y;

  struct Stats {
    double m = 0.0, sum = 0.0, sumsq = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
  };

  void accumulate(Stats& s, std::uint32_t id) const {
    double v = y[id];
    s.m += 1.0;
    s.sum += v;
    s.sumsq += v * v;
    if (v < s.lo) s.lo = v;
    if (v > s.hi) s.hi = v;
  }

  static Stats subtract(const Stats& total, const Stats& left) {
    Stats r;
    r.m = total.m - left.m;
    r.sum = total.sum - left.sum;
    r.sumsq = total.sumsq - left.sumsq;
    return r;
  }

  static double cost(const Stats& s) {
    return s.m <= 0.0 ? 0.0 : s.sumsq - s.sum * s.sum / s.m;
  }

  static bool pure(const Stats& s) { return s.lo >= s.hi; }

  using LeafValue = double;
  static LeafValue leaf_value(const Stats& s) { return s.m > 0.0 ? s.sum / s.m : 0.0; }
};

constexpr std::size_t kMaxClasses = 8;

// Split criterion minimizing summed child Gini impurity mass
// (m_child * gini_child).
struct GiniCriterion {
  std::span<const int> y;
  std::size_t n_classes = 2;

  struct Stats {
    double m = 0.0;
    std::array<double, kMaxClasses> counts{};
  };

  void accumulate(Stats& s, std::uint32_t id) const {
    s.m += 1.0;
    s.counts[static_cast<std::size_t>(y[id])] += 1.0;
  }

  static Stats subtract(const Stats& total, const Stats& left) {
    Stats r;
    r.m = total.m - left.m;
    for (std::size_t c = 0; c < kMaxClasses; ++c)
      r.counts[c] = total.counts[c] - left.counts[c];
    return r;
  }

  double cost(const Stats& s) const {
    if (s.m <= 0.0) return 0.0;
    double sq = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) sq += s.counts[c] * s.counts[c];
    return s.m - sq / s.m;
  }

  bool pure(const Stats& s) const {
    for (std::size_t c = 0; c < n_classes; ++c)
      if (s.counts[c] == s.m) return true;
    return s.m == 0.0;
  }

  using LeafValue = std::array<double, kMaxClasses>;
  LeafValue leaf_value(const Stats& s) const {
    LeafValue v{};
    if (s.m > 0.0)
      for (std::size_t c = 0; c < n_classes; ++c) v[c] = s.counts[c] / s.m;
    return v;
  }
};

template <typename Criterion>
struct GrownTree {
  std::vector<TreeNode> nodes;
  std::vector<typename Criterion::LeafValue> values;  // per node
};

// Grows one tree over a sample multiset (per-sample multiplicities allow
// bootstrap resamples without materializing copies). Keeps one sorted
// sample list per feature and stably partitions all of them at each
// split, so no re-sorting happens below the root.
//
// Split selection is exhaustive over midpoints between consecutive
// distinct values of each candidate feature; ties are broken toward the
// lowest feature index, then the lowest threshold.
template <typename Criterion>
class TreeGrower {
 public:
  TreeGrower(const FeatureSorter& sorter, const Criterion& criterion,
             const GrowParams& params, std::mt19937_64 rng)
      : x_(sorter.x()), sorter_(sorter), criterion_(criterion), params_(params),
        rng_(std::move(rng)) {}

  GrownTree<Criterion> grow(std::span<const std::uint32_t> multiplicity) {
    const std::size_t cols = x_.cols();
    std::size_t m_total = 0;
    for (auto c : multiplicity) m_total += c;
    if (m_total == 0) throw std::invalid_argument("TreeGrower: empty sample multiset");

    lists_.assign(cols * m_total, 0);
    m_ = m_total;
    for (std::size_t f = 0; f < cols; ++f) {
      std::uint32_t* dst = lists_.data() + f * m_total;
      std::size_t k = 0;
      for (std::uint32_t id : sorter_.order(f))
        for (std::uint32_t rep = 0; rep < multiplicity[id]; ++rep) dst[k++] = id;
    }
    side_.assign(x_.rows(), 0);
    scratch_.resize(m_total);

    tree_ = {};
    build(0, m_total, 0);
    return std::move(tree_);
  }

 private:
  using Stats = typename Criterion::Stats;

  struct BestSplit {
    double cost = std::numeric_limits<double>::infinity();
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left_m = 0;
    bool found = false;
  };

  std::span<std::uint32_t> feature_list(std::size_t f, std::size_t begin,
                                        std::size_t end) {
    return {lists_.data() + f * m_ + begin, end - begin};
  }

  std::int32_t build(std::size_t begin, std::size_t end, int depth) {
    const std::int32_t node_id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.values.emplace_back();

    Stats total;
    for (std::uint32_t id : feature_list(0, begin, end))
      criterion_.accumulate(total, id);
    tree_.nodes[node_id].count = static_cast<std::uint32_t>(end - begin);
    tree_.values[node_id] = criterion_.leaf_value(total);

    const std::size_t m = end - begin;
    if (depth >= params_.max_depth ||
        m < static_cast<std::size_t>(params_.min_samples_split) ||
        criterion_.pure(total))
      return node_id;

    BestSplit best = find_best_split(begin, end, total);
    if (!best.found) return node_id;

    // Mark each sample's side once, then stably partition every feature
    // list so children stay sorted without re-sorting.
    for (std::uint32_t id : feature_list(best.feature, begin, end))
      side_[id] = x_(id, best.feature) <= best.threshold ? 1 : 0;
    for (std::size_t f = 0; f < x_.cols(); ++f) partition(f, begin, end);

    tree_.nodes[node_id].feature = static_cast<std::int32_t>(best.feature);
    tree_.nodes[node_id].threshold = best.threshold;
    std::int32_t left = build(begin, begin + best.left_m, depth + 1);
    std::int32_t right = build(begin + best.left_m, end, depth + 1);
    tree_.nodes[node_id].left = left;
    tree_.nodes[node_id].right = right;
    return node_id;
  }

  BestSplit find_best_split(std::size_t begin, std::size_t end, const Stats& total) {
    const std::size_t cols = x_.cols();
    std::vector<std::uint32_t> candidates;
    if (params_.feature_subset_size > 0 &&
        static_cast<std::size_t>(params_.feature_subset_size) < cols) {
      candidates = sample_without_replacement(
          static_cast<std::uint32_t>(cols),
          static_cast<std::uint32_t>(params_.feature_subset_size), rng_);
    } else {
      candidates.resize(cols);
      std::iota(candidates.begin(), candidates.end(), 0u);
    }

    BestSplit best;
    for (std::uint32_t f : candidates) {
      auto list = feature_list(f, begin, end);
      Stats left;
      for (std::size_t j = 0; j + 1 < list.size(); ++j) {
        criterion_.accumulate(left, list[j]);
        double v = x_(list[j], f);
        double next = x_(list[j + 1], f);
        if (v == next) continue;
        Stats right = Criterion::subtract(total, left);
        double cost = criterion_.cost(left) + criterion_.cost(right);
        if (cost < best.cost) {
          double threshold = v + (next - v) / 2.0;
          if (!(threshold < next)) threshold = v;  // guard midpoint rounding
          best.cost = cost;
          best.feature = f;
          best.threshold = threshold;
          best.left_m = j + 1;
          best.found = true;
        }
      }
    }
    return best;
  }

  void partition(std::size_t f, std::size_t begin, std::size_t end) {
    auto list = feature_list(f, begin, end);
    std::size_t n_left = 0, n_right = 0;
    for (std::uint32_t id : list) {
      if (side_[id])
        list[n_left++] = id;
      else
        scratch_[n_right++] = id;
    }
    std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(n_right),
              list.begin() + static_cast<std::ptrdiff_t>(n_left));
  }

  const Matrix& x_;
  const FeatureSorter& sorter_;
  Criterion criterion_;
  GrowParams params_;
  std::mt19937_64 rng_;

  std::size_t m_ = 0;
  std::vector<std::uint32_t> lists_;
  std::vector<std::uint8_t> side_;
  std::vector<std::uint32_t> scratch_;
  GrownTree<Criterion> tree_;
};

inline std::int32_t route_to_leaf(std::span<const TreeNode> nodes,
                                  std::span<const double> x) {
  std::int32_t node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return node;
}

}  // namespace detail

// CART-style regression tree; leaves predict the mean training target of
// the samples routed to them.
class RegressionTree {
 public:
  RegressionTree() = default;
  RegressionTree(std::vector<TreeNode> nodes, std::vector<double> values)
      : nodes_(std::move(nodes)), values_(std::move(values)) {}

  double predict(std::span<const double> x) const {
    return values_[static_cast<std::size_t>(detail::route_to_leaf(nodes_, x))];
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }
  bool empty() const { return nodes_.empty(); }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<double> values_;
};

// Gini-split classification tree over classes 0..n_classes-1; leaves
// carry the training class distribution.
class ClassificationTree {
 public:
  ClassificationTree() = default;
  ClassificationTree(std::vector<TreeNode> nodes, std::vector<double> dist,
                     std::size_t n_classes)
      : nodes_(std::move(nodes)), dist_(std::move(dist)), n_classes_(n_classes) {}

  std::span<const double> predict_dist(std::span<const double> x) const {
    auto leaf = static_cast<std::size_t>(detail::route_to_leaf(nodes_, x));
    return {dist_.data() + leaf * n_classes_, n_classes_};
  }

  // Positive-class share of the leaf (binary trees).
  double predict_proba(std::span<const double> x) const { return predict_dist(x)[1]; }

  // Majority class; ties go to the lowest class index.
  int predict_class(std::span<const double> x) const {
    auto dist = predict_dist(x);
    std::size_t arg = 0;
    for (std::size_t c = 1; c < dist.size(); ++c)
      if (dist[c] > dist[arg]) arg = c;
    return static_cast<int>(arg);
  }

  std::size_t n_classes() const { return n_classes_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<double>& dist() const { return dist_; }

  friend bool operator==(const ClassificationTree&, const ClassificationTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<double> dist_;  // nodes * n_classes
  std::size_t n_classes_ = 2;
};

namespace detail {

inline RegressionTree grow_regression_tree(const FeatureSorter& sorter,
                                           std::span<const double> y,
                                           std::span<const std::uint32_t> multiplicity,
                                           const GrowParams& params,
                                           std::mt19937_64 rng) {
  MseCriterion criterion{y};
  TreeGrower<MseCriterion> grower(sorter, criterion, params, std::move(rng));
  auto grown = grower.grow(multiplicity);
  return RegressionTree(std::move(grown.nodes), std::move(grown.values));
}

inline ClassificationTree grow_classification_tree(
    const FeatureSorter& sorter, std::span<const int> y, std::size_t n_classes,
    std::span<const std::uint32_t> multiplicity, const GrowParams& params,
    std::mt19937_64 rng) {
  if (n_classes > kMaxClasses)
    throw std::invalid_argument("classification tree: too many classes");
  GiniCriterion criterion{y, n_classes};
  TreeGrower<GiniCriterion> grower(sorter, criterion, params, std::move(rng));
  auto grown = grower.grow(multiplicity);
  std::vector<double> dist(grown.nodes.size() * n_classes);
  for (std::size_t i = 0; i < grown.nodes.size(); ++i)
    for (std::size_t c = 0; c < n_classes; ++c)
      dist[i * n_classes + c] = grown.values[i][c];
  return ClassificationTree(std::move(grown.nodes), std::move(dist), n_classes);
}

}  // namespace detail

// Fits a single regression tree by greedy recursive splitting under the
// summed-squared-error criterion.
inline RegressionTree fit_tree_regressor(const Matrix& x, std::span<const double> y,
                                         const GrowParams& params) {
  if (x.rows() == 0) throw std::invalid_argument("fit_tree_regressor: empty dataset");
  if (y.size() != x.rows())
    throw std::invalid_argument("fit_tree_regressor: target length mismatch");
  if (params.max_depth < 1)
    throw std::invalid_argument("fit_tree_regressor: max_depth must be >= 1");
  for (double v : y)
    if (!std::isfinite(v))
      throw std::invalid_argument("fit_tree_regressor: non-finite target");
  detail::FeatureSorter sorter(x);
  std::vector<std::uint32_t> ones(x.rows(), 1);
  return detail::grow_regression_tree(sorter, y, ones, params,
                                      make_rng(params.rng_seed));
}

// Fits a single gini-split classification tree.
inline ClassificationTree fit_tree_classifier(const Matrix& x, std::span<const int> y,
                                              std::size_t n_classes,
                                              const GrowParams& params) {
  if (x.rows() == 0) throw std::invalid_argument("fit_tree_classifier: empty dataset");
  if (y.size() != x.rows())
    throw std::invalid_argument("fit_tree_classifier: label length mismatch");
  detail::FeatureSorter sorter(x);
  std::vector<std::uint32_t> ones(x.rows(), 1);
  return detail::grow_classification_tree(sorter, y, n_classes, ones, params,
                                          make_rng(params.rng_seed));
}

}  // namespace rtap

#endif  // RTAP_TREE_HPP
