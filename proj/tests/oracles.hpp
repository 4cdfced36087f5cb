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

// Independent brute-force reference implementations used only by tests.
// These deliberately avoid the library's code paths: metrics are computed
// from raw label pairs, splits by direct enumeration with two-pass means,
// and nearest neighbors by a full sort.

#ifndef RTAP_TESTS_ORACLES_HPP
#define RTAP_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtap/common.hpp"
#include "rtap/tree.hpp"

namespace oracle {

// ---- metrics ----

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

inline Prf prf_from_labels(std::span<const int> truth, std::span<const int> predicted,
                           int positive, double beta) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    bool t = truth[i] == positive;
    bool p = predicted[i] == positive;
    if (t && p) ++tp;
    if (!t && p) ++fp;
    if (t && !p) ++fn;
  }
  Prf out;
  out.precision = tp + fp == 0 ? 0.0
                               : static_cast<double>(tp) / static_cast<double>(tp + fp);
  out.recall = tp + fn == 0 ? 0.0
                            : static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (out.precision == out.recall) {
    out.f = out.precision;
  } else {
    double b2 = beta * beta;
    double denom = b2 * out.precision + out.recall;
    out.f = denom == 0.0 ? 0.0 : (1.0 + b2) * out.precision * out.recall / denom;
  }
  return out;
}

inline double macro_f_from_labels(std::span<const int> truth,
                                  std::span<const int> predicted, int n_classes,
                                  double beta) {
  double sum = 0.0;
  for (int c = 0; c < n_classes; ++c)
    sum += prf_from_labels(truth, predicted, c, beta).f;
  return sum / static_cast<double>(n_classes);
}

inline double micro_f_from_labels(std::span<const int> truth,
                                  std::span<const int> predicted, int n_classes,
                                  double beta) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
      bool t = truth[i] == c;
      bool p = predicted[i] == c;
      if (t && p) ++tp;
      if (!t && p) ++fp;
      if (t && !p) ++fn;
    }
  }
  double precision =
      tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  double recall =
      tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (precision == recall) return precision;
  double b2 = beta * beta;
  double denom = b2 * precision + recall;
  return denom == 0.0 ? 0.0 : (1.0 + b2) * precision * recall / denom;
}

inline double accuracy(std::span<const int> truth, std::span<const int> predicted) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i] == predicted[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

// ---- split enumeration ----

struct SplitChoice {
  bool found = false;
  double cost = std::numeric_limits<double>::infinity();
  std::size_t feature = 0;
  double threshold = 0.0;
  double margin = std::numeric_limits<double>::infinity();  // to the runner-up cost
};

inline double sse(const rtap::Matrix& x, std::span<const double> y,
                  std::span<const std::size_t> rows) {
  (void)x;
  if (rows.empty()) return 0.0;
  double mean = 0.0;
  for (auto r : rows) mean += y[r];
  mean /= static_cast<double>(rows.size());
  double total = 0.0;
  for (auto r : rows) total += (y[r] - mean) * (y[r] - mean);
  return total;
}

inline double gini_mass(std::span<const int> y, std::span<const std::size_t> rows,
                        int n_classes) {
  if (rows.empty()) return 0.0;
  std::vector<double> counts(static_cast<std::size_t>(n_classes), 0.0);
  for (auto r : rows) counts[static_cast<std::size_t>(y[r])] += 1.0;
  double m = static_cast<double>(rows.size());
  double p2 = 0.0;
  for (double c : counts) p2 += (c / m) * (c / m);
  return m * (1.0 - p2);
}

// Candidate thresholds: midpoints between consecutive distinct values,
// with the same rounding guard the implementation uses.
inline std::vector<double> candidate_thresholds(const rtap::Matrix& x,
                                                std::span<const std::size_t> rows,
                                                std::size_t feature) {
  std::vector<double> values;
  values.reserve(rows.size());
  for (auto r : rows) values.push_back(x(r, feature));
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    double threshold = values[i] + (values[i + 1] - values[i]) / 2.0;
    if (!(threshold < values[i + 1])) threshold = values[i];
    out.push_back(threshold);
  }
  return out;
}

template <typename CostFn>
SplitChoice best_split(const rtap::Matrix& x, std::span<const std::size_t> rows,
                       CostFn&& child_cost) {
  SplitChoice best;
  double runner_up = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (double threshold : candidate_thresholds(x, rows, f)) {
      std::vector<std::size_t> left, right;
      for (auto r : rows)
        (x(r, f) <= threshold ? left : right).push_back(r);
      double cost = child_cost(left) + child_cost(right);
      if (cost < best.cost) {
        runner_up = best.cost;
        best.cost = cost;
        best.feature = f;
        best.threshold = threshold;
        best.found = true;
      } else if (cost < runner_up) {
        runner_up = cost;
      }
    }
  }
  best.margin = runner_up - best.cost;
  return best;
}

inline SplitChoice best_mse_split(const rtap::Matrix& x, std::span<const double> y,
                                  std::span<const std::size_t> rows) {
  return best_split(x, rows, [&](std::span<const std::size_t> side) {
    return sse(x, y, side);
  });
}

inline SplitChoice best_gini_split(const rtap::Matrix& x, std::span<const int> y,
                                   int n_classes, std::span<const std::size_t> rows) {
  return best_split(x, rows, [&](std::span<const std::size_t> side) {
    return gini_mass(y, side, n_classes);
  });
}

// Minimum total SSE over every tree of depth <= 2 (split pairs enumerated
// directly). Splitting never increases SSE, so this is the depth-2 optimum.
inline double best_depth2_sse(const rtap::Matrix& x, std::span<const double> y) {
  std::vector<std::size_t> all(x.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  auto best_child = [&](std::span<const std::size_t> rows) {
    double leaf = sse(x, y, rows);
    auto split = best_mse_split(x, y, rows);
    return split.found ? std::min(leaf, split.cost) : leaf;
  };

  double best = sse(x, y, all);  // depth-0 tree
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (double threshold : candidate_thresholds(x, all, f)) {
      std::vector<std::size_t> left, right;
      for (auto r : all)
        (x(r, f) <= threshold ? left : right).push_back(r);
      best = std::min(best, best_child(left) + best_child(right));
    }
  }
  return best;
}

// ---- per-node tree verification ----

namespace detail {

inline std::string describe_node(std::int32_t node, std::size_t rows) {
  return "node " + std::to_string(node) + " (" + std::to_string(rows) + " rows)";
}

template <typename Tree, typename MaySplitFn, typename CostFn, typename LeafFn>
std::optional<std::string> walk_tree(const Tree& tree, const rtap::Matrix& x,
                                     const rtap::GrowParams& params, std::int32_t node,
                                     std::vector<std::size_t> rows, int depth,
                                     MaySplitFn&& may_split_at, CostFn&& child_cost,
                                     LeafFn&& check_leaf) {
  const rtap::TreeNode& n = tree.nodes()[static_cast<std::size_t>(node)];
  if (n.count != rows.size())
    return describe_node(node, rows.size()) + ": stored count " +
           std::to_string(n.count);
  if (auto err = check_leaf(node, rows)) return err;

  auto split = best_split(x, rows, child_cost);
  bool may_split =
      depth < params.max_depth &&
      rows.size() >= static_cast<std::size_t>(params.min_samples_split) &&
      may_split_at(rows) && split.found;

  if (n.feature < 0) {
    if (may_split)
      return describe_node(node, rows.size()) + ": leaf though a split exists";
    return std::nullopt;
  }
  if (!may_split)
    return describe_node(node, rows.size()) + ": split though it must be a leaf";

  std::vector<std::size_t> left, right;
  for (auto r : rows)
    (x(r, static_cast<std::size_t>(n.feature)) <= n.threshold ? left : right)
        .push_back(r);
  if (left.empty() || right.empty())
    return describe_node(node, rows.size()) + ": empty child";

  double achieved = child_cost(left) + child_cost(right);
  double tolerance = std::max(1e-9, 1e-9 * std::abs(split.cost));
  if (std::abs(achieved - split.cost) > tolerance)
    return describe_node(node, rows.size()) + ": cost " + std::to_string(achieved) +
           " vs optimal " + std::to_string(split.cost);
  if (split.margin > 1e-7 &&
      (static_cast<std::size_t>(n.feature) != split.feature ||
       n.threshold != split.threshold))
    return describe_node(node, rows.size()) + ": chose feature " +
           std::to_string(n.feature) + " @ " + std::to_string(n.threshold) +
           ", oracle wants feature " + std::to_string(split.feature) + " @ " +
           std::to_string(split.threshold);

  if (auto err = walk_tree(tree, x, params, n.left, std::move(left), depth + 1,
                           may_split_at, child_cost, check_leaf))
    return err;
  return walk_tree(tree, x, params, n.right, std::move(right), depth + 1, may_split_at,
                   child_cost, check_leaf);
}

}  // namespace detail

// Checks that every internal node of a fitted regression tree carries the
// enumeration-optimal split, every leaf is justified by a stopping rule
// and stores the exact mean. Returns an error description, or nothing.
inline std::optional<std::string> verify_regression_tree(
    const rtap::RegressionTree& tree, const rtap::Matrix& x, std::span<const double> y,
    const rtap::GrowParams& params) {
  std::vector<std::size_t> all(x.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return detail::walk_tree(
      tree, x, params, 0, std::move(all), 0,
      [&](std::span<const std::size_t> rows) {
        double lo = y[rows[0]], hi = y[rows[0]];
        for (auto r : rows) {
          lo = std::min(lo, y[r]);
          hi = std::max(hi, y[r]);
        }
        return lo < hi;
      },
      [&](std::span<const std::size_t> side) { return sse(x, y, side); },
      [&](std::int32_t node, std::span<const std::size_t> rows)
          -> std::optional<std::string> {
        double mean = 0.0;
        for (auto r : rows) mean += y[r];
        mean /= static_cast<double>(rows.size());
        double stored = tree.values()[static_cast<std::size_t>(node)];
        if (std::abs(stored - mean) > 1e-12)
          return detail::describe_node(node, rows.size()) + ": leaf value " +
                 std::to_string(stored) + " vs mean " + std::to_string(mean);
        return std::nullopt;
      });
}

inline std::optional<std::string> verify_classification_tree(
    const rtap::ClassificationTree& tree, const rtap::Matrix& x, std::span<const int> y,
    int n_classes, const rtap::GrowParams& params) {
  std::vector<std::size_t> all(x.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return detail::walk_tree(
      tree, x, params, 0, std::move(all), 0,
      [&](std::span<const std::size_t> rows) {
        for (auto r : rows)
          if (y[r] != y[rows[0]]) return true;
        return false;
      },
      [&](std::span<const std::size_t> side) { return gini_mass(y, side, n_classes); },
      [&](std::int32_t, std::span<const std::size_t>) -> std::optional<std::string> {
        return std::nullopt;
      });
}

// ---- nearest neighbors ----

inline int severity_by_linear_scan(const rtap::Matrix& x, std::span<const int> codes,
                                   std::span<const double> query) {
  std::vector<std::pair<double, std::size_t>> scored(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double d = query[j] - x(i, j);
      d2 += d * d;
    }
    scored[i] = {std::sqrt(d2), i};
  }
  std::sort(scored.begin(), scored.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) sum += codes[scored[i].second];
  double mean = sum / 3.0;
  return std::max(1, std::min(3, static_cast<int>(std::floor(mean + 0.5))));
}

}  // namespace oracle

#endif  // RTAP_TESTS_ORACLES_HPP
