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

#ifndef RTAP_FOREST_HPP
#define RTAP_FOREST_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rtap/common.hpp"
#include "rtap/parallel.hpp"
#include "rtap/rng.hpp"
#include "rtap/tree.hpp"

namespace rtap {

struct ForestParams {
  int trees = 100;
  int max_depth = 12;
  int min_samples_split = 5;
  int feature_subset_size = 0;  // 0 = ceil(n/3), the regression convention
  bool bootstrap = true;
  std::uint64_t rng_seed = 0;

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

namespace detail {

inline std::vector<std::uint32_t> bootstrap_counts(std::size_t n,
                                                   std::mt19937_64& rng) {
  std::vector<std::uint32_t> counts(n, 0);
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  for (std::size_t i = 0; i < n; ++i) ++counts[dist(rng)];
  return counts;
}

}  // namespace detail

// Random forest regressor for a multi-target problem: one independent
// ensemble of trees per target column, each tree fit on a bootstrap
// resample with per-split feature subsampling. Prediction is the
// arithmetic mean over trees. Tree t of target j draws its random stream
// from (seed, j, t), so parallel and serial training build identical
// forests.
class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::vector<std::vector<RegressionTree>> trees, ForestParams params,
              std::size_t n_features)
      : per_target_(std::move(trees)), params_(params), n_features_(n_features) {}

  static ForestModel fit(const Matrix& x, const Matrix& y, const ForestParams& params) {
    if (x.rows() == 0) throw std::invalid_argument("ForestModel::fit: empty dataset");
    if (y.rows() != x.rows())
      throw std::invalid_argument("ForestModel::fit: row count mismatch");
    if (params.trees < 1)
      throw std::invalid_argument("ForestModel::fit: need at least one tree");

    GrowParams grow;
    grow.max_depth = params.max_depth;
    grow.min_samples_split = params.min_samples_split;
    grow.feature_subset_size =
        params.feature_subset_size > 0
            ? params.feature_subset_size
            : static_cast<int>((x.cols() + 2) / 3);  // ceil(n/3)

    detail::FeatureSorter sorter(x);
    const std::size_t n_targets = y.cols();
    const std::size_t n_trees = static_cast<std::size_t>(params.trees);
    std::vector<std::vector<double>> targets(n_targets);
    for (std::size_t j = 0; j < n_targets; ++j) targets[j] = y.column(j);

    std::vector<std::vector<RegressionTree>> forest(
        n_targets, std::vector<RegressionTree>(n_trees));
    parallel_for(n_targets * n_trees, [&](std::size_t k) {
      const std::size_t j = k / n_trees;
      const std::size_t t = k % n_trees;
      auto rng = make_rng(params.rng_seed, {j, t});
      std::vector<std::uint32_t> counts =
          params.bootstrap ? detail::bootstrap_counts(x.rows(), rng)
                           : std::vector<std::uint32_t>(x.rows(), 1);
      forest[j][t] = detail::grow_regression_tree(sorter, targets[j], counts, grow, rng);
    });
    return ForestModel(std::move(forest), params, x.cols());
  }

  std::vector<double> predict(std::span<const double> x) const {
    if (x.size() != n_features_)
      throw std::invalid_argument("ForestModel::predict: expected " +
                                  std::to_string(n_features_) + " features, got " +
                                  std::to_string(x.size()));
    std::vector<double> out;
    out.reserve(per_target_.size());
    for (const auto& trees : per_target_) {
      double sum = 0.0;
      for (const auto& tree : trees) sum += tree.predict(x);
      out.push_back(sum / static_cast<double>(trees.size()));
    }
    return out;
  }

  std::size_t targets() const { return per_target_.size(); }
  std::size_t features() const { return n_features_; }
  const ForestParams& params() const { return params_; }
  const std::vector<std::vector<RegressionTree>>& trees() const { return per_target_; }

  friend bool operator==(const ForestModel&, const ForestModel&) = default;

 private:
  std::vector<std::vector<RegressionTree>> per_target_;
  ForestParams params_;
  std::size_t n_features_ = 0;
};

inline ForestModel fit_rfr(const Matrix& x, const Matrix& y, const ForestParams& params) {
  return ForestModel::fit(x, y, params);
}

inline std::vector<double> predict_rfr(const ForestModel& model,
                                       std::span<const double> x) {
  return model.predict(x);
}

struct ClassForestParams {
  int trees = 100;
  int max_depth = 10;
  int min_samples_split = 2;
  int feature_subset_size = 0;  // 0 = ceil(sqrt(n)), the classification convention
  bool bootstrap = true;
  std::uint64_t rng_seed = 0;

  friend bool operator==(const ClassForestParams&, const ClassForestParams&) = default;
};

// Bagged gini-split trees; each tree casts a majority vote and the forest
// aggregates vote fractions. For binary problems predict_proba is the
// positive-vote fraction.
class ClassificationForest {
 public:
  ClassificationForest() = default;
  ClassificationForest(std::vector<ClassificationTree> trees, ClassForestParams params,
                       std::size_t n_classes, std::size_t n_features)
      : trees_(std::move(trees)), params_(params), n_classes_(n_classes),
        n_features_(n_features) {}

  static ClassificationForest fit(const Matrix& x, std::span<const int> y,
                                  std::size_t n_classes,
                                  const ClassForestParams& params) {
    if (x.rows() == 0)
      throw std::invalid_argument("ClassificationForest::fit: empty dataset");
    if (y.size() != x.rows())
      throw std::invalid_argument("ClassificationForest::fit: label count mismatch");
    if (params.trees < 1)
      throw std::invalid_argument("ClassificationForest::fit: need at least one tree");

    GrowParams grow;
    grow.max_depth = params.max_depth;
    grow.min_samples_split = params.min_samples_split;
    grow.feature_subset_size =
        params.feature_subset_size > 0
            ? params.feature_subset_size
            : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(x.cols()))));

    detail::FeatureSorter sorter(x);
    const std::size_t n_trees = static_cast<std::size_t>(params.trees);
    std::vector<ClassificationTree> trees(n_trees);
    parallel_for(n_trees, [&](std::size_t t) {
      auto rng = make_rng(params.rng_seed, {t});
      std::vector<std::uint32_t> counts =
          params.bootstrap ? detail::bootstrap_counts(x.rows(), rng)
                           : std::vector<std::uint32_t>(x.rows(), 1);
      trees[t] =
          detail::grow_classification_tree(sorter, y, n_classes, counts, grow, rng);
    });
    return ClassificationForest(std::move(trees), params, n_classes, x.cols());
  }

  // Fraction of trees voting for each class.
  std::vector<double> vote_fractions(std::span<const double> x) const {
    if (x.size() != n_features_)
      throw std::invalid_argument("ClassificationForest: expected " +
                                  std::to_string(n_features_) + " features, got " +
                                  std::to_string(x.size()));
    std::vector<double> votes(n_classes_, 0.0);
    for (const auto& tree : trees_)
      votes[static_cast<std::size_t>(tree.predict_class(x))] += 1.0;
    for (auto& v : votes) v /= static_cast<double>(trees_.size());
    return votes;
  }

  double predict_proba(std::span<const double> x) const { return vote_fractions(x)[1]; }

  // Plurality vote; ties go to the lowest class index.
  int predict_class(std::span<const double> x) const {
    auto votes = vote_fractions(x);
    std::size_t arg = 0;
    for (std::size_t c = 1; c < votes.size(); ++c)
      if (votes[c] > votes[arg]) arg = c;
    return static_cast<int>(arg);
  }

  std::size_t n_classes() const { return n_classes_; }
  std::size_t features() const { return n_features_; }
  const ClassForestParams& params() const { return params_; }
  const std::vector<ClassificationTree>& trees() const { return trees_; }

  friend bool operator==(const ClassificationForest&,
                         const ClassificationForest&) = default;

 private:
  std::vector<ClassificationTree> trees_;
  ClassForestParams params_;
  std::size_t n_classes_ = 2;
  std::size_t n_features_ = 0;
};

}  // namespace rtap

#endif  // RTAP_FOREST_HPP
