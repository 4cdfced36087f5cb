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

#ifndef RTAP_CLASSIFY_HPP
#define RTAP_CLASSIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rtap/common.hpp"
#include "rtap/forest.hpp"
#include "rtap/logistic.hpp"
#include "rtap/tree.hpp"

namespace rtap {

namespace detail {

// Indices of the k nearest training rows by (squared distance, index).
// Exact brute-force scan; squared distances order identically to
// Euclidean ones, including exact ties.
inline std::vector<std::uint32_t> nearest_neighbors(const Matrix& x,
                                                    std::span<const double> query,
                                                    std::size_t k) {
  if (query.size() != x.cols())
    throw std::invalid_argument("nearest_neighbors: query width mismatch");
  std::vector<std::pair<double, std::uint32_t>> scored(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    double d2 = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      double d = query[j] - row[j];
      d2 += d * d;
    }
    scored[i] = {d2, static_cast<std::uint32_t>(i)};
  }
  k = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                    scored.end());
  std::vector<std::uint32_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = scored[i].second;
  return out;
}

}  // namespace detail

// k-nearest-neighbors classifier; the positive probability is the
// positive share among the k nearest training rows.
class KnnClassifier {
 public:
  KnnClassifier() = default;
  KnnClassifier(Matrix x, std::vector<int> y, int k)
      : x_(std::move(x)), y_(std::move(y)), k_(k) {}

  static KnnClassifier fit(const Matrix& x, std::span<const int> y, int k) {
    if (k < 1) throw std::invalid_argument("KnnClassifier: k must be >= 1");
    if (x.rows() == 0) throw std::invalid_argument("KnnClassifier: empty dataset");
    if (y.size() != x.rows())
      throw std::invalid_argument("KnnClassifier: label count mismatch");
    return KnnClassifier(x, std::vector<int>(y.begin(), y.end()), k);
  }

  double predict_proba(std::span<const double> q) const {
    auto ids = detail::nearest_neighbors(x_, q, static_cast<std::size_t>(k_));
    double positives = 0.0;
    for (auto id : ids) positives += y_[id] == 1 ? 1.0 : 0.0;
    return positives / static_cast<double>(ids.size());
  }

  int k() const { return k_; }
  const Matrix& x() const { return x_; }
  const std::vector<int>& y() const { return y_; }

  friend bool operator==(const KnnClassifier&, const KnnClassifier&) = default;

 private:
  Matrix x_;
  std::vector<int> y_;
  int k_ = 5;
};

struct GbdtParams {
  int rounds = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_samples_split = 2;
  std::uint64_t rng_seed = 0;

  friend bool operator==(const GbdtParams&, const GbdtParams&) = default;
};

// Gradient-boosted trees on the binary log-loss. Each round fits a
// regression tree to the residuals y - p and replaces leaf values with a
// Newton step sum(residual) / sum(p(1-p)); the probability is the
// logistic link of the accumulated score.
class GbdtClassifier {
 public:
  GbdtClassifier() = default;
  GbdtClassifier(double base_score, std::vector<RegressionTree> trees,
                 GbdtParams params, std::vector<double> train_loss)
      : base_score_(base_score), trees_(std::move(trees)), params_(params),
        train_loss_(std::move(train_loss)) {}

  static GbdtClassifier fit(const Matrix& x, std::span<const int> y,
                            const GbdtParams& params) {
    if (x.rows() == 0) throw std::invalid_argument("GbdtClassifier: empty dataset");
    if (y.size() != x.rows())
      throw std::invalid_argument("GbdtClassifier: label count mismatch");

    const std::size_t n = x.rows();
    double positives = 0.0;
    for (int label : y) positives += label == 1 ? 1.0 : 0.0;
    double rate = positives / static_cast<double>(n);
    double clamped = std::min(std::max(rate, 1e-12), 1.0 - 1e-12);
    const double base_score = std::log(clamped / (1.0 - clamped));

    GrowParams grow;
    grow.max_depth = params.max_depth;
    grow.min_samples_split = params.min_samples_split;
    grow.feature_subset_size = 0;  // boosting uses the full feature set

    detail::FeatureSorter sorter(x);
    std::vector<std::uint32_t> ones(n, 1);
    std::vector<double> score(n, base_score);
    std::vector<double> residual(n);
    std::vector<double> train_loss;
    train_loss.reserve(static_cast<std::size_t>(params.rounds) + 1);
    train_loss.push_back(log_loss(score, y));

    std::vector<RegressionTree> trees;
    trees.reserve(static_cast<std::size_t>(params.rounds));
    for (int round = 0; round < params.rounds; ++round) {
      for (std::size_t i = 0; i < n; ++i)
        residual[i] = (y[i] == 1 ? 1.0 : 0.0) - sigmoid(score[i]);

      auto rng = make_rng(params.rng_seed, {static_cast<std::uint64_t>(round)});
      RegressionTree tree =
          detail::grow_regression_tree(sorter, residual, ones, grow, rng);

      // Newton leaf values on the log-loss; the MSE leaf means only shape
      // the tree, the stored values are the boosting steps.
      const auto& nodes = tree.nodes();
      std::vector<double> numerator(nodes.size(), 0.0);
      std::vector<double> denominator(nodes.size(), 0.0);
      std::vector<std::int32_t> leaf_of(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::int32_t leaf = detail::route_to_leaf(nodes, x.row(i));
        leaf_of[i] = leaf;
        double p = sigmoid(score[i]);
        numerator[static_cast<std::size_t>(leaf)] += residual[i];
        denominator[static_cast<std::size_t>(leaf)] += p * (1.0 - p);
      }
      std::vector<double> steps(nodes.size(), 0.0);
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        if (nodes[j].feature >= 0) continue;
        double step = numerator[j] / std::max(denominator[j], 1e-12);
        steps[j] = std::clamp(step, -kMaxLeafStep, kMaxLeafStep);
      }
      for (std::size_t i = 0; i < n; ++i)
        score[i] += params.learning_rate * steps[static_cast<std::size_t>(leaf_of[i])];

      trees.emplace_back(tree.nodes(), std::move(steps));
      train_loss.push_back(log_loss(score, y));
    }
    return GbdtClassifier(base_score, std::move(trees), params, std::move(train_loss));
  }

  double predict_proba(std::span<const double> q) const {
    double score = base_score_;
    for (const auto& tree : trees_) score += params_.learning_rate * tree.predict(q);
    return sigmoid(score);
  }

  double base_score() const { return base_score_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  const GbdtParams& params() const { return params_; }

  // Mean training log-loss after 0, 1, ..., rounds trees.
  const std::vector<double>& train_loss() const { return train_loss_; }

  friend bool operator==(const GbdtClassifier&, const GbdtClassifier&) = default;

 private:
  static constexpr double kMaxLeafStep = 10.0;

  static double log_loss(std::span<const double> score, std::span<const int> y) {
    double total = 0.0;
    for (std::size_t i = 0; i < score.size(); ++i) {
      double z = score[i];
      double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      total += softplus - (y[i] == 1 ? z : 0.0);
    }
    return total / static_cast<double>(score.size());
  }

  double base_score_ = 0.0;
  std::vector<RegressionTree> trees_;
  GbdtParams params_;
  std::vector<double> train_loss_;
};

// The four base classifier families of the stacking layer.
enum class BaseKind { decision_tree, random_forest, knn, gbdt };

inline const char* base_kind_name(BaseKind k) {
  switch (k) {
    case BaseKind::decision_tree: return "decision_tree";
    case BaseKind::random_forest: return "random_forest";
    case BaseKind::knn: return "knn";
    case BaseKind::gbdt: return "gbdt";
  }
  return "?";
}

struct BaseParams {
  // decision tree
  int dt_max_depth = 10;
  int dt_min_samples_split = 2;
  // random forest
  ClassForestParams rf;
  // kNN
  int knn_k = 5;
  // GBDT
  GbdtParams gbdt;

  friend bool operator==(const BaseParams&, const BaseParams&) = default;
};

// One fitted base classifier. A training set with a single class yields a
// degenerate constant model (flagged, predicting that class's rate).
class BaseClassifier {
 public:
  BaseClassifier() = default;

  static BaseClassifier fit(BaseKind kind, const Matrix& x, std::span<const int> y,
                            const BaseParams& params, std::uint64_t seed) {
    if (x.rows() == 0) throw std::invalid_argument("fit_base: empty dataset");
    if (y.size() != x.rows())
      throw std::invalid_argument("fit_base: label count mismatch");
    for (int label : y)
      if (label != 0 && label != 1)
        throw std::invalid_argument("fit_base: labels must be binary");

    BaseClassifier out;
    out.kind_ = kind;
    bool has_positive = false, has_negative = false;
    for (int label : y) (label == 1 ? has_positive : has_negative) = true;
    if (!has_positive || !has_negative) {
      out.degenerate_ = true;
      out.constant_ = has_positive ? 1.0 : 0.0;
      return out;
    }

    switch (kind) {
      case BaseKind::decision_tree: {
        GrowParams grow;
        grow.max_depth = params.dt_max_depth;
        grow.min_samples_split = params.dt_min_samples_split;
        grow.feature_subset_size = 0;
        out.model_ = fit_tree_classifier(x, y, 2, grow);
        break;
      }
      case BaseKind::random_forest: {
        ClassForestParams rf = params.rf;
        rf.rng_seed = seed;
        out.model_ = ClassificationForest::fit(x, y, 2, rf);
        break;
      }
      case BaseKind::knn:
        out.model_ = KnnClassifier::fit(x, y, params.knn_k);
        break;
      case BaseKind::gbdt: {
        GbdtParams gb = params.gbdt;
        gb.rng_seed = seed;
        out.model_ = GbdtClassifier::fit(x, y, gb);
        break;
      }
    }
    return out;
  }

  double predict_proba(std::span<const double> x) const {
    if (degenerate_) return constant_;
    return std::visit(
        [&](const auto& model) -> double {
          using T = std::decay_t<decltype(model)>;
          if constexpr (std::is_same_v<T, std::monostate>)
            throw ModelError("base classifier not fitted");
          else
            return model.predict_proba(x);
        },
        model_);
  }

  BaseKind kind() const { return kind_; }
  bool degenerate() const { return degenerate_; }
  double constant() const { return constant_; }

  using ModelVariant = std::variant<std::monostate, ClassificationTree,
                                    ClassificationForest, KnnClassifier, GbdtClassifier>;
  const ModelVariant& model() const { return model_; }
  ModelVariant& model() { return model_; }
  void set_kind(BaseKind k) { kind_ = k; }
  void set_degenerate(double constant) {
    degenerate_ = true;
    constant_ = constant;
  }

  friend bool operator==(const BaseClassifier&, const BaseClassifier&) = default;

 private:
  BaseKind kind_ = BaseKind::decision_tree;
  bool degenerate_ = false;
  double constant_ = 0.0;
  ModelVariant model_;
};

inline BaseClassifier fit_base(BaseKind kind, const Matrix& x, std::span<const int> y,
                               const BaseParams& params, std::uint64_t seed = 0) {
  return BaseClassifier::fit(kind, x, y, params, seed);
}

}  // namespace rtap

#endif  // RTAP_CLASSIFY_HPP
