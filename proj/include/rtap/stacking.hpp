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

#ifndef RTAP_STACKING_HPP
#define RTAP_STACKING_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rtap/classify.hpp"
#include "rtap/common.hpp"
#include "rtap/logistic.hpp"
#include "rtap/parallel.hpp"
#include "rtap/rng.hpp"

namespace rtap {

constexpr std::array<BaseKind, 4> kStackingBases = {
    BaseKind::decision_tree, BaseKind::random_forest, BaseKind::knn, BaseKind::gbdt};

// Deterministic row -> fold assignment, stratified by class so every fold
// complement keeps both classes whenever the data allows it.
struct OofPlan {
  int folds = 5;
  std::vector<int> fold_of;  // per training row

  static OofPlan stratified(std::span<const int> y, int folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("OofPlan: need at least 2 folds");
    OofPlan plan;
    plan.folds = folds;
    plan.fold_of.assign(y.size(), 0);
    for (int cls : {0, 1}) {
      std::vector<std::uint32_t> rows;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == cls) rows.push_back(static_cast<std::uint32_t>(i));
      auto rng = make_rng(seed, {static_cast<std::uint64_t>(cls)});
      std::shuffle(rows.begin(), rows.end(), rng);
      for (std::size_t j = 0; j < rows.size(); ++j) {
        // Positives fill folds descending so small stratified sets still
        // spread the two classes over distinct folds (K = N degenerates
        // to leave-one-out).
        int fold = static_cast<int>(j % static_cast<std::size_t>(folds));
        plan.fold_of[rows[j]] = cls == 0 ? fold : folds - 1 - fold;
      }
    }
    return plan;
  }
};

// Meta features for the logistic layer: entry (i, j) is the positive
// probability for row i from base kind j trained on every fold except
// fold(i), so no base model ever scores a row it saw in training.
inline Matrix make_oof_meta_features(const Matrix& x, std::span<const int> y,
                                     const OofPlan& plan, const BaseParams& params,
                                     std::uint64_t seed) {
  if (plan.fold_of.size() != x.rows())
    throw std::invalid_argument("make_oof_meta_features: plan does not cover the data");

  // Every fold complement must contain both classes, otherwise its base
  // models degenerate and leak nothing useful into the meta layer.
  for (int fold = 0; fold < plan.folds; ++fold) {
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (plan.fold_of[i] == fold) continue;
      (y[i] == 1 ? pos : neg) = true;
    }
    if (!pos || !neg)
      throw DataError("make_oof_meta_features: the complement of fold " +
                      std::to_string(fold) +
                      " is single-class; use more folds or more minority rows");
  }

  Matrix meta(x.rows(), kStackingBases.size());
  std::vector<std::vector<std::uint32_t>> fold_rows(
      static_cast<std::size_t>(plan.folds));
  for (std::size_t i = 0; i < x.rows(); ++i)
    fold_rows[static_cast<std::size_t>(plan.fold_of[i])].push_back(
        static_cast<std::uint32_t>(i));

  for (int fold = 0; fold < plan.folds; ++fold) {
    Matrix train_x(0, x.cols());
    std::vector<int> train_y;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (plan.fold_of[i] == fold) continue;
      train_x.push_row(x.row(i));
      train_y.push_back(y[i]);
    }
    const auto& holdout = fold_rows[static_cast<std::size_t>(fold)];
    for (std::size_t j = 0; j < kStackingBases.size(); ++j) {
      BaseClassifier base =
          fit_base(kStackingBases[j], train_x, train_y, params,
                   derive_seed(seed, {static_cast<std::uint64_t>(fold), j}));
      parallel_for(holdout.size(), [&](std::size_t q) {
        meta(holdout[q], j) = base.predict_proba(x.row(holdout[q]));
      });
    }
  }
  return meta;
}

struct StackingParams {
  BaseParams base;
  LogisticParams meta;
  int folds = 5;
  double threshold = 0.5;
  std::uint64_t rng_seed = 0;

  friend bool operator==(const StackingParams&, const StackingParams&) = default;
};

// Two-layer stacking classifier: four base classifiers whose positive
// probabilities feed a logistic meta layer. A label is anomalous when the
// meta probability reaches the decision threshold.
class StackingModel {
 public:
  StackingModel() = default;

  static StackingModel fit(const Matrix& x, std::span<const int> y,
                           const StackingParams& params) {
    if (x.rows() == 0) throw std::invalid_argument("StackingModel::fit: empty dataset");
    if (y.size() != x.rows())
      throw std::invalid_argument("StackingModel::fit: label count mismatch");

    StackingModel model;
    model.params_ = params;

    bool pos = false, neg = false;
    for (int label : y) (label == 1 ? pos : neg) = true;
    if (!pos || !neg) {
      model.degenerate_ = true;
      model.constant_ = pos ? 1.0 : 0.0;
      model.warnings_.push_back(
          "training labels are single-class; stacking reduced to a constant "
          "classifier");
      for (std::size_t j = 0; j < kStackingBases.size(); ++j) {
        model.bases_[j].set_kind(kStackingBases[j]);
        model.bases_[j].set_degenerate(model.constant_);
      }
      return model;
    }

    OofPlan plan = OofPlan::stratified(y, params.folds, params.rng_seed);
    Matrix meta = make_oof_meta_features(x, y, plan, params.base, params.rng_seed);

    // Refit the bases on all rows; the dedicated stream id keeps their
    // randomness distinct from the per-fold models above.
    constexpr std::uint64_t kRefitStream = 0xffffULL;
    for (std::size_t j = 0; j < kStackingBases.size(); ++j)
      model.bases_[j] = fit_base(kStackingBases[j], x, y, params.base,
                                 derive_seed(params.rng_seed, {kRefitStream, j}));

    LogisticRegression::FitInfo info;
    model.meta_ = LogisticRegression::fit(meta, y, params.meta, &info);
    if (!info.converged)
      model.warnings_.push_back(
          "meta logistic regression stopped at the iteration cap; keeping the "
          "best iterate");
    return model;
  }

  // (probability, label) for one feature vector.
  std::pair<double, bool> predict(std::span<const double> x) const {
    double p = predict_proba(x);
    return {p, p >= params_.threshold};
  }

  double predict_proba(std::span<const double> x) const {
    if (degenerate_) return constant_;
    std::array<double, 4> probs{};
    for (std::size_t j = 0; j < bases_.size(); ++j)
      probs[j] = bases_[j].predict_proba(x);
    return meta_.predict_proba(probs);
  }

  std::array<double, 4> base_probabilities(std::span<const double> x) const {
    std::array<double, 4> probs{};
    for (std::size_t j = 0; j < bases_.size(); ++j)
      probs[j] = bases_[j].predict_proba(x);
    return probs;
  }

  bool degenerate() const { return degenerate_; }
  double constant() const { return constant_; }
  const std::array<BaseClassifier, 4>& bases() const { return bases_; }
  std::array<BaseClassifier, 4>& bases() { return bases_; }
  const LogisticRegression& meta() const { return meta_; }
  const StackingParams& params() const { return params_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  void set_parts(std::array<BaseClassifier, 4> bases, LogisticRegression meta,
                 StackingParams params, bool degenerate, double constant) {
    bases_ = std::move(bases);
    meta_ = std::move(meta);
    params_ = std::move(params);
    degenerate_ = degenerate;
    constant_ = constant;
  }

  friend bool operator==(const StackingModel& a, const StackingModel& b) {
    return a.bases_ == b.bases_ && a.meta_ == b.meta_ && a.params_ == b.params_ &&
           a.degenerate_ == b.degenerate_ && a.constant_ == b.constant_;
  }

 private:
  std::array<BaseClassifier, 4> bases_;
  LogisticRegression meta_;
  StackingParams params_;
  bool degenerate_ = false;
  double constant_ = 0.0;
  std::vector<std::string> warnings_;
};

inline StackingModel fit_stacking(const Matrix& x, std::span<const int> y,
                                  const StackingParams& params) {
  return StackingModel::fit(x, y, params);
}

inline std::pair<double, bool> predict_stacking(const StackingModel& model,
                                                std::span<const double> x) {
  return model.predict(x);
}

}  // namespace rtap

#endif  // RTAP_STACKING_HPP
