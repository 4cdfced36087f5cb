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

#ifndef RTAP_METRICS_HPP
#define RTAP_METRICS_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtap/common.hpp"

namespace rtap {

// Square count table indexed by (true class, predicted class).
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t n_classes)
      : n_(n_classes), counts_(n_classes * n_classes, 0) {}

  static ConfusionMatrix from_labels(std::span<const int> truth,
                                     std::span<const int> predicted,
                                     std::size_t n_classes) {
    if (truth.size() != predicted.size())
      throw std::invalid_argument("ConfusionMatrix: label sequences differ in length");
    ConfusionMatrix cm(n_classes);
    for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
    return cm;
  }

  void add(int true_class, int predicted_class, std::size_t count = 1) {
    if (true_class < 0 || predicted_class < 0 ||
        static_cast<std::size_t>(true_class) >= n_ ||
        static_cast<std::size_t>(predicted_class) >= n_)
      throw std::invalid_argument("ConfusionMatrix::add: class out of range");
    counts_[static_cast<std::size_t>(true_class) * n_ +
            static_cast<std::size_t>(predicted_class)] += count;
  }

  std::size_t classes() const { return n_; }
  std::size_t at(std::size_t true_class, std::size_t predicted_class) const {
    return counts_[true_class * n_ + predicted_class];
  }

  std::size_t total() const {
    std::size_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }

  std::size_t true_positives(std::size_t cls) const { return at(cls, cls); }

  std::size_t false_positives(std::size_t cls) const {
    std::size_t fp = 0;
    for (std::size_t t = 0; t < n_; ++t)
      if (t != cls) fp += at(t, cls);
    return fp;
  }

  std::size_t false_negatives(std::size_t cls) const {
    std::size_t fn = 0;
    for (std::size_t p = 0; p < n_; ++p)
      if (p != cls) fn += at(cls, p);
    return fn;
  }

  // Row total: number of instances whose true class is cls.
  std::size_t support(std::size_t cls) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < n_; ++p) s += at(cls, p);
    return s;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> counts_;
};

// Root mean squared error over paired sequences.
inline double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size())
    throw std::invalid_argument("rmse: sequences differ in length");
  if (predicted.empty()) throw std::invalid_argument("rmse: empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    double d = predicted[i] - actual[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(predicted.size()));
}

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

// F_beta from precision and recall. When precision == recall the formula
// reduces identically to that value for any beta, so it is returned
// directly; this also covers the 0/0 -> 0 convention.
inline double f_beta(double precision, double recall, double beta) {
  if (precision == recall) return precision;
  double b2 = beta * beta;
  double denom = b2 * precision + recall;
  if (denom == 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / denom;
}

// Per-class precision, recall and F_beta with 0/0 -> 0 conventions.
inline PrfScores precision_recall_f(const ConfusionMatrix& cm, std::size_t cls,
                                    double beta) {
  if (beta <= 0.0) throw std::invalid_argument("precision_recall_f: beta must be > 0");
  double tp = static_cast<double>(cm.true_positives(cls));
  double fp = static_cast<double>(cm.false_positives(cls));
  double fn = static_cast<double>(cm.false_negatives(cls));
  PrfScores s;
  s.precision = tp + fp == 0.0 ? 0.0 : tp / (tp + fp);
  s.recall = tp + fn == 0.0 ? 0.0 : tp / (tp + fn);
  s.f = f_beta(s.precision, s.recall, beta);
  return s;
}

// Unweighted mean of per-class F_beta over the full class set.
inline double macro_f(const ConfusionMatrix& cm, double beta) {
  if (cm.classes() == 0) throw std::invalid_argument("macro_f: empty class set");
  double sum = 0.0;
  for (std::size_t c = 0; c < cm.classes(); ++c)
    sum += precision_recall_f(cm, c, beta).f;
  return sum / static_cast<double>(cm.classes());
}

// F_beta over pooled per-class TP/FP/FN counts. For single-label
// multi-class input the pooled precision and recall both equal accuracy.
inline double micro_f(const ConfusionMatrix& cm, double beta) {
  if (cm.classes() == 0) throw std::invalid_argument("micro_f: empty class set");
  double tp = 0.0, fp = 0.0, fn = 0.0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    tp += static_cast<double>(cm.true_positives(c));
    fp += static_cast<double>(cm.false_positives(c));
    fn += static_cast<double>(cm.false_negatives(c));
  }
  double precision = tp + fp == 0.0 ? 0.0 : tp / (tp + fp);
  double recall = tp + fn == 0.0 ? 0.0 : tp / (tp + fn);
  return f_beta(precision, recall, beta);
}

// RMSE of every compared forecaster on one KPI target.
struct TargetRmse {
  double rfr = 0.0;
  double naive = 0.0;
  double moving_average = 0.0;
  double exponential_smoothing = 0.0;
};

// Full evaluation output: forecast RMSE per target, binary anomaly scores
// and the four-class severity table. Classes absent from the test set
// carry no scores (reported as absent rather than zero).
struct EvaluationReport {
  static constexpr double kBeta = 0.5;

  std::string business;
  std::vector<std::string> target_names;
  std::vector<TargetRmse> rmse_per_target;

  PrfScores anomaly;  // binary: anomaly vs normal

  std::vector<std::optional<PrfScores>> per_class;  // normal, low, medium, high
  std::vector<std::size_t> class_support;
  double macro_f05 = 0.0;  // over classes present in the test set
  double micro_f05 = 0.0;
  std::vector<std::string> absent_classes;

  double imbalance_ratio = 0.0;  // normal : anomalous instances

  // Present when the bundle carries the flat multiclass baseline.
  std::optional<double> flat_macro_f05;
  std::optional<double> flat_micro_f05;
  std::vector<std::optional<PrfScores>> flat_per_class;
};

inline const char* severity_name_for_class(std::size_t c) {
  static const char* names[] = {"normal", "low", "medium", "high"};
  return c < 4 ? names[c] : "?";
}

// Assembles the report from the binary anomaly matrix and the four-class
// severity matrix. Macro averaging runs over classes with nonzero support
// only; absent classes are flagged by name.
inline EvaluationReport assemble_report(const std::vector<std::string>& target_names,
                                        const std::vector<TargetRmse>& rmse_per_target,
                                        const ConfusionMatrix& cm_binary,
                                        const ConfusionMatrix& cm_severity) {
  if (target_names.size() != rmse_per_target.size())
    throw std::invalid_argument("assemble_report: target name/RMSE count mismatch");
  if (cm_binary.classes() != 2 || cm_severity.classes() != 4)
    throw std::invalid_argument("assemble_report: expected 2-class and 4-class matrices");

  EvaluationReport report;
  report.target_names = target_names;
  report.rmse_per_target = rmse_per_target;
  report.anomaly = precision_recall_f(cm_binary, 1, EvaluationReport::kBeta);

  double macro_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    std::size_t support = cm_severity.support(c);
    report.class_support.push_back(support);
    if (support == 0) {
      report.per_class.emplace_back(std::nullopt);
      report.absent_classes.emplace_back(severity_name_for_class(c));
      continue;
    }
    auto scores = precision_recall_f(cm_severity, c, EvaluationReport::kBeta);
    macro_sum += scores.f;
    ++present;
    report.per_class.emplace_back(scores);
  }
  report.macro_f05 = present == 0 ? 0.0 : macro_sum / static_cast<double>(present);
  report.micro_f05 = micro_f(cm_severity, EvaluationReport::kBeta);

  std::size_t anomalous = cm_severity.support(1) + cm_severity.support(2) +
                          cm_severity.support(3);
  report.imbalance_ratio =
      anomalous == 0 ? 0.0
                     : static_cast<double>(cm_severity.support(0)) /
                           static_cast<double>(anomalous);
  return report;
}

}  // namespace rtap

#endif  // RTAP_METRICS_HPP
