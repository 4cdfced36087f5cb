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

#ifndef RTAP_LOGISTIC_HPP
#define RTAP_LOGISTIC_HPP

#include <cmath>
#include <span>
#include <vector>

#include "rtap/common.hpp"

namespace rtap {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

struct LogisticParams {
  double l2 = 1.0;          // ridge strength on the weights (not the intercept)
  int max_iterations = 500;
  double tolerance = 1e-8;  // sup-norm of the gradient at convergence
  friend bool operator==(const LogisticParams&, const LogisticParams&) = default;
};

// L2-regularized logistic regression fit by gradient descent with
// backtracking line search on the mean cross-entropy objective
//
//   J(w, b) = (1/N) sum_i ce(sigmoid(w.x_i + b), y_i) + l2/(2N) |w|^2 .
class LogisticRegression {
 public:
  LogisticRegression() = default;
  LogisticRegression(std::vector<double> weights, double intercept)
      : weights_(std::move(weights)), intercept_(intercept) {}

  // Mean regularized cross-entropy at (weights, intercept).
  static double loss(const Matrix& x, std::span<const int> y,
                     std::span<const double> weights, double intercept, double l2) {
    check_shapes(x, y, weights);
    const double n = static_cast<double>(x.rows());
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double z = intercept;
      auto row = x.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) z += weights[j] * row[j];
      // log(1 + exp(-|z|)) form keeps the cross-entropy finite.
      double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      total += softplus - (y[i] == 1 ? z : 0.0);
    }
    double reg = 0.0;
    for (double w : weights) reg += w * w;
    return total / n + 0.5 * l2 * reg / n;
  }

  // Analytic gradient of loss() with respect to (weights..., intercept).
  static std::vector<double> gradient(const Matrix& x, std::span<const int> y,
                                      std::span<const double> weights, double intercept,
                                      double l2) {
    check_shapes(x, y, weights);
    const double n = static_cast<double>(x.rows());
    std::vector<double> grad(weights.size() + 1, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double z = intercept;
      auto row = x.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) z += weights[j] * row[j];
      double err = sigmoid(z) - (y[i] == 1 ? 1.0 : 0.0);
      for (std::size_t j = 0; j < row.size(); ++j) grad[j] += err * row[j];
      grad[weights.size()] += err;
    }
    for (std::size_t j = 0; j < weights.size(); ++j)
      grad[j] = (grad[j] + l2 * weights[j]) / n;
    grad[weights.size()] /= n;
    return grad;
  }

  struct FitInfo {
    bool converged = false;
    int iterations = 0;
    double final_loss = 0.0;
  };

  static LogisticRegression fit(const Matrix& x, std::span<const int> y,
                                const LogisticParams& params, FitInfo* info = nullptr) {
    std::vector<double> w(x.cols(), 0.0);
    double b = 0.0;
    double current = loss(x, y, w, b, params.l2);
    double step = 1.0;
    int iter = 0;
    bool converged = false;
    for (; iter < params.max_iterations; ++iter) {
      auto grad = gradient(x, y, w, b, params.l2);
      double sup = 0.0, norm2 = 0.0;
      for (double g : grad) {
        sup = std::max(sup, std::abs(g));
        norm2 += g * g;
      }
      if (sup < params.tolerance) {
        converged = true;
        break;
      }
      // Backtracking: halve until the Armijo condition holds.
      step *= 2.0;  // allow recovery after conservative steps
      bool moved = false;
      while (step > 1e-16) {
        std::vector<double> w2(w.size());
        for (std::size_t j = 0; j < w.size(); ++j) w2[j] = w[j] - step * grad[j];
        double b2 = b - step * grad[w.size()];
        double next = loss(x, y, w2, b2, params.l2);
        if (next <= current - 0.5 * step * norm2) {
          w = std::move(w2);
          b = b2;
          current = next;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;  // no descent possible at machine precision
    }
    if (info) {
      info->converged = converged;
      info->iterations = iter;
      info->final_loss = current;
    }
    return LogisticRegression(std::move(w), b);
  }

  double predict_proba(std::span<const double> x) const {
    if (x.size() != weights_.size())
      throw std::invalid_argument("LogisticRegression: feature width mismatch");
    double z = intercept_;
    for (std::size_t j = 0; j < x.size(); ++j) z += weights_[j] * x[j];
    return sigmoid(z);
  }

  const std::vector<double>& weights() const { return weights_; }
  double intercept() const { return intercept_; }

  friend bool operator==(const LogisticRegression&, const LogisticRegression&) = default;

 private:
  static void check_shapes(const Matrix& x, std::span<const int> y,
                           std::span<const double> weights) {
    if (x.rows() == 0) throw std::invalid_argument("LogisticRegression: empty dataset");
    if (y.size() != x.rows())
      throw std::invalid_argument("LogisticRegression: label count mismatch");
    if (weights.size() != x.cols())
      throw std::invalid_argument("LogisticRegression: weight width mismatch");
  }

  std::vector<double> weights_;
  double intercept_ = 0.0;
};

}  // namespace rtap

#endif  // RTAP_LOGISTIC_HPP
