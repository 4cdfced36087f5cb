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

#ifndef RTAP_SEVERITY_HPP
#define RTAP_SEVERITY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rtap/classify.hpp"
#include "rtap/common.hpp"

namespace rtap {

// Euclidean distance between two equal-dimension vectors.
inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("euclidean_distance: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

// One anomalous training row for the severity grader.
struct SeverityRow {
  std::vector<double> features;  // standardized
  int code = 1;                  // 1 = low, 2 = medium, 3 = high
};

// Integer replication factor per severity code; monotone non-decreasing
// with severity.
struct SamplingWeights {
  int low = 1;
  int medium = 1;
  int high = 1;

  int of(int code) const {
    switch (code) {
      case 1: return low;
      case 2: return medium;
      case 3: return high;
    }
    throw std::invalid_argument("SamplingWeights: code must be 1, 2 or 3");
  }

  void validate() const {
    if (low < 1 || medium < 1 || high < 1)
      throw std::invalid_argument("SamplingWeights: factors must be positive");
    if (medium < low || high < medium)
      throw std::invalid_argument(
          "SamplingWeights: factors must not decrease with severity");
  }

  friend bool operator==(const SamplingWeights&, const SamplingWeights&) = default;
};

// Inverse-frequency replication factors, capped at 10 and forced monotone:
// w(low) = 1, w(c) = clamp(ceil(count(low) / count(c)), 1, 10).
inline SamplingWeights default_sampling_weights(std::span<const SeverityRow> rows) {
  std::array<std::size_t, 4> counts{};
  for (const auto& row : rows) {
    if (row.code < 1 || row.code > 3)
      throw std::invalid_argument("severity rows must carry codes 1..3");
    ++counts[static_cast<std::size_t>(row.code)];
  }
  auto factor = [&](std::size_t c) -> int {
    if (counts[c] == 0 || counts[1] == 0) return 1;
    double ratio = static_cast<double>(counts[1]) / static_cast<double>(counts[c]);
    return std::clamp(static_cast<int>(std::ceil(ratio)), 1, 10);
  };
  SamplingWeights w;
  w.low = 1;
  w.medium = std::max(factor(2), w.low);
  w.high = std::max(factor(3), w.medium);
  return w;
}

// Replicates each anomalous row w(code) times, keeping the output stable
// by original index then replica index.
inline std::vector<SeverityRow> weighted_oversample(std::span<const SeverityRow> rows,
                                                    const SamplingWeights& weights) {
  weights.validate();
  std::vector<SeverityRow> out;
  for (const auto& row : rows) {
    int reps = weights.of(row.code);
    for (int r = 0; r < reps; ++r) out.push_back(row);
  }
  return out;
}

// 3-nearest-neighbor severity grader over oversampled anomalous rows.
// Prediction averages the three nearest codes and rounds half-up.
class SeverityKnnModel {
 public:
  static constexpr int kNeighbors = 3;

  SeverityKnnModel() = default;
  SeverityKnnModel(Matrix x, std::vector<int> codes, SamplingWeights weights)
      : x_(std::move(x)), codes_(std::move(codes)), weights_(weights) {}

  static SeverityKnnModel fit(std::span<const SeverityRow> rows,
                              const SamplingWeights& weights) {
    auto replicated = weighted_oversample(rows, weights);
    if (replicated.size() < kNeighbors)
      throw DataError("severity kNN needs at least " + std::to_string(kNeighbors) +
                      " anomalous rows after oversampling, got " +
                      std::to_string(replicated.size()));
    Matrix x(0, replicated.front().features.size());
    std::vector<int> codes;
    codes.reserve(replicated.size());
    for (const auto& row : replicated) {
      if (row.code < 1 || row.code > 3)
        throw std::invalid_argument("severity rows must carry codes 1..3");
      x.push_row(row.features);
      codes.push_back(row.code);
    }
    return SeverityKnnModel(std::move(x), std::move(codes), weights);
  }

  // Severity code in {1, 2, 3}. Neighbor ties at the k-boundary resolve
  // toward the lowest training index.
  int predict(std::span<const double> query) const {
    auto ids = detail::nearest_neighbors(x_, query, kNeighbors);
    double sum = 0.0;
    for (auto id : ids) sum += static_cast<double>(codes_[id]);
    double mean = sum / static_cast<double>(ids.size());
    int level = static_cast<int>(std::floor(mean + 0.5));  // round half-up
    return std::clamp(level, 1, 3);
  }

  std::size_t rows() const { return x_.rows(); }
  std::size_t dim() const { return x_.cols(); }
  const Matrix& x() const { return x_; }
  const std::vector<int>& codes() const { return codes_; }
  const SamplingWeights& weights() const { return weights_; }

  friend bool operator==(const SeverityKnnModel&, const SeverityKnnModel&) = default;

 private:
  Matrix x_;
  std::vector<int> codes_;
  SamplingWeights weights_;
};

inline SeverityKnnModel fit_knn_severity(std::span<const SeverityRow> rows,
                                         const SamplingWeights& weights) {
  return SeverityKnnModel::fit(rows, weights);
}

inline int predict_severity(const SeverityKnnModel& model,
                            std::span<const double> query) {
  return model.predict(query);
}

}  // namespace rtap

#endif  // RTAP_SEVERITY_HPP
