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

#ifndef RTAP_BASELINES_HPP
#define RTAP_BASELINES_HPP

#include <numeric>
#include <span>
#include <stdexcept>
#include <string>

namespace rtap {

// Comparison forecasters for the next value of a single series.
struct BaselineModel {
  enum class Kind { naive, moving_average, exponential_smoothing };

  Kind kind = Kind::naive;
  int window = 3;
  double alpha = 0.3;

  static BaselineModel naive() { return {Kind::naive, 0, 0.0}; }
  static BaselineModel moving_average(int w) {
    if (w < 1) throw std::invalid_argument("moving average: window must be >= 1");
    return {Kind::moving_average, w, 0.0};
  }
  static BaselineModel exponential_smoothing(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw std::invalid_argument("exponential smoothing: alpha must be in (0, 1]");
    return {Kind::exponential_smoothing, 0, alpha};
  }
};

// Predicts the next value from the observed history:
//   naive: last value;
//   moving average: mean of the last w values;
//   exponential smoothing: s_1 = x_1, s_i = alpha*x_i + (1-alpha)*s_{i-1}.
inline double forecast_baseline(const BaselineModel& model,
                                std::span<const double> history) {
  if (history.empty())
    throw std::invalid_argument("forecast_baseline: history must be non-empty");
  switch (model.kind) {
    case BaselineModel::Kind::naive:
      return history.back();
    case BaselineModel::Kind::moving_average: {
      const std::size_t w = static_cast<std::size_t>(model.window);
      if (history.size() < w)
        throw std::invalid_argument("forecast_baseline: need " + std::to_string(w) +
                                    " values for the moving average, got " +
                                    std::to_string(history.size()));
      double sum = std::accumulate(history.end() - static_cast<std::ptrdiff_t>(w),
                                   history.end(), 0.0);
      return sum / static_cast<double>(w);
    }
    case BaselineModel::Kind::exponential_smoothing: {
      double s = history.front();
      for (std::size_t i = 1; i < history.size(); ++i)
        s = model.alpha * history[i] + (1.0 - model.alpha) * s;
      return s;
    }
  }
  throw std::logic_error("forecast_baseline: unknown baseline kind");
}

}  // namespace rtap

#endif  // RTAP_BASELINES_HPP
