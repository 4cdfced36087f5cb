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

#ifndef RTAP_TESTS_HELPERS_HPP
#define RTAP_TESTS_HELPERS_HPP

#include <random>
#include <string>
#include <vector>

#include "rtap/common.hpp"
#include "rtap/hours.hpp"
#include "rtap/records.hpp"

namespace testutil {

inline rtap::HourStamp hour(const char* iso) {
  auto ts = rtap::parse_hour(iso);
  if (!ts) throw std::runtime_error(std::string("bad test timestamp: ") + iso);
  return *ts;
}

// A valid record whose eight features are base, base+0.01, ..., clamped
// into [0, 1] and reordered so each triple satisfies min <= avg <= max.
inline rtap::KpiRecord record(const std::string& server, rtap::HourStamp ts,
                              double base) {
  rtap::KpiRecord r;
  r.server_id = server;
  r.timestamp = ts;
  r.disk_usages.resize(2);
  for (std::size_t k = 0; k < r.feature_count(); ++k)
    r.set_feature(k, rtap::clamp01(base + 0.01 * static_cast<double>(k)));
  // max >= avg >= min within each triple
  r.cpu_max = rtap::clamp01(base + 0.02);
  r.cpu_avg = rtap::clamp01(base + 0.01);
  r.cpu_min = rtap::clamp01(base);
  r.mem_max = rtap::clamp01(base + 0.05);
  r.mem_avg = rtap::clamp01(base + 0.04);
  r.mem_min = rtap::clamp01(base + 0.03);
  return r;
}

inline std::vector<rtap::KpiRecord> series(const std::string& server,
                                           rtap::HourStamp start, int hours,
                                           double base = 0.3) {
  std::vector<rtap::KpiRecord> out;
  for (int h = 0; h < hours; ++h)
    out.push_back(record(server, start + h, base + 0.001 * h));
  return out;
}

inline rtap::Matrix random_matrix(std::size_t rows, std::size_t cols,
                                  std::mt19937_64& rng, double lo = 0.0,
                                  double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  rtap::Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

}  // namespace testutil

#endif  // RTAP_TESTS_HELPERS_HPP
