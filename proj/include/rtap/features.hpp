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

#ifndef RTAP_FEATURES_HPP
#define RTAP_FEATURES_HPP

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtap/common.hpp"
#include "rtap/hours.hpp"
#include "rtap/records.hpp"

namespace rtap {

// Fixed layout of an engineered feature vector:
//
//   [ features(t), features(t-1), ..., features(t-L) ]
//
// where features(h) is the per-hour KPI block in the order
// cpu(max,min,avg), mem(max,min,avg), then disks in mount order. The
// mapping index <-> (hour offset, KPI name) is bijective.
struct FeatureLayout {
  std::vector<std::string> per_hour_names;
  int lag = 0;

  static FeatureLayout make(std::size_t n_disks, int lag) {
    FeatureLayout layout;
    layout.per_hour_names = {"cpu_max", "cpu_min", "cpu_avg",
                             "mem_max", "mem_min", "mem_avg"};
    for (std::size_t i = 0; i < n_disks; ++i)
      layout.per_hour_names.push_back("disk" + std::to_string(i));
    layout.lag = lag;
    return layout;
  }

  std::size_t per_hour() const { return per_hour_names.size(); }
  std::size_t dim() const { return per_hour() * (lag + 1); }

  std::size_t index_of(int hour_offset, std::size_t kpi) const {
    return static_cast<std::size_t>(hour_offset) * per_hour() + kpi;
  }

  // Inverse of index_of: (hour offset back from t, KPI name).
  std::pair<int, std::string> at(std::size_t index) const {
    return {static_cast<int>(index / per_hour()), per_hour_names[index % per_hour()]};
  }

  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

struct FeatureRow {
  std::string server_id;
  HourStamp timestamp;  // the t of the vector; lags reach back to t-L
  std::vector<double> values;
};

struct LabeledRow {
  std::string server_id;
  HourStamp timestamp;            // feature time t
  std::vector<double> features;   // layout.dim() values at t
  std::vector<double> target;     // per-hour KPI block at t+1
  Severity severity = Severity::normal;  // at t+1
};

struct LabeledDataset {
  FeatureLayout layout;
  std::vector<LabeledRow> rows;

  bool is_anomaly(std::size_t i) const { return rows[i].severity != Severity::normal; }
};

struct JoinReport {
  std::size_t rows_dropped = 0;           // feature rows with no KPI record at t+1
  std::size_t alarms_unknown_server = 0;  // skipped with a warning
  std::vector<std::string> warnings;
};

// Builds lagged feature vectors from hour-ordered records. Records may
// cover several servers but must be sorted by (server_id, timestamp) with
// unique keys; anything else is rejected. A gap of more than one hour
// starts a fresh lag context, so vectors never mix values across gaps.
// Servers (or segments) shorter than L+1 hours contribute no rows.
inline std::vector<FeatureRow> build_feature_matrix(std::span<const KpiRecord> records,
                                                    int lag) {
  if (lag < 0) throw std::invalid_argument("build_feature_matrix: lag must be >= 0");
  std::vector<FeatureRow> out;
  if (records.empty()) return out;

  const std::size_t per_hour = records.front().feature_count();
  const std::size_t dim = per_hour * (lag + 1);

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.feature_count() != per_hour)
      throw DataError("build_feature_matrix: non-uniform feature arity at server " +
                      r.server_id);
    if (i > 0) {
      const auto& p = records[i - 1];
      if (r.server_id < p.server_id ||
          (r.server_id == p.server_id && r.timestamp <= p.timestamp))
        throw DataError(
            "build_feature_matrix: input not sorted by (server_id, timestamp) near " +
            r.server_id + " " + format_hour(r.timestamp));
    }
  }

  std::size_t history = 0;  // consecutive in-segment hours ending at i
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    bool contiguous = i > 0 && records[i - 1].server_id == r.server_id &&
                      records[i - 1].timestamp.next() == r.timestamp;
    history = contiguous ? history + 1 : 0;
    if (history < static_cast<std::size_t>(lag)) continue;

    FeatureRow row;
    row.server_id = r.server_id;
    row.timestamp = r.timestamp;
    row.values.reserve(dim);
    for (int off = 0; off <= lag; ++off) {
      const auto& src = records[i - static_cast<std::size_t>(off)];
      for (std::size_t k = 0; k < per_hour; ++k) row.values.push_back(src.feature(k));
    }
    out.push_back(std::move(row));
  }
  return out;
}

namespace detail {

struct ServerHourKey {
  std::string server;
  std::int64_t hour;
  bool operator==(const ServerHourKey&) const = default;
};

struct ServerHourHash {
  std::size_t operator()(const ServerHourKey& k) const {
    return std::hash<std::string>{}(k.server) ^
           (std::hash<std::int64_t>{}(k.hour) * 0x9e3779b97f4a7c15ULL);
  }
};

}  // namespace detail

// Labels each feature row with the true KPI block and the alarm severity
// at t+1. Rows whose t+1 KPI record is missing are dropped and counted.
// When several alarms land on one server-hour the maximum severity wins.
// Alarms naming a server absent from the KPI data are skipped with a
// warning.
inline std::pair<LabeledDataset, JoinReport> join_alarms(
    std::span<const FeatureRow> features, std::span<const KpiRecord> kpi_records,
    std::span<const AlarmRecord> alarms, const FeatureLayout& layout) {
  std::unordered_map<detail::ServerHourKey, const KpiRecord*, detail::ServerHourHash>
      kpi_index;
  std::unordered_map<std::string, bool> known_servers;
  for (const auto& r : kpi_records) {
    kpi_index.emplace(detail::ServerHourKey{r.server_id, r.timestamp.hours}, &r);
    known_servers[r.server_id] = true;
  }

  JoinReport report;
  std::unordered_map<detail::ServerHourKey, Severity, detail::ServerHourHash>
      alarm_index;
  for (const auto& a : alarms) {
    if (!known_servers.count(a.server_id)) {
      ++report.alarms_unknown_server;
      report.warnings.push_back("alarm for unknown server " + a.server_id + " at " +
                                format_hour(a.timestamp) + " skipped");
      continue;
    }
    auto key = detail::ServerHourKey{a.server_id, a.timestamp.hours};
    auto [it, inserted] = alarm_index.emplace(key, a.severity);
    if (!inserted && severity_code(a.severity) > severity_code(it->second))
      it->second = a.severity;
  }

  LabeledDataset ds;
  ds.layout = layout;
  ds.rows.reserve(features.size());
  for (const auto& f : features) {
    HourStamp target_ts = f.timestamp.next();
    auto kpi_it = kpi_index.find(detail::ServerHourKey{f.server_id, target_ts.hours});
    if (kpi_it == kpi_index.end()) {
      ++report.rows_dropped;
      continue;
    }
    LabeledRow row;
    row.server_id = f.server_id;
    row.timestamp = f.timestamp;
    row.features = f.values;
    const KpiRecord& target = *kpi_it->second;
    row.target.reserve(layout.per_hour());
    for (std::size_t k = 0; k < layout.per_hour(); ++k)
      row.target.push_back(target.feature(k));
    auto alarm_it = alarm_index.find(detail::ServerHourKey{f.server_id, target_ts.hours});
    row.severity = alarm_it == alarm_index.end() ? Severity::normal : alarm_it->second;
    ds.rows.push_back(std::move(row));
  }
  return {std::move(ds), std::move(report)};
}

struct SplitResult {
  LabeledDataset train;
  LabeledDataset test;
  std::vector<std::string> warnings;
};

// Chronological partition by target timestamp (t+1): rows whose target
// falls at or before the boundary train, the rest test.
inline SplitResult chronological_split(const LabeledDataset& ds, HourStamp boundary) {
  SplitResult result;
  result.train.layout = ds.layout;
  result.test.layout = ds.layout;
  for (const auto& row : ds.rows) {
    if (row.timestamp.next() <= boundary)
      result.train.rows.push_back(row);
    else
      result.test.rows.push_back(row);
  }
  if (result.train.rows.empty())
    result.warnings.push_back("split boundary " + format_hour(boundary) +
                              " precedes all data; training side is empty");
  if (result.test.rows.empty())
    result.warnings.push_back("split boundary " + format_hour(boundary) +
                              " follows all data; test side is empty");
  return result;
}

}  // namespace rtap

#endif  // RTAP_FEATURES_HPP
