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

#ifndef RTAP_RECORDS_HPP
#define RTAP_RECORDS_HPP

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rtap/common.hpp"
#include "rtap/csv.hpp"
#include "rtap/hours.hpp"

namespace rtap {

// Ordinal anomaly severity. Codes are the values averaged by the severity
// kNN; "normal" never appears on an alarm record.
enum class Severity : int {
  normal = 0,
  low = 1,
  medium = 2,
  high = 3,
};

constexpr int severity_code(Severity s) { return static_cast<int>(s); }

inline const char* severity_name(Severity s) {
  switch (s) {
    case Severity::normal: return "normal";
    case Severity::low: return "low";
    case Severity::medium: return "medium";
    case Severity::high: return "high";
  }
  return "?";
}

inline const char* severity_name(int code) {
  return severity_name(static_cast<Severity>(code));
}

inline std::optional<Severity> parse_severity(std::string_view token) {
  if (token == "low") return Severity::low;
  if (token == "medium") return Severity::medium;
  if (token == "high") return Severity::high;
  return std::nullopt;
}

// One server-hour of KPI readings. All usage values are fractions in
// [0, 1] after cleaning; min <= avg <= max within each triple.
struct KpiRecord {
  std::string server_id;
  HourStamp timestamp;
  double cpu_max = 0, cpu_min = 0, cpu_avg = 0;
  double mem_max = 0, mem_min = 0, mem_avg = 0;
  std::vector<double> disk_usages;

  std::size_t feature_count() const { return 6 + disk_usages.size(); }

  double feature(std::size_t i) const {
    switch (i) {
      case 0: return cpu_max;
      case 1: return cpu_min;
      case 2: return cpu_avg;
      case 3: return mem_max;
      case 4: return mem_min;
      case 5: return mem_avg;
      default: return disk_usages.at(i - 6);
    }
  }

  void set_feature(std::size_t i, double v) {
    switch (i) {
      case 0: cpu_max = v; return;
      case 1: cpu_min = v; return;
      case 2: cpu_avg = v; return;
      case 3: mem_max = v; return;
      case 4: mem_min = v; return;
      case 5: mem_avg = v; return;
      default: disk_usages.at(i - 6) = v; return;
    }
  }

  friend bool operator==(const KpiRecord&, const KpiRecord&) = default;
};

// A labeled anomaly event at one server-hour. Content is carried through
// verbatim and never parsed.
struct AlarmRecord {
  std::string server_id;
  HourStamp timestamp;
  Severity severity = Severity::low;  // always >= low
  std::string content;

  friend bool operator==(const AlarmRecord&, const AlarmRecord&) = default;
};

inline std::vector<std::string> kpi_csv_header(std::size_t n_disks) {
  std::vector<std::string> h = {"server_id", "timestamp", "cpu_max", "cpu_min",
                                "cpu_avg",   "mem_max",   "mem_min", "mem_avg"};
  for (std::size_t i = 0; i < n_disks; ++i) h.push_back("disk" + std::to_string(i));
  return h;
}

inline void write_kpi_csv(std::ostream& out, std::span<const KpiRecord> records) {
  std::size_t n_disks = records.empty() ? 0 : records.front().disk_usages.size();
  write_csv_row(out, kpi_csv_header(n_disks));
  std::vector<std::string> fields;
  for (const auto& r : records) {
    if (r.disk_usages.size() != n_disks)
      throw DataError("write_kpi_csv: non-uniform disk arity for server " + r.server_id);
    fields.clear();
    fields.push_back(r.server_id);
    fields.push_back(format_hour(r.timestamp));
    for (std::size_t i = 0; i < r.feature_count(); ++i)
      fields.push_back(format_double(r.feature(i)));
    write_csv_row(out, fields);
  }
}

inline void write_alarm_csv(std::ostream& out, std::span<const AlarmRecord> alarms) {
  write_csv_row(out, {"server_id", "timestamp", "severity", "content"});
  for (const auto& a : alarms)
    write_csv_row(out, {a.server_id, format_hour(a.timestamp),
                        severity_name(a.severity), a.content});
}

}  // namespace rtap

#endif  // RTAP_RECORDS_HPP
