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

#ifndef RTAP_PREPROCESS_HPP
#define RTAP_PREPROCESS_HPP

#include <algorithm>
#include <cmath>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "rtap/common.hpp"
#include "rtap/csv.hpp"
#include "rtap/records.hpp"

namespace rtap {

// One skipped or repaired input row.
struct ParseDiagnostic {
  std::size_t line = 0;
  std::string message;
};

template <typename T>
struct ParseResult {
  std::vector<T> records;
  std::vector<ParseDiagnostic> diagnostics;
};

// KPI CSV schema: server_id, timestamp, cpu_max, cpu_min, cpu_avg,
// mem_max, mem_min, mem_avg, disk0..diskN. Disk arity comes from the
// header and must be uniform for the file. Malformed rows are reported
// with their line number and skipped; a bad header is fatal.
inline ParseResult<KpiRecord> parse_kpi_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  std::size_t line = 0;
  if (!reader.next(fields, line)) throw DataError("KPI CSV: missing header row");

  const std::vector<std::string> fixed = {"server_id", "timestamp", "cpu_max",
                                          "cpu_min",   "cpu_avg",   "mem_max",
                                          "mem_min",   "mem_avg"};
  if (fields.size() < fixed.size())
    throw DataError("KPI CSV: header has " + std::to_string(fields.size()) +
                    " columns, expected at least " + std::to_string(fixed.size()));
  for (std::size_t i = 0; i < fixed.size(); ++i)
    if (fields[i] != fixed[i])
      throw DataError("KPI CSV: header column " + std::to_string(i + 1) + " is '" +
                      fields[i] + "', expected '" + fixed[i] + "'");
  std::size_t n_disks = fields.size() - fixed.size();
  for (std::size_t i = 0; i < n_disks; ++i)
    if (fields[fixed.size() + i].rfind("disk", 0) != 0)
      throw DataError("KPI CSV: unknown column '" + fields[fixed.size() + i] + "'");
  const std::size_t n_cols = fields.size();

  ParseResult<KpiRecord> result;
  while (reader.next(fields, line)) {
    if (fields.size() != n_cols) {
      result.diagnostics.push_back(
          {line, "expected " + std::to_string(n_cols) + " fields, got " +
                     std::to_string(fields.size())});
      continue;
    }
    KpiRecord rec;
    rec.server_id = fields[0];
    auto ts = parse_hour(fields[1]);
    if (rec.server_id.empty() || !ts) {
      result.diagnostics.push_back({line, rec.server_id.empty()
                                              ? "empty server_id"
                                              : "unparseable timestamp '" + fields[1] + "'"});
      continue;
    }
    rec.timestamp = *ts;
    rec.disk_usages.resize(n_disks);
    bool ok = true;
    for (std::size_t k = 0; k < 6 + n_disks && ok; ++k) {
      double v;
      if (parse_double(fields[2 + k], v) && std::isfinite(v)) {
        rec.set_feature(k, v);
      } else {
        result.diagnostics.push_back(
            {line, "unparseable value '" + fields[2 + k] + "' in column " +
                       std::to_string(3 + k)});
        ok = false;
      }
    }
    if (ok) result.records.push_back(std::move(rec));
  }
  return result;
}

// Alarm CSV schema: server_id, timestamp, severity in {low,medium,high},
// content. Timestamps are truncated to the hour of occurrence; unknown
// severity tokens skip the row with a diagnostic.
inline ParseResult<AlarmRecord> parse_alarm_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  std::size_t line = 0;
  if (!reader.next(fields, line)) throw DataError("alarm CSV: missing header row");
  const std::vector<std::string> expected = {"server_id", "timestamp", "severity",
                                             "content"};
  if (fields != expected)
    throw DataError("alarm CSV: header must be server_id,timestamp,severity,content");

  ParseResult<AlarmRecord> result;
  while (reader.next(fields, line)) {
    if (fields.size() != 4) {
      result.diagnostics.push_back({line, "expected 4 fields, got " +
                                              std::to_string(fields.size())});
      continue;
    }
    auto ts = parse_hour(fields[1]);
    if (fields[0].empty() || !ts) {
      result.diagnostics.push_back({line, fields[0].empty()
                                              ? "empty server_id"
                                              : "unparseable timestamp '" + fields[1] + "'"});
      continue;
    }
    auto severity = parse_severity(fields[2]);
    if (!severity) {
      result.diagnostics.push_back({line, "unknown severity '" + fields[2] + "'"});
      continue;
    }
    result.records.push_back({fields[0], *ts, *severity, fields[3]});
  }
  return result;
}

// Counts of repair actions; reconciles with the input/output row
// difference (clean: in - out = duplicates_removed; fill: out - in =
// gaps_filled).
struct CleaningReport {
  std::size_t duplicates_removed = 0;
  std::size_t values_clamped = 0;
  std::size_t triples_reordered = 0;
  std::size_t gaps_filled = 0;
  std::size_t segments_split = 0;

  bool all_zero() const {
    return duplicates_removed == 0 && values_clamped == 0 && triples_reordered == 0 &&
           gaps_filled == 0 && segments_split == 0;
  }

  CleaningReport& operator+=(const CleaningReport& o) {
    duplicates_removed += o.duplicates_removed;
    values_clamped += o.values_clamped;
    triples_reordered += o.triples_reordered;
    gaps_filled += o.gaps_filled;
    segments_split += o.segments_split;
    return *this;
  }
};

namespace detail {

// Restores min <= avg <= max by component-wise sort when violated.
inline bool repair_triple(double& mx, double& mn, double& avg) {
  if (mn <= avg && avg <= mx) return false;
  double a = mx, b = mn, c = avg;
  if (a < b) std::swap(a, b);
  if (b < c) std::swap(b, c);
  if (a < b) std::swap(a, b);
  mx = a;
  avg = b;
  mn = c;
  return true;
}

}  // namespace detail

// Canonicalizes raw records: sorts by (server_id, timestamp), collapses
// duplicate keys keeping the first occurrence, clamps usages into [0, 1]
// and repairs triple ordering. Total and idempotent.
inline std::pair<std::vector<KpiRecord>, CleaningReport> clean(
    std::span<const KpiRecord> records) {
  std::vector<const KpiRecord*> ptrs;
  ptrs.reserve(records.size());
  for (const auto& r : records) ptrs.push_back(&r);
  std::stable_sort(ptrs.begin(), ptrs.end(), [](const KpiRecord* a, const KpiRecord* b) {
    if (a->server_id != b->server_id) return a->server_id < b->server_id;
    return a->timestamp < b->timestamp;
  });

  CleaningReport report;
  std::vector<KpiRecord> out;
  out.reserve(ptrs.size());
  for (const KpiRecord* p : ptrs) {
    if (!out.empty() && out.back().server_id == p->server_id &&
        out.back().timestamp == p->timestamp) {
      ++report.duplicates_removed;
      continue;
    }
    KpiRecord rec = *p;
    for (std::size_t k = 0; k < rec.feature_count(); ++k) {
      double v = rec.feature(k);
      double clamped = clamp01(v);
      if (clamped != v) {
        rec.set_feature(k, clamped);
        ++report.values_clamped;
      }
    }
    if (detail::repair_triple(rec.cpu_max, rec.cpu_min, rec.cpu_avg))
      ++report.triples_reordered;
    if (detail::repair_triple(rec.mem_max, rec.mem_min, rec.mem_avg))
      ++report.triples_reordered;
    out.push_back(std::move(rec));
  }
  return {std::move(out), report};
}

// Fills interior gaps of up to max_gap hours by per-feature linear
// interpolation; longer gaps split the series into independent segments
// rather than fabricating values across an outage. Input must be one
// server's records, time-sorted with unique hours. Observed values are
// never altered.
inline std::pair<std::vector<std::vector<KpiRecord>>, CleaningReport> fill_missing(
    std::span<const KpiRecord> series, int max_gap) {
  if (max_gap < 0) throw std::invalid_argument("fill_missing: max_gap must be >= 0");
  CleaningReport report;
  std::vector<std::vector<KpiRecord>> segments;
  if (series.empty()) return {std::move(segments), report};

  segments.emplace_back();
  segments.back().push_back(series.front());
  for (std::size_t i = 1; i < series.size(); ++i) {
    const auto& prev = series[i - 1];
    const auto& cur = series[i];
    if (cur.server_id != prev.server_id || cur.timestamp <= prev.timestamp)
      throw DataError("fill_missing: series must be a single server, strictly "
                      "time-ordered");
    std::int64_t gap = (cur.timestamp - prev.timestamp) - 1;  // missing hours
    if (gap > max_gap) {
      ++report.segments_split;
      segments.emplace_back();
    } else if (gap > 0) {
      for (std::int64_t g = 1; g <= gap; ++g) {
        double w = static_cast<double>(g) / static_cast<double>(gap + 1);
        KpiRecord filled = prev;
        filled.timestamp = prev.timestamp + g;
        for (std::size_t k = 0; k < prev.feature_count(); ++k)
          filled.set_feature(k, (1.0 - w) * prev.feature(k) + w * cur.feature(k));
        segments.back().push_back(std::move(filled));
        ++report.gaps_filled;
      }
    }
    segments.back().push_back(cur);
  }
  return {std::move(segments), report};
}

// Groups mixed-server cleaned records, fills each server independently
// and returns the flattened gap-free records (segment boundaries survive
// as >1h jumps, which the feature builder treats as lag-context breaks).
inline std::pair<std::vector<KpiRecord>, CleaningReport> fill_missing_all(
    std::span<const KpiRecord> records, int max_gap) {
  std::vector<KpiRecord> out;
  CleaningReport report;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= records.size(); ++i) {
    if (i == records.size() || records[i].server_id != records[begin].server_id) {
      auto [segments, r] = fill_missing(records.subspan(begin, i - begin), max_gap);
      report += r;
      for (auto& seg : segments)
        for (auto& rec : seg) out.push_back(std::move(rec));
      begin = i;
    }
  }
  return {std::move(out), report};
}

// Per-column z-score parameters, fit on training data only. Zero-variance
// columns get a floored standard deviation instead of dividing by zero.
class Scaler {
 public:
  static constexpr double kStdFloor = 1e-8;

  Scaler() = default;
  Scaler(std::vector<double> mean, std::vector<double> std)
      : mean_(std::move(mean)), std_(std::move(std)) {}

  static Scaler fit(const Matrix& train) {
    if (train.rows() == 0) throw DataError("Scaler::fit: empty training matrix");
    std::vector<double> mean(train.cols(), 0.0), std(train.cols(), 0.0);
    for (std::size_t c = 0; c < train.cols(); ++c) {
      double sum = 0.0;
      for (std::size_t r = 0; r < train.rows(); ++r) sum += train(r, c);
      mean[c] = sum / static_cast<double>(train.rows());
      double ss = 0.0;
      for (std::size_t r = 0; r < train.rows(); ++r) {
        double d = train(r, c) - mean[c];
        ss += d * d;
      }
      // Population standard deviation, floored for constant columns.
      std[c] = std::max(std::sqrt(ss / static_cast<double>(train.rows())), kStdFloor);
    }
    return Scaler(std::move(mean), std::move(std));
  }

  std::size_t cols() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return std_; }

  std::vector<std::size_t> floored_columns() const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < std_.size(); ++c)
      if (std_[c] <= kStdFloor) out.push_back(c);
    return out;
  }

  void apply_row(std::span<double> row) const {
    check_width(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean_[c]) / std_[c];
  }

  void invert_row(std::span<double> row) const {
    check_width(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = row[c] * std_[c] + mean_[c];
  }

  Matrix apply(Matrix m) const {
    for (std::size_t r = 0; r < m.rows(); ++r) apply_row(m.row(r));
    return m;
  }

  Matrix invert(Matrix m) const {
    for (std::size_t r = 0; r < m.rows(); ++r) invert_row(m.row(r));
    return m;
  }

  // Standardizes a vector made of consecutive per-hour blocks (a lagged
  // feature vector) with the same per-hour statistics for every block.
  void apply_tiled(std::span<double> values) const {
    if (cols() == 0 || values.size() % cols() != 0)
      throw std::invalid_argument("Scaler::apply_tiled: size not a multiple of width");
    for (std::size_t off = 0; off < values.size(); off += cols())
      apply_row(values.subspan(off, cols()));
  }

  friend bool operator==(const Scaler&, const Scaler&) = default;

 private:
  void check_width(std::size_t n) const {
    if (n != mean_.size())
      throw std::invalid_argument("Scaler: expected width " +
                                  std::to_string(mean_.size()) + ", got " +
                                  std::to_string(n));
  }

  std::vector<double> mean_;
  std::vector<double> std_;
};

}  // namespace rtap

#endif  // RTAP_PREPROCESS_HPP
