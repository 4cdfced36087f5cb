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

#include <catch2/catch_amalgamated.hpp>

#include "rtap/preprocess.hpp"

#include <random>
#include <sstream>

#include "helpers.hpp"

using namespace rtap;
using testutil::hour;

static const char* kKpiHeader =
    "server_id,timestamp,cpu_max,cpu_min,cpu_avg,mem_max,mem_min,mem_avg,disk0\n";

TEST_CASE("parse_kpi_csv handles an empty file with a valid header") {
  std::istringstream in(kKpiHeader);
  auto result = parse_kpi_csv(in);
  REQUIRE(result.records.empty());
  REQUIRE(result.diagnostics.empty());
}

TEST_CASE("parse_kpi_csv parses values without validating ranges") {
  std::istringstream in(std::string(kKpiHeader) +
                        "a,2021-01-01T00:00:00Z,1.50,0.1,0.2,0.5,0.3,0.4,0.6\n");
  auto result = parse_kpi_csv(in);
  REQUIRE(result.records.size() == 1);
  REQUIRE(result.records[0].cpu_max == 1.5);  // clean() clamps later, not the parser
}

TEST_CASE("parse_kpi_csv reports malformed rows with line numbers") {
  std::istringstream in(std::string(kKpiHeader) +
                        "a,2021-01-01T00:00:00Z,.5,.1,.2,.5,.3,.4,.6\n"
                        "a,not-a-time,.5,.1,.2,.5,.3,.4,.6\n"
                        "a,2021-01-01T02:00:00Z,.5,.1,bad,.5,.3,.4,.6\n");
  auto result = parse_kpi_csv(in);
  REQUIRE(result.records.size() == 1);
  REQUIRE(result.diagnostics.size() == 2);
  REQUIRE(result.diagnostics[0].line == 3);
  REQUIRE(result.diagnostics[1].line == 4);
}

TEST_CASE("parse_kpi_csv rejects bad headers outright") {
  std::istringstream missing("server_id,timestamp,cpu_max\n");
  REQUIRE_THROWS_AS(parse_kpi_csv(missing), DataError);
  std::istringstream unknown(
      "server_id,timestamp,cpu_max,cpu_min,cpu_avg,mem_max,mem_min,mem_avg,load\n");
  REQUIRE_THROWS_AS(parse_kpi_csv(unknown), DataError);
}

TEST_CASE("parse_alarm_csv maps severities and truncates to the hour") {
  std::istringstream in(
      "server_id,timestamp,severity,content\n"
      "a,2021-01-01T14:37:00Z,high,\"disk full, failover\"\n"
      "a,2021-01-01T15:00:00Z,CRITICAL,unknown token\n"
      "a,2021-01-01T16:02:00Z,low,ok\n");
  auto result = parse_alarm_csv(in);
  REQUIRE(result.records.size() == 2);
  REQUIRE(result.records[0].severity == Severity::high);
  REQUIRE(result.records[0].timestamp == hour("2021-01-01T14:00:00Z"));
  REQUIRE(result.records[0].content == "disk full, failover");
  REQUIRE(result.records[1].severity == Severity::low);
  REQUIRE(result.diagnostics.size() == 1);
  REQUIRE(result.diagnostics[0].line == 3);
}

TEST_CASE("clean is idempotent and leaves clean input untouched") {
  auto records = testutil::series("a", hour("2021-01-01T00:00:00Z"), 5);
  auto [once, report] = clean(records);
  REQUIRE(report.all_zero());
  REQUIRE(once.size() == records.size());
  auto [twice, report2] = clean(once);
  REQUIRE(report2.all_zero());
  REQUIRE(twice == once);
}

TEST_CASE("clean repairs a disordered triple by component sort") {
  auto rec = testutil::record("a", hour("2021-01-01T00:00:00Z"), 0.1);
  rec.cpu_max = 0.2;
  rec.cpu_min = 0.5;
  rec.cpu_avg = 0.3;
  auto [out, report] = clean(std::vector<KpiRecord>{rec});
  REQUIRE(report.triples_reordered == 1);
  REQUIRE(out[0].cpu_max == 0.5);
  REQUIRE(out[0].cpu_min == 0.2);
  REQUIRE(out[0].cpu_avg == 0.3);
}

TEST_CASE("clean clamps out-of-range values and collapses duplicates") {
  auto a = testutil::record("a", hour("2021-01-01T00:00:00Z"), 0.1);
  a.cpu_max = 1.3;
  auto dup = testutil::record("a", hour("2021-01-01T00:00:00Z"), 0.9);
  auto [out, report] = clean(std::vector<KpiRecord>{a, dup});
  REQUIRE(out.size() == 1);
  REQUIRE(report.duplicates_removed == 1);
  REQUIRE(report.values_clamped == 1);
  REQUIRE(out[0].cpu_max == 1.0);
  REQUIRE(out[0].cpu_avg == a.cpu_avg);  // first occurrence wins
}

TEST_CASE("fill_missing interpolates short gaps linearly") {
  auto start = hour("2021-01-01T00:00:00Z");
  std::vector<KpiRecord> series = {testutil::record("a", start, 0.0),
                                   testutil::record("a", start + 4, 0.4)};
  // 3 missing hours, max_gap 6: fills 0.1, 0.2, 0.3 on the first feature.
  for (std::size_t k = 0; k < series[0].feature_count(); ++k) {
    series[0].set_feature(k, 0.0);
    series[1].set_feature(k, 0.4);
  }
  auto [segments, report] = fill_missing(series, 6);
  REQUIRE(segments.size() == 1);
  REQUIRE(report.gaps_filled == 3);
  const auto& seg = segments[0];
  REQUIRE(seg.size() == 5);
  for (int g = 0; g < 5; ++g) {
    REQUIRE(seg[static_cast<std::size_t>(g)].timestamp == start + g);
    for (std::size_t k = 0; k < 8; ++k)
      REQUIRE_THAT(seg[static_cast<std::size_t>(g)].feature(k),
                   Catch::Matchers::WithinAbs(0.1 * g, 1e-12));
  }
}

TEST_CASE("fill_missing midpoint of a single-hour gap") {
  auto start = hour("2021-01-01T00:00:00Z");
  std::vector<KpiRecord> series = {testutil::record("a", start, 0.0),
                                   testutil::record("a", start + 2, 0.0)};
  series[0].set_feature(0, 0.2);
  series[1].set_feature(0, 0.4);
  auto [segments, report] = fill_missing(series, 6);
  REQUIRE(report.gaps_filled == 1);
  REQUIRE_THAT(segments[0][1].feature(0), Catch::Matchers::WithinAbs(0.3, 1e-12));
}

TEST_CASE("fill_missing splits on gaps beyond the limit and fabricates nothing") {
  auto start = hour("2021-01-01T00:00:00Z");
  std::vector<KpiRecord> series = {testutil::record("a", start, 0.1),
                                   testutil::record("a", start + 8, 0.2)};
  auto [segments, report] = fill_missing(series, 6);  // gap of 7 > 6
  REQUIRE(segments.size() == 2);
  REQUIRE(report.gaps_filled == 0);
  REQUIRE(report.segments_split == 1);
  REQUIRE(segments[0].size() == 1);
  REQUIRE(segments[1].size() == 1);
}

TEST_CASE("fill_missing never alters observed values") {
  auto start = hour("2021-01-01T00:00:00Z");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<KpiRecord> series;
  HourStamp ts = start;
  for (int i = 0; i < 30; ++i) {
    series.push_back(testutil::record("a", ts, dist(rng)));
    ts = ts + 1 + (i % 5 == 0 ? static_cast<std::int64_t>(dist(rng) * 4) : 0);
  }
  auto [segments, report] = fill_missing(series, 6);
  std::size_t observed = 0;
  for (const auto& seg : segments)
    for (const auto& rec : seg)
      for (const auto& orig : series)
        if (orig.timestamp == rec.timestamp) {
          REQUIRE(rec == orig);
          ++observed;
        }
  REQUIRE(observed == series.size());
}

TEST_CASE("scaler standardizes with train statistics and inverts exactly") {
  std::mt19937_64 rng(11);
  auto train = testutil::random_matrix(200, 5, rng, -3.0, 7.0);
  auto scaler = Scaler::fit(train);

  SECTION("applied training columns have mean 0") {
    auto z = scaler.apply(train);
    for (std::size_t c = 0; c < train.cols(); ++c) {
      double mean = 0.0;
      for (std::size_t r = 0; r < train.rows(); ++r) mean += z(r, c);
      REQUIRE_THAT(mean / static_cast<double>(train.rows()),
                   Catch::Matchers::WithinAbs(0.0, 1e-9));
    }
  }

  SECTION("apply then invert recovers the input to 1e-9 relative") {
    auto round_trip = scaler.invert(scaler.apply(train));
    for (std::size_t r = 0; r < train.rows(); ++r)
      for (std::size_t c = 0; c < train.cols(); ++c)
        REQUIRE_THAT(round_trip(r, c),
                     Catch::Matchers::WithinRel(train(r, c), 1e-9));
  }

  SECTION("columns {0,1} standardize to +-1 under population std 0.5") {
    Matrix m(2, 1);
    m(0, 0) = 0.0;
    m(1, 0) = 1.0;
    auto s = Scaler::fit(m);
    REQUIRE_THAT(s.mean()[0], Catch::Matchers::WithinAbs(0.5, 1e-15));
    REQUIRE_THAT(s.stddev()[0], Catch::Matchers::WithinAbs(0.5, 1e-15));
    auto z = s.apply(m);
    REQUIRE_THAT(z(0, 0), Catch::Matchers::WithinAbs(-1.0, 1e-12));
    REQUIRE_THAT(z(1, 0), Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("scaler floors zero-variance columns and flags them") {
  Matrix m(10, 2);
  for (std::size_t r = 0; r < 10; ++r) {
    m(r, 0) = 0.5;
    m(r, 1) = static_cast<double>(r);
  }
  auto scaler = Scaler::fit(m);
  auto floored = scaler.floored_columns();
  REQUIRE(floored == std::vector<std::size_t>{0});
  auto z = scaler.apply(m);
  for (std::size_t r = 0; r < 10; ++r) REQUIRE(z(r, 0) == 0.0);  // centered constant
}

TEST_CASE("scaler fit ignores test rows entirely") {
  std::mt19937_64 rng(13);
  auto train = testutil::random_matrix(50, 3, rng);
  auto test = testutil::random_matrix(20, 3, rng);
  auto scaler = Scaler::fit(train);
  // Perturbing would-be test rows cannot change a scaler fit on train.
  for (std::size_t r = 0; r < test.rows(); ++r)
    for (std::size_t c = 0; c < test.cols(); ++c) test(r, c) += 100.0;
  auto scaler2 = Scaler::fit(train);
  REQUIRE(scaler == scaler2);
}

TEST_CASE("apply_tiled standardizes each per-hour block with the same stats") {
  Matrix train(2, 2);
  train(0, 0) = 0.0;
  train(0, 1) = 10.0;
  train(1, 0) = 1.0;
  train(1, 1) = 20.0;
  auto scaler = Scaler::fit(train);
  std::vector<double> lagged = {0.0, 10.0, 1.0, 20.0};  // two blocks of width 2
  scaler.apply_tiled(lagged);
  REQUIRE_THAT(lagged[0], Catch::Matchers::WithinAbs(-1.0, 1e-12));
  REQUIRE_THAT(lagged[1], Catch::Matchers::WithinAbs(-1.0, 1e-12));
  REQUIRE_THAT(lagged[2], Catch::Matchers::WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(lagged[3], Catch::Matchers::WithinAbs(1.0, 1e-12));
}
