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

#include "rtap/model_io.hpp"
#include "rtap/pipeline.hpp"

#include <set>
#include <utility>

#include "helpers.hpp"

using namespace rtap;

namespace {

// Small, fast settings shared by the pipeline tests.
RunConfig small_config() {
  RunConfig config;
  config.seed = 404;
  config.forest.trees = 10;
  config.forest.max_depth = 8;
  config.stacking.folds = 3;
  config.stacking.base.rf.trees = 10;
  config.stacking.base.gbdt.rounds = 10;
  return config;
}

FleetData small_fleet(double imbalance = 25.0, std::uint64_t seed = 31,
                      std::size_t servers = 4, std::size_t hours = 500) {
  auto profile = ServerProfile::for_business("Biz");
  auto campaign = AnomalyCampaign::for_imbalance(imbalance, {0.4, 0.3, 0.3});
  return generate_fleet(profile, servers, hours, campaign, seed);
}

}  // namespace

TEST_CASE("bundle round-trip reproduces predictions exactly") {
  auto fleet = small_fleet();
  auto config = small_config();
  auto [model, summary] = train_pipeline(config, fleet.kpi, fleet.alarms);

  std::string serialized = serialize_bundle(model);
  auto loaded = deserialize_bundle(serialized);

  auto a = predict_pipeline(model, fleet.kpi);
  auto b = predict_pipeline(loaded, fleet.kpi);
  REQUIRE(a.rows.size() == b.rows.size());
  REQUIRE_FALSE(a.rows.empty());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    REQUIRE(a.rows[i].server_id == b.rows[i].server_id);
    REQUIRE(a.rows[i].predicted == b.rows[i].predicted);
    REQUIRE(a.rows[i].probability == b.rows[i].probability);
    REQUIRE(a.rows[i].is_anomaly == b.rows[i].is_anomaly);
    REQUIRE(a.rows[i].severity == b.rows[i].severity);
  }

  // And the re-serialized loaded bundle is byte-identical.
  REQUIRE(serialize_bundle(loaded) == serialized);
}

TEST_CASE("training is deterministic: same inputs, same bundle bytes") {
  auto fleet = small_fleet();
  auto config = small_config();
  auto [a, summary_a] = train_pipeline(config, fleet.kpi, fleet.alarms);
  auto [b, summary_b] = train_pipeline(config, fleet.kpi, fleet.alarms);
  REQUIRE(serialize_bundle(a) == serialize_bundle(b));
}

TEST_CASE("bundle tampering and version drift are rejected") {
  auto fleet = small_fleet();
  auto [model, summary] = train_pipeline(small_config(), fleet.kpi, fleet.alarms);
  std::string good = serialize_bundle(model);

  SECTION("bit flip inside a section fails its checksum") {
    auto pos = good.find("\"mean\": [");
    REQUIRE(pos != std::string::npos);
    std::string bad = good;
    bad[pos + 10] = bad[pos + 10] == '1' ? '2' : '1';
    REQUIRE_THROWS_AS(deserialize_bundle(bad), ModelError);
  }

  SECTION("unknown format version is refused, never migrated") {
    auto pos = good.find("\"version\": 1");
    REQUIRE(pos != std::string::npos);
    std::string bad = good;
    bad.replace(pos, 12, "\"version\": 2");
    REQUIRE_THROWS_AS(deserialize_bundle(bad), ModelError);
  }

  SECTION("garbage is reported as a model error") {
    REQUIRE_THROWS_AS(deserialize_bundle("not json"), ModelError);
  }
}

TEST_CASE("zero-alarm training degrades gracefully") {
  auto profile = ServerProfile::for_business("Biz");
  auto fleet = generate_fleet(profile, 3, 300, AnomalyCampaign{}, 8);
  auto config = small_config();
  auto [model, summary] = train_pipeline(config, fleet.kpi, fleet.alarms);

  REQUIRE(model.stacking.degenerate());
  REQUIRE_FALSE(model.severity.has_value());
  bool warned_stacking = false, warned_severity = false;
  for (const auto& w : summary.warnings) {
    warned_stacking = warned_stacking || w.find("single-class") != std::string::npos;
    warned_severity = warned_severity || w.find("severity stage skipped") != std::string::npos;
  }
  REQUIRE(warned_stacking);
  REQUIRE(warned_severity);

  // The marker survives persistence and predictions never flag anomalies.
  auto loaded = deserialize_bundle(serialize_bundle(model));
  REQUIRE_FALSE(loaded.severity.has_value());
  auto batch = predict_pipeline(loaded, fleet.kpi);
  for (const auto& row : batch.rows) {
    REQUIRE_FALSE(row.is_anomaly);
    REQUIRE(row.severity == 0);
  }
}

TEST_CASE("predictions for t+1 ignore anything after t") {
  auto fleet = small_fleet(25.0, 77, 3, 400);
  auto config = small_config();
  config.train_boundary = fleet.kpi.front().timestamp + 300;
  auto [model, summary] = train_pipeline(config, fleet.kpi, fleet.alarms);

  HourStamp at = fleet.kpi.front().timestamp + 350;
  std::vector<KpiRecord> visible;
  for (const auto& r : fleet.kpi)
    if (r.timestamp < at) visible.push_back(r);

  auto from_truncated = predict_pipeline(model, visible, at);
  auto from_full = predict_pipeline(model, fleet.kpi, at);  // future rows appended
  REQUIRE(from_truncated.rows.size() == from_full.rows.size());
  for (std::size_t i = 0; i < from_full.rows.size(); ++i) {
    REQUIRE(from_truncated.rows[i].server_id == from_full.rows[i].server_id);
    REQUIRE(from_truncated.rows[i].predicted == from_full.rows[i].predicted);
    REQUIRE(from_truncated.rows[i].probability == from_full.rows[i].probability);
    REQUIRE(from_truncated.rows[i].is_anomaly == from_full.rows[i].is_anomaly);
    REQUIRE(from_truncated.rows[i].severity == from_full.rows[i].severity);
  }
}

TEST_CASE("evaluation refuses overlapping periods unless overridden") {
  auto fleet = small_fleet(25.0, 51, 3, 400);
  auto config = small_config();
  HourStamp boundary = fleet.kpi.front().timestamp + 300;
  config.train_boundary = boundary;
  auto [model, summary] = train_pipeline(config, fleet.kpi, fleet.alarms);

  SECTION("evaluating the training period is an error") {
    REQUIRE_THROWS_AS(evaluate_pipeline(model, config, fleet.kpi, fleet.alarms),
                      DataError);
  }
  SECTION("the after filter makes the test period disjoint") {
    EvaluateOptions options;
    options.after = boundary;
    auto report = evaluate_pipeline(model, config, fleet.kpi, fleet.alarms, options);
    REQUIRE(report.rmse_per_target.size() == 8);
    for (const auto& r : report.rmse_per_target) {
      REQUIRE(r.rfr >= 0.0);
      REQUIRE(r.naive > 0.0);
    }
  }
  SECTION("the override flag allows in-sample evaluation") {
    EvaluateOptions options;
    options.allow_overlap = true;
    REQUIRE_NOTHROW(evaluate_pipeline(model, config, fleet.kpi, fleet.alarms, options));
  }
}

TEST_CASE("a constant fleet is forecast exactly and scored perfectly") {
  auto profile = ServerProfile::for_business("Biz");
  profile.cpu_amplitude = 0.0;
  profile.cpu_sigma = 0.0;
  profile.cpu_spread_sigma = 0.0;
  profile.mem_amplitude = 0.0;
  profile.mem_sigma = 0.0;
  profile.mem_spread_sigma = 0.0;
  profile.disk_sigma = 0.0;
  profile.disk_drift = 0.0;
  auto fleet = generate_fleet(profile, 4, 200, AnomalyCampaign{}, 15);

  auto config = small_config();
  HourStamp boundary = fleet.kpi.front().timestamp + 150;
  config.train_boundary = boundary;
  auto [model, summary] = train_pipeline(config, fleet.kpi, fleet.alarms);

  EvaluateOptions options;
  options.after = boundary;
  auto report = evaluate_pipeline(model, config, fleet.kpi, fleet.alarms, options);
  for (const auto& r : report.rmse_per_target)
    REQUIRE_THAT(r.rfr, Catch::Matchers::WithinAbs(0.0, 1e-12));
  REQUIRE(report.per_class[0].has_value());
  REQUIRE(report.per_class[0]->f == 1.0);
  REQUIRE(report.absent_classes == std::vector<std::string>{"low", "medium", "high"});
  REQUIRE(report.macro_f05 == 1.0);
  REQUIRE(report.micro_f05 == 1.0);
}

TEST_CASE("an onset hour with precursor drift is flagged at its severity") {
  // High-severity events ramp up over the two hours before onset; given
  // enough training examples the forecaster lifts the t+1 estimate and
  // the classifier flags it before the first anomalous hour arrives.
  auto profile = ServerProfile::for_business("Biz");
  auto campaign = AnomalyCampaign::for_imbalance(20.0, {0.0, 0.0, 1.0});
  auto fleet = generate_fleet(profile, 6, 900, campaign, 12);

  auto config = small_config();
  config.forest.trees = 20;
  HourStamp boundary = fleet.kpi.front().timestamp + 700;
  config.train_boundary = boundary;
  auto [model, summary] = train_pipeline(config, fleet.kpi, fleet.alarms);
  REQUIRE(model.severity.has_value());

  // Find event onsets in the test window: alarm hours with no alarm the
  // hour before on the same server.
  std::set<std::pair<std::string, std::int64_t>> alarm_hours;
  for (const auto& a : fleet.alarms) alarm_hours.insert({a.server_id, a.timestamp.hours});
  std::vector<std::pair<std::string, HourStamp>> onsets;
  for (const auto& a : fleet.alarms) {
    if (a.timestamp <= boundary + 24) continue;
    if (a.timestamp.hours >= fleet.kpi.front().timestamp.hours + 890) continue;
    if (!alarm_hours.count({a.server_id, a.timestamp.hours - 1}))
      onsets.push_back({a.server_id, a.timestamp});
  }
  REQUIRE_FALSE(onsets.empty());

  std::size_t flagged_high = 0;
  for (const auto& [server, onset] : onsets) {
    auto batch = predict_pipeline(model, fleet.kpi, onset);
    for (const auto& row : batch.rows)
      if (row.server_id == server && row.is_anomaly && row.severity == 3)
        ++flagged_high;
  }
  CAPTURE(onsets.size(), flagged_high);
  // Onset hours are the hard case (no anomalous data is visible yet);
  // the precursor ramp must carry most of them over the line.
  REQUIRE(flagged_high * 2 >= onsets.size());
}

TEST_CASE("training demands a minimum row count") {
  auto profile = ServerProfile::for_business("Biz");
  auto fleet = generate_fleet(profile, 1, 30, AnomalyCampaign{}, 2);
  auto config = small_config();
  REQUIRE_THROWS_AS(train_pipeline(config, fleet.kpi, fleet.alarms), DataError);
}

TEST_CASE("prediction validates the disk arity against the bundle") {
  auto fleet = small_fleet();
  auto [model, summary] = train_pipeline(small_config(), fleet.kpi, fleet.alarms);
  auto profile = ServerProfile::for_business("Biz");
  profile.n_disks = 3;
  auto other = generate_fleet(profile, 2, 100, AnomalyCampaign{}, 5);
  REQUIRE_THROWS_AS(predict_pipeline(model, other.kpi), ModelError);
}

TEST_CASE("per-server histories shorter than the lag window are skipped") {
  auto fleet = small_fleet(25.0, 61, 2, 300);
  auto [model, summary] = train_pipeline(small_config(), fleet.kpi, fleet.alarms);

  // One extra server with a single trailing hour of data.
  auto extra = testutil::record("zzz-late", fleet.kpi.back().timestamp, 0.4);
  std::vector<KpiRecord> records = fleet.kpi;
  records.push_back(extra);
  auto batch = predict_pipeline(model, records);
  bool diagnosed = false;
  for (const auto& d : batch.diagnostics)
    diagnosed = diagnosed || d.find("zzz-late") != std::string::npos;
  REQUIRE(diagnosed);
  for (const auto& row : batch.rows) REQUIRE(row.server_id != "zzz-late");
}
