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

#ifndef RTAP_PIPELINE_HPP
#define RTAP_PIPELINE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtap/baselines.hpp"
#include "rtap/common.hpp"
#include "rtap/features.hpp"
#include "rtap/forest.hpp"
#include "rtap/hours.hpp"
#include "rtap/metrics.hpp"
#include "rtap/parallel.hpp"
#include "rtap/preprocess.hpp"
#include "rtap/records.hpp"
#include "rtap/severity.hpp"
#include "rtap/stacking.hpp"
#include "rtap/synthgen.hpp"

namespace rtap {

// Every tunable of the end-to-end pipeline, with working defaults.
struct RunConfig {
  std::string business = "Biz";
  int lag = 3;
  int max_gap_hours = 6;
  std::uint64_t seed = 42;

  ForestParams forest;        // next-hour KPI forecaster
  StackingParams stacking;    // anomaly-existence classifier
  bool auto_severity_weights = true;
  SamplingWeights severity_weights{1, 1, 1};

  // Classifiers train on true next-hour KPI vectors by default; this
  // switches them to in-sample forecasts so training matches the serving
  // distribution (at the cost of training on fitted values).
  bool classify_on_forecasts = false;

  bool train_flat_baseline = false;  // also fit the flat multiclass forest
  ClassForestParams flat_baseline;   // its hyperparameters

  std::optional<HourStamp> train_boundary;  // keep rows with target <= boundary
  std::size_t min_train_rows = 50;

  // Comparison forecasters used by evaluation.
  int ma_window = 3;
  double es_alpha = 0.3;
};

struct TrainMetadata {
  std::uint64_t seed = 0;
  std::size_t train_rows = 0;
  std::array<std::size_t, 4> class_counts{};  // normal, low, medium, high
  HourStamp target_begin{};  // target-timestamp range covered by training
  HourStamp target_end{};

  friend bool operator==(const TrainMetadata&, const TrainMetadata&) = default;
};

// The persisted bundle: everything needed to serve predictions.
struct PipelineModel {
  static constexpr int kFormatVersion = 1;

  std::string business;
  FeatureLayout layout;
  Scaler scaler;  // per-hour KPI statistics from the training targets
  ForestModel forest;
  StackingModel stacking;
  std::optional<SeverityKnnModel> severity;         // absent when training had no alarms
  std::optional<ClassificationForest> flat_baseline;  // the single-forest comparison model
  TrainMetadata meta;
};

struct TrainSummary {
  std::size_t parsed_rows = 0;
  CleaningReport cleaning;
  std::size_t feature_rows = 0;
  JoinReport join;
  std::size_t train_rows = 0;
  std::array<std::size_t, 4> class_counts{};
  SamplingWeights severity_weights{1, 1, 1};
  std::vector<std::string> warnings;
};

namespace detail {

inline Matrix standardized_lagged(const LabeledDataset& ds, const Scaler& scaler) {
  Matrix x(0, ds.layout.dim());
  for (const auto& row : ds.rows) {
    std::vector<double> v = row.features;
    scaler.apply_tiled(v);
    x.push_row(v);
  }
  return x;
}

inline Matrix raw_targets(const LabeledDataset& ds) {
  Matrix y(0, ds.layout.per_hour());
  for (const auto& row : ds.rows) y.push_row(row.target);
  return y;
}

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const DataError& e) {
    throw DataError(std::string(stage) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string(stage) + ": " + e.what());
  }
}

}  // namespace detail

// Runs the full training pipeline on raw records: clean -> fill -> lagged
// features -> alarm join -> scaler fit -> forecaster fit -> stacking fit
// -> severity kNN fit. Classifiers train on standardized true next-hour
// KPI vectors (or in-sample forecasts, by configuration) and the severity
// stage sees only anomalous rows after weighted oversampling.
inline std::pair<PipelineModel, TrainSummary> train_pipeline(
    const RunConfig& config, std::span<const KpiRecord> records,
    std::span<const AlarmRecord> alarms) {
  PipelineModel model;
  TrainSummary summary;
  summary.parsed_rows = records.size();

  auto [cleaned, clean_report] =
      detail::run_stage("preprocess", [&] { return clean(records); });
  summary.cleaning = clean_report;
  auto [filled, fill_report] = detail::run_stage(
      "preprocess", [&] { return fill_missing_all(cleaned, config.max_gap_hours); });
  summary.cleaning += fill_report;
  if (filled.empty()) throw DataError("preprocess: no usable KPI rows");

  const std::size_t n_disks = filled.front().disk_usages.size();
  FeatureLayout layout = FeatureLayout::make(n_disks, config.lag);

  auto features = detail::run_stage(
      "features", [&] { return build_feature_matrix(filled, config.lag); });
  summary.feature_rows = features.size();
  auto [dataset, join_report] = detail::run_stage(
      "features", [&] { return join_alarms(features, filled, alarms, layout); });
  summary.join = join_report;
  for (const auto& w : join_report.warnings) summary.warnings.push_back(w);

  LabeledDataset train = std::move(dataset);
  if (config.train_boundary) {
    auto split = chronological_split(train, *config.train_boundary);
    for (const auto& w : split.warnings) summary.warnings.push_back(w);
    train = std::move(split.train);
  }
  if (train.rows.size() < config.min_train_rows)
    throw DataError("train: " + std::to_string(train.rows.size()) +
                    " training rows, need at least " +
                    std::to_string(config.min_train_rows));

  summary.train_rows = train.rows.size();
  for (const auto& row : train.rows)
    ++summary.class_counts[static_cast<std::size_t>(severity_code(row.severity))];

  model.business = config.business;
  model.layout = layout;
  model.meta.seed = config.seed;
  model.meta.train_rows = train.rows.size();
  model.meta.class_counts = summary.class_counts;
  model.meta.target_begin = train.rows.front().timestamp.next();
  model.meta.target_end = train.rows.front().timestamp.next();
  for (const auto& row : train.rows) {
    HourStamp target = row.timestamp.next();
    model.meta.target_begin = std::min(model.meta.target_begin, target);
    model.meta.target_end = std::max(model.meta.target_end, target);
  }

  // The scaler is fit on the training targets only; test-period rows
  // never influence it.
  model.scaler = detail::run_stage(
      "scaler", [&] { return Scaler::fit(detail::raw_targets(train)); });

  Matrix x = detail::standardized_lagged(train, model.scaler);
  Matrix y = detail::raw_targets(train);
  model.forest = detail::run_stage("forecast", [&] {
    ForestParams params = config.forest;
    params.rng_seed = derive_seed(config.seed, {1});
    return ForestModel::fit(x, y, params);
  });

  // Feature matrix the classifiers train on: standardized true KPI
  // vectors at t+1, or the forecaster's in-sample predictions of them.
  Matrix classifier_x(0, layout.per_hour());
  if (config.classify_on_forecasts) {
    std::vector<std::vector<double>> predictions(train.rows.size());
    parallel_for(train.rows.size(), [&](std::size_t i) {
      predictions[i] = model.forest.predict(x.row(i));
      model.scaler.apply_row(predictions[i]);
    });
    for (auto& p : predictions) classifier_x.push_row(p);
  } else {
    classifier_x = model.scaler.apply(y);
  }

  std::vector<int> anomaly_labels(train.rows.size());
  for (std::size_t i = 0; i < train.rows.size(); ++i)
    anomaly_labels[i] = train.is_anomaly(i) ? 1 : 0;

  model.stacking = detail::run_stage("identify", [&] {
    StackingParams params = config.stacking;
    params.rng_seed = derive_seed(config.seed, {2});
    return StackingModel::fit(classifier_x, anomaly_labels, params);
  });
  for (const auto& w : model.stacking.warnings()) summary.warnings.push_back(w);

  std::vector<SeverityRow> anomalous;
  for (std::size_t i = 0; i < train.rows.size(); ++i) {
    if (!train.is_anomaly(i)) continue;
    std::vector<double> v(classifier_x.row(i).begin(), classifier_x.row(i).end());
    anomalous.push_back({std::move(v), severity_code(train.rows[i].severity)});
  }
  SamplingWeights weights = config.auto_severity_weights
                                ? default_sampling_weights(anomalous)
                                : config.severity_weights;
  summary.severity_weights = weights;
  std::size_t replicated = 0;
  for (const auto& row : anomalous)
    replicated += static_cast<std::size_t>(weights.of(row.code));
  if (replicated < SeverityKnnModel::kNeighbors) {
    summary.warnings.push_back(
        "severity stage skipped: " + std::to_string(anomalous.size()) +
        " anomalous training rows (" + std::to_string(replicated) +
        " after oversampling, need " +
        std::to_string(int(SeverityKnnModel::kNeighbors)) + ")");
  } else {
    model.severity = detail::run_stage(
        "severity", [&] { return SeverityKnnModel::fit(anomalous, weights); });
  }

  if (config.train_flat_baseline) {
    std::vector<int> class_labels(train.rows.size());
    for (std::size_t i = 0; i < train.rows.size(); ++i)
      class_labels[i] = severity_code(train.rows[i].severity);
    model.flat_baseline = detail::run_stage("flat-baseline", [&] {
      ClassForestParams params = config.flat_baseline;
      params.rng_seed = derive_seed(config.seed, {3});
      return ClassificationForest::fit(classifier_x, class_labels, 4, params);
    });
  }
  return {std::move(model), std::move(summary)};
}

struct PredictionRow {
  std::string server_id;
  HourStamp timestamp;  // the predicted hour t+1
  std::vector<double> predicted;  // raw per-hour KPI values
  double probability = 0.0;
  bool is_anomaly = false;
  int severity = 0;  // 0 when not flagged or no severity model
};

struct PredictionBatch {
  std::vector<PredictionRow> rows;
  std::vector<std::string> diagnostics;  // skipped servers etc.
};

// Predicts hour `at` for every server with a full clean lag window ending
// at `at`-1. Rows timestamped after `at`-1 are discarded up front, so
// appending future data cannot change the output.
inline PredictionBatch predict_pipeline(const PipelineModel& model,
                                        std::span<const KpiRecord> raw_records,
                                        std::optional<HourStamp> at_hour = {},
                                        int max_gap_hours = 6) {
  auto [cleaned, clean_report] = clean(raw_records);
  if (cleaned.empty()) throw DataError("predict: no usable KPI rows");
  if (cleaned.front().disk_usages.size() != model.layout.per_hour() - 6)
    throw ModelError("predict: bundle expects " +
                     std::to_string(model.layout.per_hour() - 6) +
                     " disk columns, input has " +
                     std::to_string(cleaned.front().disk_usages.size()));

  HourStamp at;
  if (at_hour) {
    at = *at_hour;
  } else {
    at = cleaned.front().timestamp.next();
    for (const auto& r : cleaned) at = std::max(at, r.timestamp.next());
  }
  const HourStamp last_visible = at.prev();

  std::vector<KpiRecord> visible;
  visible.reserve(cleaned.size());
  for (auto& r : cleaned)
    if (r.timestamp <= last_visible) visible.push_back(std::move(r));

  PredictionBatch batch;
  if (visible.empty()) {
    batch.diagnostics.push_back("no data at or before " + format_hour(last_visible));
    return batch;
  }
  auto [filled, fill_report] = fill_missing_all(visible, max_gap_hours);
  auto features = build_feature_matrix(filled, model.layout.lag);

  std::vector<const FeatureRow*> latest;
  for (const auto& f : features)
    if (f.timestamp == last_visible) latest.push_back(&f);

  std::vector<std::string> all_servers;
  for (const auto& rec : filled)
    if (all_servers.empty() || all_servers.back() != rec.server_id)
      all_servers.push_back(rec.server_id);
  for (const auto& server : all_servers) {
    bool found = false;
    for (const auto* f : latest) found = found || f->server_id == server;
    if (!found)
      batch.diagnostics.push_back("server " + server + " has no clean window ending at " +
                                  format_hour(last_visible) + "; skipped");
  }

  batch.rows.resize(latest.size());
  parallel_for(latest.size(), [&](std::size_t i) {
    const FeatureRow& f = *latest[i];
    std::vector<double> x = f.values;
    model.scaler.apply_tiled(x);
    PredictionRow out;
    out.server_id = f.server_id;
    out.timestamp = at;
    out.predicted = model.forest.predict(x);

    std::vector<double> standardized = out.predicted;
    model.scaler.apply_row(standardized);
    auto [probability, flagged] = model.stacking.predict(standardized);
    out.probability = probability;
    out.is_anomaly = flagged;
    if (flagged && model.severity) out.severity = model.severity->predict(standardized);
    batch.rows[i] = std::move(out);
  });
  return batch;
}

struct EvaluateOptions {
  std::optional<HourStamp> after;  // drop rows with target <= after first
  bool allow_overlap = false;
};

// Scores a bundle on labeled test data: per-target RMSE of the forecaster
// against the naive / moving-average / smoothing baselines, the binary
// anomaly scores, and the four-class severity table (plus the flat
// baseline when the bundle carries one). Refuses test periods overlapping
// the training range unless explicitly overridden.
inline EvaluationReport evaluate_pipeline(const PipelineModel& model,
                                          const RunConfig& config,
                                          std::span<const KpiRecord> raw_records,
                                          std::span<const AlarmRecord> alarms,
                                          const EvaluateOptions& options = {}) {
  auto [cleaned, clean_report] = clean(raw_records);
  auto [filled, fill_report] = fill_missing_all(cleaned, config.max_gap_hours);
  if (filled.empty()) throw DataError("evaluate: no usable KPI rows");
  auto features = build_feature_matrix(filled, model.layout.lag);
  auto [dataset, join_report] = join_alarms(features, filled, alarms, model.layout);

  LabeledDataset test;
  test.layout = dataset.layout;
  for (auto& row : dataset.rows) {
    if (options.after && row.timestamp.next() <= *options.after) continue;
    test.rows.push_back(std::move(row));
  }
  if (test.rows.empty()) throw DataError("evaluate: no test rows in range");

  if (!options.allow_overlap) {
    for (const auto& row : test.rows)
      if (row.timestamp.next() <= model.meta.target_end)
        throw DataError(
            "evaluate: test rows overlap the training period ending " +
            format_hour(model.meta.target_end) +
            "; pass the overlap override to evaluate in-sample anyway");
  }

  const std::size_t per_hour = model.layout.per_hour();
  const int lag = model.layout.lag;
  if (config.ma_window > lag + 1)
    throw DataError("evaluate: moving-average window " +
                    std::to_string(config.ma_window) + " exceeds the visible lag window " +
                    std::to_string(lag + 1));

  struct RowScore {
    std::vector<double> forecast;
    int rtap_class = 0;
    int flat_class = 0;
    bool flagged = false;
  };
  std::vector<RowScore> scored(test.rows.size());
  parallel_for(test.rows.size(), [&](std::size_t i) {
    const auto& row = test.rows[i];
    std::vector<double> x = row.features;
    model.scaler.apply_tiled(x);
    RowScore s;
    s.forecast = model.forest.predict(x);
    std::vector<double> standardized = s.forecast;
    model.scaler.apply_row(standardized);
    auto [probability, flagged] = model.stacking.predict(standardized);
    s.flagged = flagged;
    s.rtap_class = 0;
    if (flagged) s.rtap_class = model.severity ? model.severity->predict(standardized) : 1;
    if (model.flat_baseline) s.flat_class = model.flat_baseline->predict_class(standardized);
    scored[i] = std::move(s);
  });

  std::vector<TargetRmse> rmse_per_target(per_hour);
  std::vector<double> pred(test.rows.size()), actual(test.rows.size());
  BaselineModel ma = BaselineModel::moving_average(config.ma_window);
  BaselineModel es = BaselineModel::exponential_smoothing(config.es_alpha);
  for (std::size_t k = 0; k < per_hour; ++k) {
    std::vector<double> naive_pred(test.rows.size()), ma_pred(test.rows.size()),
        es_pred(test.rows.size());
    for (std::size_t i = 0; i < test.rows.size(); ++i) {
      const auto& row = test.rows[i];
      pred[i] = scored[i].forecast[k];
      actual[i] = row.target[k];
      // Visible history for this target, oldest first: hours t-L .. t.
      std::vector<double> history(static_cast<std::size_t>(lag) + 1);
      for (int off = 0; off <= lag; ++off)
        history[static_cast<std::size_t>(lag - off)] =
            row.features[model.layout.index_of(off, k)];
      naive_pred[i] = forecast_baseline(BaselineModel::naive(), history);
      ma_pred[i] = forecast_baseline(ma, history);
      es_pred[i] = forecast_baseline(es, history);
    }
    rmse_per_target[k].rfr = rmse(pred, actual);
    rmse_per_target[k].naive = rmse(naive_pred, actual);
    rmse_per_target[k].moving_average = rmse(ma_pred, actual);
    rmse_per_target[k].exponential_smoothing = rmse(es_pred, actual);
  }

  ConfusionMatrix cm_binary(2), cm_severity(4), cm_flat(4);
  for (std::size_t i = 0; i < test.rows.size(); ++i) {
    int truth = severity_code(test.rows[i].severity);
    cm_binary.add(truth > 0 ? 1 : 0, scored[i].flagged ? 1 : 0);
    cm_severity.add(truth, scored[i].rtap_class);
    if (model.flat_baseline) cm_flat.add(truth, scored[i].flat_class);
  }

  EvaluationReport report = assemble_report(model.layout.per_hour_names,
                                            rmse_per_target, cm_binary, cm_severity);
  report.business = model.business;
  if (model.flat_baseline) {
    double macro_sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      if (cm_flat.support(c) == 0) {
        report.flat_per_class.emplace_back(std::nullopt);
        continue;
      }
      auto scores = precision_recall_f(cm_flat, c, EvaluationReport::kBeta);
      report.flat_per_class.emplace_back(scores);
      macro_sum += scores.f;
      ++present;
    }
    report.flat_macro_f05 = present == 0 ? 0.0 : macro_sum / static_cast<double>(present);
    report.flat_micro_f05 = micro_f(cm_flat, EvaluationReport::kBeta);
  }
  return report;
}

}  // namespace rtap

#endif  // RTAP_PIPELINE_HPP
