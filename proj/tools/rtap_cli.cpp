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

// Command-line front end for the RTAP pipeline: simulate | preprocess |
// train | predict | evaluate. Exit codes: 0 success, 1 usage error,
// 2 data error, 3 model error.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rtap/rtap.hpp"

namespace {

using rtap::Json;

rtap::HourStamp parse_hour_or_throw(const std::string& text, const char* flag) {
  auto ts = rtap::parse_hour(text);
  if (!ts)
    throw CLI::ValidationError(std::string(flag), "'" + text +
                                   "' is not a timestamp (expected "
                                   "YYYY-MM-DDTHH:00:00Z)");
  return *ts;
}

void print_diagnostics(const std::vector<rtap::ParseDiagnostic>& diagnostics,
                       const char* label) {
  for (const auto& d : diagnostics)
    std::cerr << label << " line " << d.line << ": " << d.message << "\n";
}

rtap::ParseResult<rtap::KpiRecord> read_kpi(const std::string& path) {
  auto in = rtap::open_input(path);
  auto parsed = rtap::parse_kpi_csv(in);
  print_diagnostics(parsed.diagnostics, "kpi");
  return parsed;
}

rtap::ParseResult<rtap::AlarmRecord> read_alarms(const std::string& path) {
  auto in = rtap::open_input(path);
  auto parsed = rtap::parse_alarm_csv(in);
  print_diagnostics(parsed.diagnostics, "alarm");
  return parsed;
}

Json prf_to_json(const rtap::PrfScores& s) {
  return Json{{"precision", s.precision}, {"recall", s.recall}, {"f05", s.f}};
}

Json per_class_to_json(const std::vector<std::optional<rtap::PrfScores>>& per_class) {
  Json out = Json::object();
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const char* name = rtap::severity_name_for_class(c);
    out[name] = per_class[c] ? prf_to_json(*per_class[c]) : Json(nullptr);
  }
  return out;
}

Json report_to_json(const rtap::EvaluationReport& report) {
  Json rmse = Json::object();
  for (std::size_t k = 0; k < report.target_names.size(); ++k) {
    const auto& r = report.rmse_per_target[k];
    rmse[report.target_names[k]] =
        Json{{"rfr", r.rfr},
             {"naive", r.naive},
             {"moving_average", r.moving_average},
             {"exponential_smoothing", r.exponential_smoothing}};
  }
  Json support = Json::object();
  for (std::size_t c = 0; c < report.class_support.size(); ++c)
    support[rtap::severity_name_for_class(c)] = report.class_support[c];

  Json severity{{"per_class", per_class_to_json(report.per_class)},
                {"support", std::move(support)},
                {"absent_classes", report.absent_classes},
                {"macro_f05", report.macro_f05},
                {"micro_f05", report.micro_f05}};

  Json flat(nullptr);
  if (report.flat_macro_f05)
    flat = Json{{"per_class", per_class_to_json(report.flat_per_class)},
                {"macro_f05", *report.flat_macro_f05},
                {"micro_f05", *report.flat_micro_f05}};

  return Json{{"business", report.business},
              {"forecast_rmse", std::move(rmse)},
              {"anomaly", prf_to_json(report.anomaly)},
              {"severity", std::move(severity)},
              {"imbalance_ratio", report.imbalance_ratio},
              {"flat_baseline", std::move(flat)}};
}

void write_predictions_csv(std::ostream& out, const rtap::PredictionBatch& batch,
                           const rtap::FeatureLayout& layout) {
  std::vector<std::string> header = {"server_id", "timestamp"};
  for (const auto& name : layout.per_hour_names) header.push_back("pred_" + name);
  header.insert(header.end(), {"anomaly_probability", "anomaly", "severity"});
  rtap::write_csv_row(out, header);
  for (const auto& row : batch.rows) {
    std::vector<std::string> fields = {row.server_id, rtap::format_hour(row.timestamp)};
    for (double v : row.predicted) fields.push_back(rtap::format_double(v));
    fields.push_back(rtap::format_double(row.probability));
    fields.push_back(row.is_anomaly ? "1" : "0");
    fields.push_back(row.severity == 0 ? "" : rtap::severity_name(row.severity));
    rtap::write_csv_row(out, fields);
  }
}

Json predictions_to_json(const rtap::PredictionBatch& batch,
                         const rtap::FeatureLayout& layout) {
  Json rows = Json::array();
  for (const auto& row : batch.rows) {
    Json predicted = Json::object();
    for (std::size_t k = 0; k < layout.per_hour_names.size(); ++k)
      predicted[layout.per_hour_names[k]] = row.predicted[k];
    rows.push_back(Json{{"server_id", row.server_id},
                        {"timestamp", rtap::format_hour(row.timestamp)},
                        {"predicted", std::move(predicted)},
                        {"anomaly_probability", row.probability},
                        {"anomaly", row.is_anomaly},
                        {"severity", row.severity == 0
                                         ? Json(nullptr)
                                         : Json(rtap::severity_name(row.severity))}});
  }
  return Json{{"predictions", std::move(rows)}};
}

struct SimulateOptions {
  std::string business = "Biz";
  std::size_t servers = 20;
  std::size_t hours = 3000;
  double imbalance = 0.0;  // 0 -> business default
  double missing_rate = 0.0;
  double noise_rate = 0.0;
  std::uint64_t seed = 42;
  std::string start = "2021-01-01T00:00:00Z";
  std::string out_kpi = "kpi.csv";
  std::string out_alarms = "alarms.csv";
};

int cmd_simulate(const SimulateOptions& opt) {
  auto profile = rtap::ServerProfile::for_business(opt.business);
  double ratio = opt.imbalance > 0.0 ? opt.imbalance
                                     : rtap::business_imbalance_ratio(opt.business);
  auto campaign = rtap::AnomalyCampaign::for_imbalance(ratio);
  auto start = parse_hour_or_throw(opt.start, "--start");
  auto fleet = rtap::generate_fleet(profile, opt.servers, opt.hours, campaign,
                                    opt.seed, start);

  std::vector<rtap::KpiRecord> kpi = std::move(fleet.kpi);
  if (opt.missing_rate > 0.0 || opt.noise_rate > 0.0) {
    auto [degraded, report] =
        rtap::corrupt(kpi, opt.missing_rate, opt.noise_rate, opt.seed);
    kpi = std::move(degraded);
    std::cerr << "corrupt: removed " << report.rows_removed << " rows, pushed "
              << report.values_out_of_range << " values out of range, injected "
              << report.duplicates_injected << " duplicates\n";
  }

  {
    auto out = rtap::open_output(opt.out_kpi);
    rtap::write_kpi_csv(out, kpi);
  }
  {
    auto out = rtap::open_output(opt.out_alarms);
    rtap::write_alarm_csv(out, fleet.alarms);
  }
  std::size_t anomalous_hours = 0;
  {
    std::string last_key;
    for (const auto& a : fleet.alarms) {
      std::string key = a.server_id + "@" + rtap::format_hour(a.timestamp);
      if (key != last_key) ++anomalous_hours;
      last_key = key;
    }
  }
  std::cout << "wrote " << kpi.size() << " KPI rows (" << opt.servers << " servers x "
            << opt.hours << " hours) and " << fleet.alarms.size() << " alarms covering "
            << anomalous_hours << " anomalous server-hours\n";
  return 0;
}

struct PreprocessOptions {
  std::string kpi;
  std::string out;
  int max_gap = 6;
};

int cmd_preprocess(const PreprocessOptions& opt) {
  auto parsed = read_kpi(opt.kpi);
  auto [cleaned, clean_report] = rtap::clean(parsed.records);
  auto [filled, fill_report] = rtap::fill_missing_all(cleaned, opt.max_gap);
  clean_report += fill_report;
  auto out = rtap::open_output(opt.out);
  rtap::write_kpi_csv(out, filled);
  std::cerr << "preprocess: " << parsed.records.size() << " rows in, " << filled.size()
            << " rows out; removed " << clean_report.duplicates_removed
            << " duplicates, clamped " << clean_report.values_clamped
            << " values, reordered " << clean_report.triples_reordered
            << " triples, filled " << clean_report.gaps_filled << " gap hours, split "
            << clean_report.segments_split << " segments\n";
  return 0;
}

struct TrainOptions {
  std::string kpi;
  std::string alarms;
  std::string model = "model.json";
  std::string boundary;
  std::vector<int> severity_weights;
  rtap::RunConfig config;
};

int cmd_train(TrainOptions& opt) {
  if (!opt.boundary.empty())
    opt.config.train_boundary = parse_hour_or_throw(opt.boundary, "--boundary");
  if (!opt.severity_weights.empty()) {
    if (opt.severity_weights.size() != 3)
      throw CLI::ValidationError("--severity-weights",
                                 "expected three factors: low,medium,high");
    opt.config.auto_severity_weights = false;
    opt.config.severity_weights = {opt.severity_weights[0], opt.severity_weights[1],
                                   opt.severity_weights[2]};
    opt.config.severity_weights.validate();
  }

  auto kpi = read_kpi(opt.kpi);
  auto alarms = read_alarms(opt.alarms);
  auto [model, summary] = rtap::train_pipeline(opt.config, kpi.records, alarms.records);
  rtap::save_bundle(model, opt.model);

  for (const auto& w : summary.warnings) std::cerr << "train: " << w << "\n";
  std::cout << "trained on " << summary.train_rows << " rows (normal "
            << summary.class_counts[0] << ", low " << summary.class_counts[1]
            << ", medium " << summary.class_counts[2] << ", high "
            << summary.class_counts[3] << ")\n"
            << "severity sampling weights: low x" << summary.severity_weights.low
            << ", medium x" << summary.severity_weights.medium << ", high x"
            << summary.severity_weights.high << "\n"
            << "model written to " << opt.model << "\n";
  return 0;
}

struct PredictOptions {
  std::string model;
  std::string kpi;
  std::string out;
  std::string at;
  std::string business;
  std::string format = "csv";
  int max_gap = 6;
};

int cmd_predict(const PredictOptions& opt) {
  auto model = rtap::load_bundle(opt.model);
  if (!opt.business.empty() && opt.business != model.business)
    throw rtap::ModelError("bundle was trained for business '" + model.business +
                           "', refusing to predict for '" + opt.business + "'");
  auto kpi = read_kpi(opt.kpi);
  std::optional<rtap::HourStamp> at;
  if (!opt.at.empty()) at = parse_hour_or_throw(opt.at, "--at");

  auto started = std::chrono::steady_clock::now();
  auto batch = rtap::predict_pipeline(model, kpi.records, at, opt.max_gap);
  auto elapsed = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - started)
                     .count();

  for (const auto& d : batch.diagnostics) std::cerr << "predict: " << d << "\n";
  auto out = rtap::open_output(opt.out);
  if (opt.format == "json")
    out << predictions_to_json(batch, model.layout).dump(1) << "\n";
  else
    write_predictions_csv(out, batch, model.layout);

  std::size_t flagged = 0;
  for (const auto& row : batch.rows) flagged += row.is_anomaly ? 1 : 0;
  std::cout << "predicted " << batch.rows.size() << " servers, " << flagged
            << " flagged anomalous; output " << opt.out << "\n";
  if (!batch.rows.empty())
    std::cerr << "predict: " << elapsed << " ms total, "
              << elapsed / static_cast<double>(batch.rows.size())
              << " ms per prediction\n";
  return 0;
}

struct EvaluateOptions {
  std::string model;
  std::string kpi;
  std::string alarms;
  std::string out = "report.json";
  std::string after;
  std::string business;
  bool allow_overlap = false;
  rtap::RunConfig config;
};

int cmd_evaluate(const EvaluateOptions& opt) {
  auto model = rtap::load_bundle(opt.model);
  if (!opt.business.empty() && opt.business != model.business)
    throw rtap::ModelError("bundle was trained for business '" + model.business +
                           "', refusing to evaluate '" + opt.business + "'");
  auto kpi = read_kpi(opt.kpi);
  auto alarms = read_alarms(opt.alarms);

  rtap::EvaluateOptions eval;
  eval.allow_overlap = opt.allow_overlap;
  if (!opt.after.empty()) eval.after = parse_hour_or_throw(opt.after, "--after");

  auto report = rtap::evaluate_pipeline(model, opt.config, kpi.records, alarms.records,
                                        eval);
  Json j = report_to_json(report);
  auto out = rtap::open_output(opt.out);
  out << j.dump(1) << "\n";
  std::cout << "anomaly F0.5 " << report.anomaly.f << ", macro F0.5 "
            << report.macro_f05 << ", micro F0.5 " << report.micro_f05;
  if (report.flat_macro_f05)
    std::cout << " (flat baseline macro " << *report.flat_macro_f05 << ")";
  std::cout << "; report written to " << opt.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RTAP: next-hour KPI forecasting, anomaly identification and "
               "severity grading for server fleets"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Configuration file (key = value, [section] per "
                                 "subcommand)");
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic KPI/alarm fleet");
  simulate->add_option("--business", sim.business, "Business tag: Biz, Mon, Ora or Trd")
      ->capture_default_str();
  simulate->add_option("--servers", sim.servers, "Fleet size")->capture_default_str();
  simulate->add_option("--hours", sim.hours, "Trace length in hours")
      ->capture_default_str();
  simulate->add_option("--imbalance", sim.imbalance,
                       "normal:anomalous ratio (0 = business default)")
      ->capture_default_str();
  simulate->add_option("--missing-rate", sim.missing_rate, "Row deletion rate")
      ->capture_default_str();
  simulate->add_option("--noise-rate", sim.noise_rate, "Noise injection rate")
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Generator seed")->capture_default_str();
  simulate->add_option("--start", sim.start, "First hour of the trace")
      ->capture_default_str();
  simulate->add_option("--out-kpi", sim.out_kpi, "KPI CSV path")->capture_default_str();
  simulate->add_option("--out-alarms", sim.out_alarms, "Alarm CSV path")
      ->capture_default_str();

  PreprocessOptions pre;
  auto* preprocess =
      app.add_subcommand("preprocess", "Clean a KPI CSV and fill short gaps");
  preprocess->add_option("--kpi", pre.kpi, "Raw KPI CSV")->required();
  preprocess->add_option("--out", pre.out, "Cleaned KPI CSV")->required();
  preprocess->add_option("--max-gap", pre.max_gap,
                         "Longest gap (hours) to fill by interpolation")
      ->capture_default_str();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a pipeline bundle");
  train_cmd->add_option("--kpi", train.kpi, "Training KPI CSV")->required();
  train_cmd->add_option("--alarms", train.alarms, "Training alarm CSV")->required();
  train_cmd->add_option("--model", train.model, "Output bundle path")
      ->capture_default_str();
  train_cmd->add_option("--business", train.config.business, "Business tag")
      ->capture_default_str();
  train_cmd->add_option("--boundary", train.boundary,
                        "Train only on rows with target timestamp <= this");
  train_cmd->add_option("--lag", train.config.lag, "Lag window L (hours)")
      ->capture_default_str();
  train_cmd->add_option("--max-gap", train.config.max_gap_hours, "Gap-fill limit")
      ->capture_default_str();
  train_cmd->add_option("--seed", train.config.seed, "Global seed")
      ->capture_default_str();
  train_cmd->add_option("--min-train-rows", train.config.min_train_rows,
                        "Minimum usable training rows")
      ->capture_default_str();
  train_cmd->add_option("--trees", train.config.forest.trees, "Forecast forest size")
      ->capture_default_str();
  train_cmd->add_option("--tree-depth", train.config.forest.max_depth,
                        "Forecast tree depth cap")
      ->capture_default_str();
  train_cmd->add_option("--min-split", train.config.forest.min_samples_split,
                        "Minimum samples to split a forecast tree node")
      ->capture_default_str();
  train_cmd->add_option("--feature-subset", train.config.forest.feature_subset_size,
                        "Features per split (0 = n/3)")
      ->capture_default_str();
  train_cmd->add_flag_callback(
      "--no-bootstrap", [&train] { train.config.forest.bootstrap = false; },
      "Disable bootstrap resampling in the forecast forest");
  train_cmd->add_option("--folds", train.config.stacking.folds,
                        "Stacking out-of-fold count")
      ->capture_default_str();
  train_cmd->add_option("--threshold", train.config.stacking.threshold,
                        "Anomaly decision threshold")
      ->capture_default_str();
  train_cmd->add_option("--dt-depth", train.config.stacking.base.dt_max_depth,
                        "Base decision-tree depth")
      ->capture_default_str();
  train_cmd->add_option("--rf-trees", train.config.stacking.base.rf.trees,
                        "Base random-forest size")
      ->capture_default_str();
  train_cmd->add_option("--rf-depth", train.config.stacking.base.rf.max_depth,
                        "Base random-forest depth")
      ->capture_default_str();
  train_cmd->add_option("--knn-k", train.config.stacking.base.knn_k, "Base kNN k")
      ->capture_default_str();
  train_cmd->add_option("--gbdt-rounds", train.config.stacking.base.gbdt.rounds,
                        "GBDT boosting rounds")
      ->capture_default_str();
  train_cmd->add_option("--gbdt-rate", train.config.stacking.base.gbdt.learning_rate,
                        "GBDT learning rate")
      ->capture_default_str();
  train_cmd->add_option("--gbdt-depth", train.config.stacking.base.gbdt.max_depth,
                        "GBDT tree depth")
      ->capture_default_str();
  train_cmd->add_option("--l2", train.config.stacking.meta.l2,
                        "Meta logistic-regression L2 strength")
      ->capture_default_str();
  train_cmd->add_option("--lr-iters", train.config.stacking.meta.max_iterations,
                        "Meta logistic-regression iteration cap")
      ->capture_default_str();
  train_cmd
      ->add_option("--severity-weights", train.severity_weights,
                   "Replication factors low,medium,high (default: inverse frequency)")
      ->delimiter(',');
  train_cmd->add_flag("--classify-on-forecasts", train.config.classify_on_forecasts,
                      "Train classifiers on in-sample forecasts instead of true "
                      "next-hour vectors");
  train_cmd->add_flag("--with-flat-baseline", train.config.train_flat_baseline,
                      "Also train the flat multiclass forest for comparison");
  train_cmd->add_option("--flat-trees", train.config.flat_baseline.trees,
                        "Flat baseline forest size")
      ->capture_default_str();
  train_cmd->add_option("--flat-depth", train.config.flat_baseline.max_depth,
                        "Flat baseline tree depth")
      ->capture_default_str();

  PredictOptions predict;
  auto* predict_cmd =
      app.add_subcommand("predict", "Predict the next hour for each server");
  predict_cmd->add_option("--model", predict.model, "Bundle path")->required();
  predict_cmd->add_option("--kpi", predict.kpi, "Recent KPI CSV")->required();
  predict_cmd->add_option("--out", predict.out, "Prediction output path")->required();
  predict_cmd->add_option("--at", predict.at,
                          "Hour to predict (default: last hour present + 1)");
  predict_cmd->add_option("--business", predict.business,
                          "Business tag guard (must match the bundle)");
  predict_cmd->add_option("--format", predict.format, "Output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  predict_cmd->add_option("--max-gap", predict.max_gap, "Gap-fill limit")
      ->capture_default_str();

  EvaluateOptions evaluate;
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "Score a bundle on labeled test data");
  evaluate_cmd->add_option("--model", evaluate.model, "Bundle path")->required();
  evaluate_cmd->add_option("--kpi", evaluate.kpi, "Test KPI CSV")->required();
  evaluate_cmd->add_option("--alarms", evaluate.alarms, "Test alarm CSV")->required();
  evaluate_cmd->add_option("--out", evaluate.out, "Report JSON path")
      ->capture_default_str();
  evaluate_cmd->add_option("--after", evaluate.after,
                           "Drop rows with target timestamp <= this first");
  evaluate_cmd->add_option("--business", evaluate.business,
                           "Business tag guard (must match the bundle)");
  evaluate_cmd->add_flag("--allow-overlap", evaluate.allow_overlap,
                         "Evaluate even if the test period overlaps training");
  evaluate_cmd->add_option("--ma-window", evaluate.config.ma_window,
                           "Moving-average baseline window")
      ->capture_default_str();
  evaluate_cmd->add_option("--es-alpha", evaluate.config.es_alpha,
                           "Exponential-smoothing baseline alpha")
      ->capture_default_str();
  evaluate_cmd->add_option("--max-gap", evaluate.config.max_gap_hours, "Gap-fill limit")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  rtap::set_thread_count(threads);
  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (preprocess->parsed()) return cmd_preprocess(pre);
    if (train_cmd->parsed()) return cmd_train(train);
    if (predict_cmd->parsed()) return cmd_predict(predict);
    if (evaluate_cmd->parsed()) return cmd_evaluate(evaluate);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const rtap::ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 3;
  } catch (const rtap::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
