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

#ifndef RTAP_MODEL_IO_HPP
#define RTAP_MODEL_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "rtap/common.hpp"
#include "rtap/pipeline.hpp"

namespace rtap {

// Insertion-ordered JSON keeps bundle bytes reproducible.
using Json = nlohmann::ordered_json;

namespace io {

inline Json dump(const Matrix& m) {
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline Matrix load_matrix(const Json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.rows() * m.cols())
    throw ModelError("matrix data length mismatch");
  m.data() = std::move(data);
  return m;
}

inline Json dump(const Scaler& s) {
  return Json{{"mean", s.mean()}, {"std", s.stddev()}};
}

inline Scaler load_scaler(const Json& j) {
  return Scaler(j.at("mean").get<std::vector<double>>(),
                j.at("std").get<std::vector<double>>());
}

inline Json dump(const FeatureLayout& layout) {
  return Json{{"per_hour_names", layout.per_hour_names}, {"lag", layout.lag}};
}

inline FeatureLayout load_layout(const Json& j) {
  FeatureLayout layout;
  layout.per_hour_names = j.at("per_hour_names").get<std::vector<std::string>>();
  layout.lag = j.at("lag").get<int>();
  return layout;
}

// Nodes serialize as flat arrays [feature, threshold, left, right, count].
inline Json dump_nodes(const std::vector<TreeNode>& nodes) {
  Json out = Json::array();
  for (const auto& n : nodes)
    out.push_back(Json::array({n.feature, n.threshold, n.left, n.right, n.count}));
  return out;
}

inline std::vector<TreeNode> load_nodes(const Json& j) {
  std::vector<TreeNode> nodes;
  nodes.reserve(j.size());
  for (const auto& e : j) {
    TreeNode n;
    n.feature = e.at(0).get<std::int32_t>();
    n.threshold = e.at(1).get<double>();
    n.left = e.at(2).get<std::int32_t>();
    n.right = e.at(3).get<std::int32_t>();
    n.count = e.at(4).get<std::uint32_t>();
    nodes.push_back(n);
  }
  return nodes;
}

inline Json dump(const RegressionTree& tree) {
  return Json{{"nodes", dump_nodes(tree.nodes())}, {"values", tree.values()}};
}

inline RegressionTree load_regression_tree(const Json& j) {
  return RegressionTree(load_nodes(j.at("nodes")),
                        j.at("values").get<std::vector<double>>());
}

inline Json dump(const ClassificationTree& tree) {
  return Json{{"nodes", dump_nodes(tree.nodes())},
              {"dist", tree.dist()},
              {"classes", tree.n_classes()}};
}

inline ClassificationTree load_classification_tree(const Json& j) {
  return ClassificationTree(load_nodes(j.at("nodes")),
                            j.at("dist").get<std::vector<double>>(),
                            j.at("classes").get<std::size_t>());
}

inline Json dump(const ForestParams& p) {
  return Json{{"trees", p.trees},
              {"max_depth", p.max_depth},
              {"min_samples_split", p.min_samples_split},
              {"feature_subset_size", p.feature_subset_size},
              {"bootstrap", p.bootstrap},
              {"rng_seed", p.rng_seed}};
}

inline ForestParams load_forest_params(const Json& j) {
  ForestParams p;
  p.trees = j.at("trees").get<int>();
  p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_split = j.at("min_samples_split").get<int>();
  p.feature_subset_size = j.at("feature_subset_size").get<int>();
  p.bootstrap = j.at("bootstrap").get<bool>();
  p.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return p;
}

inline Json dump(const ForestModel& model) {
  Json targets = Json::array();
  for (const auto& trees : model.trees()) {
    Json arr = Json::array();
    for (const auto& tree : trees) arr.push_back(dump(tree));
    targets.push_back(std::move(arr));
  }
  return Json{{"params", dump(model.params())},
              {"features", model.features()},
              {"targets", std::move(targets)}};
}

inline ForestModel load_forest(const Json& j) {
  std::vector<std::vector<RegressionTree>> targets;
  for (const auto& arr : j.at("targets")) {
    std::vector<RegressionTree> trees;
    trees.reserve(arr.size());
    for (const auto& t : arr) trees.push_back(load_regression_tree(t));
    targets.push_back(std::move(trees));
  }
  return ForestModel(std::move(targets), load_forest_params(j.at("params")),
                     j.at("features").get<std::size_t>());
}

inline Json dump(const ClassForestParams& p) {
  return Json{{"trees", p.trees},
              {"max_depth", p.max_depth},
              {"min_samples_split", p.min_samples_split},
              {"feature_subset_size", p.feature_subset_size},
              {"bootstrap", p.bootstrap},
              {"rng_seed", p.rng_seed}};
}

inline ClassForestParams load_class_forest_params(const Json& j) {
  ClassForestParams p;
  p.trees = j.at("trees").get<int>();
  p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_split = j.at("min_samples_split").get<int>();
  p.feature_subset_size = j.at("feature_subset_size").get<int>();
  p.bootstrap = j.at("bootstrap").get<bool>();
  p.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return p;
}

inline Json dump(const ClassificationForest& model) {
  Json arr = Json::array();
  for (const auto& tree : model.trees()) arr.push_back(dump(tree));
  return Json{{"params", dump(model.params())},
              {"classes", model.n_classes()},
              {"features", model.features()},
              {"trees", std::move(arr)}};
}

inline ClassificationForest load_classification_forest(const Json& j) {
  std::vector<ClassificationTree> trees;
  for (const auto& t : j.at("trees")) trees.push_back(load_classification_tree(t));
  return ClassificationForest(std::move(trees), load_class_forest_params(j.at("params")),
                              j.at("classes").get<std::size_t>(),
                              j.at("features").get<std::size_t>());
}

inline Json dump(const KnnClassifier& model) {
  return Json{{"k", model.k()}, {"x", dump(model.x())}, {"y", model.y()}};
}

inline KnnClassifier load_knn(const Json& j) {
  return KnnClassifier(load_matrix(j.at("x")), j.at("y").get<std::vector<int>>(),
                       j.at("k").get<int>());
}

inline Json dump(const GbdtParams& p) {
  return Json{{"rounds", p.rounds},
              {"learning_rate", p.learning_rate},
              {"max_depth", p.max_depth},
              {"min_samples_split", p.min_samples_split},
              {"rng_seed", p.rng_seed}};
}

inline GbdtParams load_gbdt_params(const Json& j) {
  GbdtParams p;
  p.rounds = j.at("rounds").get<int>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_split = j.at("min_samples_split").get<int>();
  p.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return p;
}

inline Json dump(const GbdtClassifier& model) {
  Json arr = Json::array();
  for (const auto& tree : model.trees()) arr.push_back(dump(tree));
  return Json{{"base_score", model.base_score()},
              {"params", dump(model.params())},
              {"trees", std::move(arr)},
              {"train_loss", model.train_loss()}};
}

inline GbdtClassifier load_gbdt(const Json& j) {
  std::vector<RegressionTree> trees;
  for (const auto& t : j.at("trees")) trees.push_back(load_regression_tree(t));
  return GbdtClassifier(j.at("base_score").get<double>(), std::move(trees),
                        load_gbdt_params(j.at("params")),
                        j.at("train_loss").get<std::vector<double>>());
}

inline Json dump(const LogisticRegression& model) {
  return Json{{"weights", model.weights()}, {"intercept", model.intercept()}};
}

inline LogisticRegression load_logistic(const Json& j) {
  return LogisticRegression(j.at("weights").get<std::vector<double>>(),
                            j.at("intercept").get<double>());
}

inline Json dump(const BaseClassifier& base) {
  Json j{{"kind", base_kind_name(base.kind())},
         {"degenerate", base.degenerate()},
         {"constant", base.constant()}};
  if (base.degenerate()) {
    j["model"] = nullptr;
    return j;
  }
  std::visit(
      [&](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, std::monostate>)
          j["model"] = nullptr;
        else
          j["model"] = dump(model);
      },
      base.model());
  return j;
}

inline BaseClassifier load_base(const Json& j) {
  BaseClassifier base;
  std::string kind = j.at("kind").get<std::string>();
  BaseKind k;
  if (kind == "decision_tree") k = BaseKind::decision_tree;
  else if (kind == "random_forest") k = BaseKind::random_forest;
  else if (kind == "knn") k = BaseKind::knn;
  else if (kind == "gbdt") k = BaseKind::gbdt;
  else throw ModelError("unknown base classifier kind '" + kind + "'");
  base.set_kind(k);
  if (j.at("degenerate").get<bool>()) {
    base.set_degenerate(j.at("constant").get<double>());
    return base;
  }
  const Json& m = j.at("model");
  switch (k) {
    case BaseKind::decision_tree: base.model() = load_classification_tree(m); break;
    case BaseKind::random_forest: base.model() = load_classification_forest(m); break;
    case BaseKind::knn: base.model() = load_knn(m); break;
    case BaseKind::gbdt: base.model() = load_gbdt(m); break;
  }
  return base;
}

inline Json dump(const LogisticParams& p) {
  return Json{{"l2", p.l2},
              {"max_iterations", p.max_iterations},
              {"tolerance", p.tolerance}};
}

inline LogisticParams load_logistic_params(const Json& j) {
  LogisticParams p;
  p.l2 = j.at("l2").get<double>();
  p.max_iterations = j.at("max_iterations").get<int>();
  p.tolerance = j.at("tolerance").get<double>();
  return p;
}

inline Json dump(const BaseParams& p) {
  return Json{{"dt_max_depth", p.dt_max_depth},
              {"dt_min_samples_split", p.dt_min_samples_split},
              {"rf", dump(p.rf)},
              {"knn_k", p.knn_k},
              {"gbdt", dump(p.gbdt)}};
}

inline BaseParams load_base_params(const Json& j) {
  BaseParams p;
  p.dt_max_depth = j.at("dt_max_depth").get<int>();
  p.dt_min_samples_split = j.at("dt_min_samples_split").get<int>();
  p.rf = load_class_forest_params(j.at("rf"));
  p.knn_k = j.at("knn_k").get<int>();
  p.gbdt = load_gbdt_params(j.at("gbdt"));
  return p;
}

inline Json dump(const StackingParams& p) {
  return Json{{"base", dump(p.base)},
              {"meta", dump(p.meta)},
              {"folds", p.folds},
              {"threshold", p.threshold},
              {"rng_seed", p.rng_seed}};
}

inline StackingParams load_stacking_params(const Json& j) {
  StackingParams p;
  p.base = load_base_params(j.at("base"));
  p.meta = load_logistic_params(j.at("meta"));
  p.folds = j.at("folds").get<int>();
  p.threshold = j.at("threshold").get<double>();
  p.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return p;
}

inline Json dump(const StackingModel& model) {
  Json bases = Json::array();
  for (const auto& base : model.bases()) bases.push_back(dump(base));
  return Json{{"bases", std::move(bases)},
              {"meta", dump(model.meta())},
              {"params", dump(model.params())},
              {"degenerate", model.degenerate()},
              {"constant", model.constant()}};
}

inline StackingModel load_stacking(const Json& j) {
  const Json& bases_json = j.at("bases");
  if (bases_json.size() != 4) throw ModelError("stacking bundle must carry 4 bases");
  std::array<BaseClassifier, 4> bases;
  for (std::size_t i = 0; i < 4; ++i) bases[i] = load_base(bases_json[i]);
  StackingModel model;
  model.set_parts(std::move(bases), load_logistic(j.at("meta")),
                  load_stacking_params(j.at("params")), j.at("degenerate").get<bool>(),
                  j.at("constant").get<double>());
  return model;
}

inline Json dump(const SamplingWeights& w) {
  return Json{{"low", w.low}, {"medium", w.medium}, {"high", w.high}};
}

inline SamplingWeights load_weights(const Json& j) {
  SamplingWeights w;
  w.low = j.at("low").get<int>();
  w.medium = j.at("medium").get<int>();
  w.high = j.at("high").get<int>();
  return w;
}

inline Json dump(const SeverityKnnModel& model) {
  return Json{{"x", dump(model.x())},
              {"codes", model.codes()},
              {"weights", dump(model.weights())}};
}

inline SeverityKnnModel load_severity(const Json& j) {
  return SeverityKnnModel(load_matrix(j.at("x")), j.at("codes").get<std::vector<int>>(),
                          load_weights(j.at("weights")));
}

inline Json dump(const TrainMetadata& meta) {
  return Json{{"seed", meta.seed},
              {"train_rows", meta.train_rows},
              {"class_counts", meta.class_counts},
              {"target_begin", format_hour(meta.target_begin)},
              {"target_end", format_hour(meta.target_end)}};
}

inline TrainMetadata load_metadata(const Json& j) {
  TrainMetadata meta;
  meta.seed = j.at("seed").get<std::uint64_t>();
  meta.train_rows = j.at("train_rows").get<std::size_t>();
  auto counts = j.at("class_counts").get<std::vector<std::size_t>>();
  if (counts.size() != 4) throw ModelError("metadata class_counts must have 4 entries");
  for (std::size_t i = 0; i < 4; ++i) meta.class_counts[i] = counts[i];
  auto begin = parse_hour(j.at("target_begin").get<std::string>());
  auto end = parse_hour(j.at("target_end").get<std::string>());
  if (!begin || !end) throw ModelError("metadata timestamps are unparseable");
  meta.target_begin = *begin;
  meta.target_end = *end;
  return meta;
}

}  // namespace io

// Serializes the bundle as a single self-describing JSON document with a
// format version and one checksum per section; loading verifies both and
// refuses anything that does not match exactly.
inline std::string serialize_bundle(const PipelineModel& model) {
  Json sections = Json::object();
  auto put = [&sections](const char* name, Json data) {
    std::string bytes = data.dump();
    sections[name] =
        Json{{"checksum", to_hex(fnv1a64(bytes))}, {"data", std::move(data)}};
  };
  put("layout", io::dump(model.layout));
  put("scaler", io::dump(model.scaler));
  put("forecast", io::dump(model.forest));
  put("identify", io::dump(model.stacking));
  put("severity", model.severity ? io::dump(*model.severity) : Json(nullptr));
  put("flat_baseline",
      model.flat_baseline ? io::dump(*model.flat_baseline) : Json(nullptr));
  put("metadata", io::dump(model.meta));

  Json root{{"format", "rtap-bundle"},
            {"version", PipelineModel::kFormatVersion},
            {"business", model.business},
            {"sections", std::move(sections)}};
  return root.dump(1) + "\n";
}

inline PipelineModel deserialize_bundle(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("bundle is not valid JSON: ") + e.what());
  }
  try {
    if (root.at("format").get<std::string>() != "rtap-bundle")
      throw ModelError("not an rtap model bundle");
    int version = root.at("version").get<int>();
    if (version != PipelineModel::kFormatVersion)
      throw ModelError("bundle format version " + std::to_string(version) +
                       " is not supported (expected " +
                       std::to_string(PipelineModel::kFormatVersion) + ")");

    const Json& sections = root.at("sections");
    auto section = [&sections](const char* name) -> const Json& {
      const Json& s = sections.at(name);
      std::string bytes = s.at("data").dump();
      if (to_hex(fnv1a64(bytes)) != s.at("checksum").get<std::string>())
        throw ModelError(std::string("bundle section '") + name +
                         "' fails its checksum");
      return s.at("data");
    };

    PipelineModel model;
    model.business = root.at("business").get<std::string>();
    model.layout = io::load_layout(section("layout"));
    model.scaler = io::load_scaler(section("scaler"));
    model.forest = io::load_forest(section("forecast"));
    model.stacking = io::load_stacking(section("identify"));
    const Json& severity = section("severity");
    if (!severity.is_null()) model.severity = io::load_severity(severity);
    const Json& flat = section("flat_baseline");
    if (!flat.is_null()) model.flat_baseline = io::load_classification_forest(flat);
    model.meta = io::load_metadata(section("metadata"));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("bundle structure is invalid: ") + e.what());
  }
}

// Writes atomically: the bundle lands under its final name only when
// serialization completed, never as a partial file.
inline void save_bundle(const PipelineModel& model, const std::string& path) {
  std::string payload = serialize_bundle(model);
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write model file: " + tmp);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw DataError("failed writing model file: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move model file into place: " + path + ": " + ec.message());
  }
}

inline PipelineModel load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return deserialize_bundle(text);
}

}  // namespace rtap

#endif  // RTAP_MODEL_IO_HPP
