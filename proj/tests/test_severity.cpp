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

#include "rtap/severity.hpp"

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace rtap;

namespace {

SeverityRow row1d(double x, int code) { return {{x}, code}; }

std::vector<SeverityRow> random_rows(std::size_t n, std::size_t dim,
                                     std::mt19937_64& rng) {
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  std::uniform_int_distribution<int> code(1, 3);
  std::vector<SeverityRow> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SeverityRow r;
    r.code = code(rng);
    r.features.resize(dim);
    for (auto& v : r.features) v = value(rng);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

TEST_CASE("euclidean distance") {
  std::vector<double> x = {0.3, -1.2, 4.0};
  REQUIRE(euclidean_distance(x, x) == 0.0);

  std::vector<double> a = {0.0, 0.0}, b = {3.0, 4.0};
  REQUIRE(euclidean_distance(a, b) == 5.0);

  std::vector<double> c = {1.0, 2.0, 3.0}, d = {4.0, 6.0, 3.0};
  REQUIRE(euclidean_distance(c, d) == 5.0);  // sqrt(9 + 16 + 0)

  std::vector<double> narrow = {1.0};
  REQUIRE_THROWS_AS(euclidean_distance(narrow, a), std::invalid_argument);
}

TEST_CASE("weighted_oversample replicates by severity") {
  SECTION("identity weights change nothing") {
    std::vector<SeverityRow> rows = {row1d(0.1, 1), row1d(0.2, 3), row1d(0.3, 2)};
    auto out = weighted_oversample(rows, {1, 1, 1});
    REQUIRE(out.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      REQUIRE(out[i].features == rows[i].features);
      REQUIRE(out[i].code == rows[i].code);
    }
  }

  SECTION("2 low + 1 high with weights (1,1,4) gives 6 rows") {
    std::vector<SeverityRow> rows = {row1d(0.1, 1), row1d(0.2, 1), row1d(0.9, 3)};
    auto out = weighted_oversample(rows, {1, 1, 4});
    REQUIRE(out.size() == 6);
    // Stable: originals in order, replicas adjacent.
    REQUIRE(out[0].features[0] == 0.1);
    REQUIRE(out[1].features[0] == 0.2);
    for (std::size_t i = 2; i < 6; ++i) REQUIRE(out[i].code == 3);
  }

  SECTION("empty input stays empty") {
    REQUIRE(weighted_oversample({}, {1, 2, 4}).empty());
  }

  SECTION("weights must be positive and monotone") {
    std::vector<SeverityRow> rows = {row1d(0.1, 1)};
    REQUIRE_THROWS_AS(weighted_oversample(rows, {0, 1, 1}), std::invalid_argument);
    REQUIRE_THROWS_AS(weighted_oversample(rows, {2, 1, 3}), std::invalid_argument);
    REQUIRE_THROWS_AS(weighted_oversample(rows, {1, 3, 2}), std::invalid_argument);
  }
}

TEST_CASE("default sampling weights balance by inverse frequency, capped") {
  std::vector<SeverityRow> rows;
  for (int i = 0; i < 40; ++i) rows.push_back(row1d(0.1 * i, 1));
  for (int i = 0; i < 10; ++i) rows.push_back(row1d(0.2 * i, 2));
  for (int i = 0; i < 2; ++i) rows.push_back(row1d(0.3 * i, 3));
  auto w = default_sampling_weights(rows);
  REQUIRE(w.low == 1);
  REQUIRE(w.medium == 4);   // ceil(40/10)
  REQUIRE(w.high == 10);    // ceil(40/2) = 20, capped at 10
  REQUIRE_NOTHROW(w.validate());

  SECTION("absent classes fall back to monotone minimums") {
    std::vector<SeverityRow> no_medium;
    for (int i = 0; i < 12; ++i) no_medium.push_back(row1d(0.1 * i, 1));
    for (int i = 0; i < 3; ++i) no_medium.push_back(row1d(0.5 * i, 3));
    auto w2 = default_sampling_weights(no_medium);
    REQUIRE(w2.low == 1);
    REQUIRE(w2.medium == 1);
    REQUIRE(w2.high == 4);
    REQUIRE_NOTHROW(w2.validate());
  }
}

TEST_CASE("severity kNN fit checks and accounting") {
  SECTION("a homogeneous training set predicts its one code") {
    std::vector<SeverityRow> rows = {row1d(0.0, 2), row1d(0.5, 2), row1d(1.0, 2)};
    auto model = fit_knn_severity(rows, {1, 1, 1});
    for (double q : {-1.0, 0.2, 0.8, 3.0}) {
      std::vector<double> query = {q};
      REQUIRE(predict_severity(model, query) == 2);
    }
  }

  SECTION("fewer than three rows after oversampling is an error") {
    std::vector<SeverityRow> rows = {row1d(0.0, 1), row1d(1.0, 2)};
    REQUIRE_THROWS_AS(fit_knn_severity(rows, {1, 1, 1}), DataError);
  }

  SECTION("model row count equals the oversampling arithmetic") {
    std::mt19937_64 rng(40);
    auto rows = random_rows(30, 2, rng);
    SamplingWeights w{1, 3, 7};
    std::size_t expected = 0;
    for (const auto& r : rows) expected += static_cast<std::size_t>(w.of(r.code));
    auto model = fit_knn_severity(rows, w);
    REQUIRE(model.rows() == expected);
  }
}

TEST_CASE("neighbor averaging follows the rounding rule") {
  // Three training points pinned as the nearest neighbors of query 0.
  auto fit3 = [](int a, int b, int c) {
    std::vector<SeverityRow> rows = {row1d(0.1, a), row1d(-0.2, b), row1d(0.3, c),
                                     row1d(9.0, 1), row1d(-9.0, 3)};
    return fit_knn_severity(rows, {1, 1, 1});
  };
  std::vector<double> origin = {0.0};
  REQUIRE(predict_severity(fit3(1, 1, 1), origin) == 1);
  REQUIRE(predict_severity(fit3(1, 2, 3), origin) == 2);  // mean 2
  REQUIRE(predict_severity(fit3(1, 1, 2), origin) == 1);  // mean 4/3 rounds down
  REQUIRE(predict_severity(fit3(2, 3, 3), origin) == 3);  // mean 8/3 rounds up
}

TEST_CASE("prediction agrees with the linear-scan oracle") {
  std::mt19937_64 rng(41);
  auto rows = random_rows(120, 3, rng);
  auto model = fit_knn_severity(rows, {1, 2, 5});
  std::uniform_real_distribution<double> value(-2.5, 2.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> query = {value(rng), value(rng), value(rng)};
    int expected = oracle::severity_by_linear_scan(model.x(), model.codes(), query);
    int got = predict_severity(model, query);
    REQUIRE(got == expected);
    REQUIRE(got >= 1);
    REQUIRE(got <= 3);
  }
}

TEST_CASE("permuting training rows cannot change predictions without ties") {
  std::mt19937_64 rng(42);
  auto rows = random_rows(50, 2, rng);
  auto model = fit_knn_severity(rows, {1, 1, 1});
  auto shuffled = rows;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto model2 = fit_knn_severity(shuffled, {1, 1, 1});
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> query = {value(rng), value(rng)};
    // Continuous random coordinates: exact distance ties have measure zero.
    REQUIRE(predict_severity(model, query) == predict_severity(model2, query));
  }
}

TEST_CASE("unit weights reproduce the unweighted model row-for-row") {
  std::mt19937_64 rng(43);
  auto rows = random_rows(25, 2, rng);
  auto model = fit_knn_severity(rows, {1, 1, 1});
  REQUIRE(model.rows() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(model.codes()[i] == rows[i].code);
    for (std::size_t j = 0; j < 2; ++j)
      REQUIRE(model.x()(i, j) == rows[i].features[j]);
  }
}

TEST_CASE("raising the high weight never loses high predictions") {
  std::mt19937_64 rng(44);
  auto rows = random_rows(60, 2, rng);
  auto queries = testutil::random_matrix(80, 2, rng, -2.0, 2.0);
  std::size_t previous = 0;
  bool first = true;
  for (int w_high : {1, 2, 4, 8}) {
    auto model = fit_knn_severity(rows, {1, 1, w_high});
    std::size_t highs = 0;
    for (std::size_t q = 0; q < queries.rows(); ++q)
      highs += predict_severity(model, queries.row(q)) == 3 ? 1 : 0;
    if (!first) REQUIRE(highs >= previous);
    previous = highs;
    first = false;
  }
}
