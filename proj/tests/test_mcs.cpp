#include <algorithm>

#include "doctest.h"
#include "nowcast/errors.hpp"
#include "nowcast/mcs.hpp"
#include "nowcast/rng.hpp"

using namespace nowcast;

namespace {

LossMatrix make_matrix(int n, int k, std::uint64_t seed) {
  LossMatrix m;
  for (int t = 0; t < n; ++t) m.quarters.push_back(QuarterIndex{2017, 1}.plus(t));
  for (int j = 0; j < k; ++j) m.models.push_back("m" + std::to_string(j));
  m.losses.resize(n, k);
  Rng rng(seed);
  for (int t = 0; t < n; ++t)
    for (int j = 0; j < k; ++j) {
      const double e = rng.normal();
      m.losses(t, j) = e * e;
    }
  return m;
}

}  // namespace

TEST_CASE("identical loss columns all survive with p-value 1") {
  auto matrix = make_matrix(30, 4, 1);
  for (int j = 1; j < 4; ++j) matrix.losses.col(j) = matrix.losses.col(0);
  for (auto stat : {McsStatistic::kTmax, McsStatistic::kTR}) {
    const auto result = mcs(matrix, 0.10, 500, 4, stat, 42);
    CHECK(result.survivors.size() == 4);
    for (const auto& [name, p] : result.p_values) CHECK(p == 1.0);
  }
}

TEST_CASE("a uniformly inflated model is eliminated") {
  auto matrix = make_matrix(40, 4, 7);
  matrix.losses.col(2).array() += 10.0;
  const auto result = mcs(matrix, 0.10, 2000, 4, McsStatistic::kTmax, 42);
  CHECK(std::find(result.survivors.begin(), result.survivors.end(), "m2") ==
        result.survivors.end());
  CHECK(result.p_values.at("m2") < 0.10);
  CHECK(result.ranking.front() == "m2");  // first eliminated = worst
  CHECK(!result.survivors.empty());
}

TEST_CASE("survivors are invariant to adding a constant to every loss") {
  auto matrix = make_matrix(36, 5, 11);
  matrix.losses.col(1).array() += 6.0;
  const auto base = mcs(matrix, 0.10, 1000, 4, McsStatistic::kTmax, 5);
  auto shifted = matrix;
  shifted.losses.array() += 123.0;
  const auto out = mcs(shifted, 0.10, 1000, 4, McsStatistic::kTmax, 5);
  CHECK(base.survivors == out.survivors);
}

TEST_CASE("mcs reproducibility and the TR statistic") {
  auto matrix = make_matrix(32, 4, 13);
  matrix.losses.col(0).array() += 4.0;
  const auto a = mcs(matrix, 0.10, 1000, 4, McsStatistic::kTR, 99);
  const auto b = mcs(matrix, 0.10, 1000, 4, McsStatistic::kTR, 99);
  CHECK(a.survivors == b.survivors);
  CHECK(a.p_values == b.p_values);
  CHECK(std::find(a.survivors.begin(), a.survivors.end(), "m0") == a.survivors.end());
}

TEST_CASE("mcs p-values follow the max-so-far convention") {
  auto matrix = make_matrix(44, 5, 17);
  matrix.losses.col(0).array() += 8.0;
  matrix.losses.col(1).array() += 5.0;
  const auto result = mcs(matrix, 0.25, 2000, 4, McsStatistic::kTmax, 3);
  // p-values must be nondecreasing along the elimination order
  double last = 0.0;
  for (const auto& name : result.ranking) {
    const double p = result.p_values.at(name);
    CHECK(p >= last - 1e-12);
    last = std::max(last, p);
  }
}

TEST_CASE("mcs input validation") {
  auto matrix = make_matrix(10, 2, 2);
  CHECK_THROWS_AS(mcs(matrix, 1.5, 100, 4, McsStatistic::kTmax, 1), ConfigError);
  matrix.losses(0, 0) = -1.0;
  CHECK_THROWS_AS(mcs(matrix, 0.1, 100, 4, McsStatistic::kTmax, 1), DataError);

  LossMatrix tiny = make_matrix(2, 2, 3);
  CHECK_THROWS_AS(mcs(tiny, 0.1, 100, 4, McsStatistic::kTmax, 1), ShapeError);
}

TEST_CASE("single-model matrix trivially survives") {
  const auto matrix = make_matrix(20, 1, 5);
  const auto result = mcs(matrix, 0.10, 200, 4, McsStatistic::kTmax, 7);
  CHECK(result.survivors == std::vector<std::string>{"m0"});
  CHECK(result.p_values.at("m0") == 1.0);
}
