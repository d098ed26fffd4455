#include <cmath>
#include <vector>

#include "doctest.h"
#include "nowcast/errors.hpp"
#include "nowcast/linear.hpp"
#include "nowcast/rng.hpp"

using namespace nowcast;

namespace {

Eigen::MatrixXd random_matrix(int n, int p, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  return X;
}

// population-standardized column: mean 0, sum of squares exactly n
Eigen::VectorXd standardized_column(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = rng.normal();
  x.array() -= x.mean();
  x *= std::sqrt(static_cast<double>(n) / x.squaredNorm());
  return x;
}

}  // namespace

TEST_CASE("rw_forecast") {
  CHECK(rw_forecast(std::vector<double>{0.3, -1.0, 1.7}) == 1.7);
  CHECK(rw_forecast(std::vector<double>{5}) == 5);
  CHECK(rw_forecast(std::vector<double>{2, 2, 2}) == 2);
  CHECK_THROWS_AS(rw_forecast(std::vector<double>{}), ShapeError);
}

TEST_CASE("ar_fit_forecast recovers an AR(1) coefficient (n=500, seed 42)") {
  Rng rng(42);
  std::vector<double> y(500);
  double prev = 0.0;
  for (auto& v : y) {
    v = 0.5 * prev + rng.normal();
    prev = v;
  }
  ArFit fit;
  const double forecast = ar_fit_forecast(y, 1, &fit);
  CHECK(fit.phi(0) > 0.4);
  CHECK(fit.phi(0) < 0.6);

  // closed-form OLS on the same draw, computed with raw sums
  const int n = 500;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int t = 1; t < n; ++t) {
    sx += y[t - 1];
    sy += y[t];
    sxx += y[t - 1] * y[t - 1];
    sxy += y[t - 1] * y[t];
  }
  const double m = n - 1;
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double icept = (sy - slope * sx) / m;
  CHECK(fit.phi(0) == doctest::Approx(slope).epsilon(1e-10));
  CHECK(fit.intercept == doctest::Approx(icept).epsilon(1e-8));
  CHECK(forecast == doctest::Approx(icept + slope * y.back()).epsilon(1e-10));
}

TEST_CASE("ar on a constant series forecasts the constant") {
  const std::vector<double> y(40, 3.25);
  for (int p : {1, 2, 3}) CHECK(ar_fit_forecast(y, p) == doctest::Approx(3.25).epsilon(1e-6));
}

TEST_CASE("ridge_fit") {
  const auto X = random_matrix(60, 4, 9);
  Eigen::VectorXd beta_true(4);
  beta_true << 1.0, -2.0, 0.5, 0.0;
  Rng noise(10);
  Eigen::VectorXd y = X * beta_true;
  for (int i = 0; i < y.size(); ++i) y(i) += 0.2 * noise.normal() + 3.0;

  SUBCASE("alpha 0 equals OLS") {
    const auto fit = ridge_fit(X, y, 0.0);
    Eigen::MatrixXd Xi(60, 5);
    Xi.col(0).setOnes();
    Xi.rightCols(4) = X;
    const Eigen::VectorXd ols = (Xi.transpose() * Xi).ldlt().solve(Xi.transpose() * y);
    CHECK(fit.intercept == doctest::Approx(ols(0)).epsilon(1e-6));
    for (int j = 0; j < 4; ++j)
      CHECK(fit.coefficients(j) == doctest::Approx(ols(j + 1)).epsilon(1e-6));
  }

  SUBCASE("huge alpha shrinks everything to the mean") {
    const auto fit = ridge_fit(X, y, 1e9);
    CHECK(fit.coefficients.lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK(fit.intercept == doctest::Approx(y.mean()).epsilon(1e-8));
  }

  SUBCASE("single standardized predictor shrinkage shape") {
    const int n = 50;
    Eigen::MatrixXd x1(n, 1);
    x1.col(0) = standardized_column(n, 4);
    const Eigen::VectorXd y1 = 2.0 * x1.col(0);  // OLS slope exactly 2
    for (double alpha : {0.1, 0.5, 2.0}) {
      const auto fit = ridge_fit(x1, y1, alpha);
      const double expect = 2.0 * n / (n + 2.0 * n * alpha);
      CHECK(fit.coefficients(0) == doctest::Approx(expect).epsilon(1e-8));
    }
  }
}

TEST_CASE("lasso soft-thresholds a single standardized predictor") {
  const int n = 80;
  Eigen::MatrixXd X(n, 1);
  X.col(0) = standardized_column(n, 21);
  const Eigen::VectorXd y = 2.0 * X.col(0);

  const auto fit = lasso_fit(X, y, 0.5);
  CHECK(fit.coefficients(0) == doctest::Approx(1.5).epsilon(1e-8));

  // grid oracle over the coefficient value
  double best_b = 0.0, best_obj = 1e300;
  for (double b = -3.0; b <= 3.0; b += 1e-5) {
    PenalizedFit cand;
    cand.intercept = 0.0;
    cand.coefficients = Eigen::VectorXd::Constant(1, b);
    cand.penalty = 0.5;
    cand.mix = 1.0;
    const double obj = enet_objective(X, y, cand);
    if (obj < best_obj) {
      best_obj = obj;
      best_b = b;
    }
  }
  CHECK(fit.coefficients(0) == doctest::Approx(best_b).epsilon(1e-4));

  const auto zeroed = lasso_fit(X, y, 100.0);
  CHECK(zeroed.coefficients(0) == 0.0);
}

TEST_CASE("lasso satisfies the KKT conditions") {
  const auto X = random_matrix(40, 6, 33);
  Rng noise(34);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) y(i) = X(i, 0) - 0.5 * X(i, 2) + 0.1 * noise.normal();

  const double lambda = 0.08;
  const auto fit = lasso_fit(X, y, lambda, 1e-10);
  const double n = 40.0;
  const Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::VectorXd resid = yc - Xc * fit.coefficients;
  for (int j = 0; j < 6; ++j) {
    const double grad = Xc.col(j).dot(resid) / n;
    if (fit.coefficients(j) == 0.0) {
      CHECK(std::fabs(grad) <= lambda + 1e-6);
    } else {
      CHECK(grad == doctest::Approx(lambda * (fit.coefficients(j) > 0 ? 1.0 : -1.0))
                        .epsilon(1e-6));
    }
  }
}

TEST_CASE("coordinate descent objective is nonincreasing per sweep") {
  const auto X = random_matrix(30, 5, 55);
  Rng noise(56);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) y(i) = 0.7 * X(i, 1) + noise.normal();

  double prev = 1e300;
  for (int sweeps = 1; sweeps <= 12; ++sweeps) {
    const auto fit = enet_fit(X, y, 0.05, 0.7, 0.0, sweeps);
    const double obj = enet_objective(X, y, fit);
    CHECK(obj <= prev + 1e-12);
    prev = obj;
  }
}

TEST_CASE("elastic net nests lasso and ridge") {
  const auto X = random_matrix(10, 5, 77);
  Rng noise(78);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) y(i) = X(i, 3) + 0.3 * noise.normal();

  SUBCASE("gamma 1 reproduces lasso") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      const auto Xr = random_matrix(10, 5, seed * 101);
      Rng nz(seed);
      Eigen::VectorXd yr(10);
      for (int i = 0; i < 10; ++i) yr(i) = Xr(i, 0) + 0.2 * nz.normal();
      const auto en = enet_fit(Xr, yr, 0.1, 1.0, 1e-9);
      const auto la = lasso_fit(Xr, yr, 0.1, 1e-9);
      for (int j = 0; j < 5; ++j)
        CHECK(en.coefficients(j) == doctest::Approx(la.coefficients(j)).epsilon(1e-6));
    }
  }

  SUBCASE("gamma 0 reproduces ridge") {
    const auto en = enet_fit(X, y, 0.2, 0.0, 1e-12, 100000);
    const auto ri = ridge_fit(X, y, 0.2);
    for (int j = 0; j < 5; ++j)
      CHECK(en.coefficients(j) == doctest::Approx(ri.coefficients(j)).epsilon(1e-6));
  }

  SUBCASE("coefficients are continuous in the mixing weight") {
    const double eps = 1e-5;
    const auto a = enet_fit(X, y, 0.2, 0.5, 1e-12, 100000);
    const auto b = enet_fit(X, y, 0.2, 0.5 + eps, 1e-12, 100000);
    CHECK((a.coefficients - b.coefficients).lpNorm<Eigen::Infinity>() < 1e-3);
  }
}

TEST_CASE("cbfi_importance ranks by magnitude and skips dummies") {
  PenalizedFit fit;
  fit.coefficients = Eigen::VectorXd(3);
  fit.coefficients << 2.0, -3.0, 0.5;
  FeatureInfo info{{"a", "b", "dummy_q1"}, {false, false, true}};

  const auto imp = cbfi_importance(fit, info);
  CHECK(imp.size() == 2);
  CHECK(imp.at("a") == 2.0);
  CHECK(imp.at("b") == -3.0);
  CHECK(imp.count("dummy_q1") == 0);

  PenalizedFit zero;
  zero.coefficients = Eigen::VectorXd::Zero(3);
  const auto zimp = cbfi_importance(zero, info);
  for (const auto& [k, v] : zimp) CHECK(v == 0.0);
}

TEST_CASE("penalized learner contract") {
  const auto X = random_matrix(50, 3, 91);
  Rng noise(92);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) y(i) = 1.5 * X(i, 0) + 0.1 * noise.normal();

  FeatureInfo info{{"x0", "x1", "x2"}, {false, false, false}};
  PenalizedLearner learner(PenaltyKind::kElasticNet, info, 0.01, 0.5);
  CHECK_THROWS_AS(learner.predict(Eigen::VectorXd::Zero(3)), NumericError);
  learner.fit(X, y);
  const auto imp = learner.importance();
  CHECK(std::fabs(imp.at("x0")) > std::fabs(imp.at("x1")));
  Eigen::VectorXd probe = Eigen::VectorXd::Zero(3);
  probe(0) = 1.0;
  CHECK(learner.predict(probe) == doctest::Approx(learner.fit_result().intercept +
                                                  learner.fit_result().coefficients(0)));
}
