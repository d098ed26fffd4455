#include <cmath>
#include <vector>

#include "doctest.h"
#include "nowcast/ensemble.hpp"
#include "nowcast/errors.hpp"
#include "nowcast/linear.hpp"
#include "nowcast/rng.hpp"

using namespace nowcast;

TEST_CASE("impurity_decrease") {
  const std::vector<double> pure(6, 3.0);
  const std::vector<double> left3(pure.begin(), pure.begin() + 3);
  const std::vector<double> right3(pure.begin() + 3, pure.end());
  CHECK(impurity_decrease(pure, left3, right3, SplitCriterion::kSquaredError) == 0.0);
  CHECK(impurity_decrease(pure, left3, right3, SplitCriterion::kAbsoluteError) == 0.0);

  // variance 25 -> 0 on a perfect split
  const std::vector<double> parent{0, 0, 10, 10};
  const std::vector<double> left{0, 0};
  const std::vector<double> right{10, 10};
  CHECK(impurity_decrease(parent, left, right, SplitCriterion::kSquaredError) ==
        doctest::Approx(25.0));

  CHECK_THROWS_AS(
      impurity_decrease(parent, std::vector<double>{}, parent, SplitCriterion::kSquaredError),
      ShapeError);
}

TEST_CASE("absolute-error impurity uses deviation from the median") {
  const std::vector<double> y{1.0, 2.0, 9.0};
  // median 2, deviations 1,0,7 -> mean 8/3
  CHECK(node_impurity(y, SplitCriterion::kAbsoluteError) == doctest::Approx(8.0 / 3.0));
}

TEST_CASE("single tree fits a step function exactly") {
  Eigen::MatrixXd X(8, 2);
  Eigen::VectorXd y(8);
  for (int i = 0; i < 8; ++i) {
    X(i, 0) = i;
    X(i, 1) = 0.0;  // constant distractor
    y(i) = i < 4 ? -1.0 : 1.0;
  }
  TreeConfig config;
  config.max_depth = 3;
  RegressionTree tree;
  tree.fit(X, y, {0, 1, 2, 3, 4, 5, 6, 7}, config, nullptr);

  for (int i = 0; i < 8; ++i) CHECK(tree.predict(X.row(i)) == doctest::Approx(y(i)));
  // all split mass on feature 0
  const auto totals = tree.split_score_totals(2);
  CHECK(totals(0) > 0.0);
  CHECK(totals(1) == 0.0);
}

TEST_CASE("forest prediction is the exact mean of tree predictions") {
  Rng rng(31);
  Eigen::MatrixXd X(60, 3);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
    y(i) = X(i, 0) > 0 ? 2.0 : -2.0;
  }
  ForestConfig config;
  config.n_estimators = 25;
  config.seed = 42;
  config.tree.m_try = 2;
  const auto fit = rf_fit(X, y, config);

  Eigen::VectorXd probe(3);
  probe << 0.5, -0.2, 0.1;
  double mean = 0.0;
  for (const auto& tree : fit.trees) mean += tree.predict(probe);
  mean /= static_cast<double>(fit.trees.size());
  CHECK(fit.predict(probe) == mean);

  // reproducibility under a fixed seed
  const auto fit2 = rf_fit(X, y, config);
  CHECK(fit.predict(probe) == fit2.predict(probe));
}

TEST_CASE("forest beats OLS on a step function (B=25, seed 42)") {
  Rng rng(42);
  Eigen::MatrixXd X(80, 1);
  Eigen::VectorXd y(80);
  for (int i = 0; i < 80; ++i) {
    X(i, 0) = rng.uniform(-1.0, 1.0);
    y(i) = (X(i, 0) > 0 ? 1.0 : -1.0) + 0.05 * rng.normal();
  }
  ForestConfig config;
  config.n_estimators = 25;
  config.seed = 42;
  const auto forest = rf_fit(X.topRows(60), y.head(60), config);
  const auto ols = ridge_fit(X.topRows(60), y.head(60), 0.0);

  double mse_forest = 0.0, mse_ols = 0.0;
  for (int i = 60; i < 80; ++i) {
    const double fr = forest.predict(X.row(i)) - y(i);
    const double lr = ols.predict(X.row(i)) - y(i);
    mse_forest += fr * fr;
    mse_ols += lr * lr;
  }
  CHECK(mse_forest < mse_ols);
}

TEST_CASE("mdi importance") {
  SUBCASE("single split concentrates mass on the split feature") {
    Eigen::MatrixXd X(10, 2);
    Eigen::VectorXd y(10);
    for (int i = 0; i < 10; ++i) {
      X(i, 0) = i;
      X(i, 1) = (i * 7) % 10;  // shuffled, uninformative
      y(i) = i < 5 ? 0.0 : 10.0;
    }
    ForestConfig config;
    config.n_estimators = 1;
    config.bootstrap = false;
    config.tree.max_depth = 1;
    const auto fit = rf_fit(X, y, config);
    const auto mdi = fit.mdi();
    CHECK(mdi(0) > 0.0);
    CHECK(mdi(1) == 0.0);
  }

  SUBCASE("constant target gives all-zero importance") {
    Eigen::MatrixXd X(12, 2);
    Rng rng(9);
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 2; ++j) X(i, j) = rng.normal();
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(12, 5.0);
    ForestConfig config;
    config.n_estimators = 5;
    const auto fit = rf_fit(X, y, config);
    CHECK(fit.mdi().lpNorm<Eigen::Infinity>() == 0.0);
  }

  SUBCASE("mdi sums to the mean per-tree total decrease") {
    Rng rng(13);
    Eigen::MatrixXd X(50, 4);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 4; ++j) X(i, j) = rng.normal();
      y(i) = X(i, 1) + 0.3 * rng.normal();
    }
    ForestConfig config;
    config.n_estimators = 10;
    const auto fit = rf_fit(X, y, config);
    double total = 0.0;
    for (const auto& tree : fit.trees) total += tree.split_score_totals(4).sum();
    total /= static_cast<double>(fit.trees.size());
    CHECK(fit.mdi().sum() == doctest::Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("xgb_split_gain") {
  // identical children: no improvement, only the split penalty remains
  CHECK(xgb_split_gain(2, 3, 2, 3, 0.0, 0.7) == doctest::Approx(-0.7));
  // with l2 regularization the duplicated leaf denominator makes it worse still
  CHECK(xgb_split_gain(2, 3, 2, 3, 0.5, 0.7) < -0.7);
  // hand-plugged: parent g=0,h=4 scores 0; children each score -8
  CHECK(xgb_split_gain(-4, 2, 4, 2, 0.0, 0.0) == doctest::Approx(16.0));
  CHECK_THROWS_AS(xgb_split_gain(1, -1, 1, 1, 0, 0), NumericError);
}

TEST_CASE("xgb_fit") {
  Rng rng(71);
  Eigen::MatrixXd X(60, 2);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) {
    X(i, 0) = rng.uniform(-1.0, 1.0);
    X(i, 1) = rng.normal();
    y(i) = X(i, 0) > 0 ? 1.0 : -1.0;
  }

  SUBCASE("zero learning rate predicts the base score everywhere") {
    BoostConfig config;
    config.n_rounds = 10;
    config.learning_rate = 0.0;
    const auto fit = xgb_fit(X, y, config);
    Eigen::VectorXd probe(2);
    probe << 0.3, -1.0;
    CHECK(fit.predict(probe) == doctest::Approx(y.mean()));
  }

  SUBCASE("single stump on sign data puts all gain on the signal feature") {
    BoostConfig config;
    config.n_rounds = 1;
    config.max_depth = 1;
    config.lambda_l2 = 0.0;
    const auto fit = xgb_fit(X, y, config);
    const auto gain = fit.gain_importance();
    CHECK(gain(0) > 0.0);
    CHECK(gain(1) == 0.0);
  }

  SUBCASE("large split penalty suppresses all splits") {
    BoostConfig config;
    config.n_rounds = 5;
    config.gamma_split = 1e9;
    const auto fit = xgb_fit(X, y, config);
    for (const auto& tree : fit.trees) {
      CHECK(tree.nodes().size() == 1);
      CHECK(tree.nodes()[0].feature == -1);
    }
  }

  SUBCASE("train MSE is nonincreasing in the number of rounds") {
    double prev = 1e300;
    for (int rounds : {1, 2, 4, 8, 16, 32}) {
      BoostConfig config;
      config.n_rounds = rounds;
      config.subsample = 1.0;
      config.colsample = 1.0;
      const auto fit = xgb_fit(X, y, config);
      double mse = 0.0;
      for (int i = 0; i < 60; ++i) {
        const double e = fit.predict(X.row(i)) - y(i);
        mse += e * e;
      }
      CHECK(mse <= prev + 1e-9);
      prev = mse;
    }
  }

  SUBCASE("deterministic under a fixed seed with subsampling") {
    BoostConfig config;
    config.n_rounds = 20;
    config.subsample = 0.8;
    config.colsample = 0.5;
    config.seed = 7;
    const auto a = xgb_fit(X, y, config);
    const auto b = xgb_fit(X, y, config);
    Eigen::VectorXd probe(2);
    probe << 0.1, 0.2;
    CHECK(a.predict(probe) == b.predict(probe));
  }

  SUBCASE("min_child_weight bounds the hessian mass of children") {
    BoostConfig config;
    config.n_rounds = 1;
    config.min_child_weight = 10.0;  // h = 1 per row, so children need >= 10 rows
    const auto fit = xgb_fit(X, y, config);
    std::vector<int> stack{0};
    const auto& nodes = fit.trees[0].nodes();
    std::vector<int> sizes(nodes.size(), 0);
    // count rows reaching each node
    for (int i = 0; i < 60; ++i) {
      int id = 0;
      sizes[0]++;
      while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
        const auto& nd = nodes[static_cast<std::size_t>(id)];
        id = X(i, nd.feature) < nd.threshold ? nd.left : nd.right;
        sizes[static_cast<std::size_t>(id)]++;
      }
    }
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (nodes[k].feature >= 0) {
        CHECK(sizes[static_cast<std::size_t>(nodes[k].left)] >= 10);
        CHECK(sizes[static_cast<std::size_t>(nodes[k].right)] >= 10);
      }
  }
}

TEST_CASE("ensemble learners respect the importance contract") {
  Rng rng(99);
  Eigen::MatrixXd X(40, 3);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
    y(i) = X(i, 0) > 0 ? 1.0 : 0.0;
  }
  FeatureInfo info{{"a", "b", "q1_dummy"}, {false, false, true}};

  RfLearner rf(info, ForestConfig{.n_estimators = 5});
  rf.fit(X, y);
  CHECK(rf.importance().count("q1_dummy") == 0);
  CHECK(rf.importance().count("a") == 1);

  XgbLearner xgb(info, BoostConfig{.n_rounds = 5});
  xgb.fit(X, y);
  CHECK(xgb.importance().count("q1_dummy") == 0);
}
