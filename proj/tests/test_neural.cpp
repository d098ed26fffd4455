#include <cmath>

#include "doctest.h"
#include "nowcast/errors.hpp"
#include "nowcast/neural.hpp"
#include "nowcast/rng.hpp"

using namespace nowcast;

namespace {

// central finite differences over the flat parameter vector
template <typename Net, typename LossFn>
double max_relative_grad_error(Net& net, const LossFn& loss_fn,
                               const Eigen::VectorXd& analytic) {
  const Eigen::VectorXd theta0 = net.parameters();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta0.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::fabs(theta0(i)));
    Eigen::VectorXd t = theta0;
    t(i) = theta0(i) + h;
    net.set_parameters(t);
    const double up = loss_fn();
    t(i) = theta0(i) - h;
    net.set_parameters(t);
    const double down = loss_fn();
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({1e-8, std::fabs(numeric), std::fabs(analytic(i))});
    worst = std::max(worst, std::fabs(numeric - analytic(i)) / denom);
  }
  net.set_parameters(theta0);
  return worst;
}

}  // namespace

TEST_CASE("mlp forward basics") {
  MlpConfig config{.hidden_dim = 4, .num_hidden_layers = 1, .dropout_rate = 0.0};
  MlpNet net(3, config, 1);

  // zero all weights: output equals the output-layer bias for any input
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(net.parameters().size());
  theta(theta.size() - 1) = 0.75;  // final bias is the last parameter
  net.set_parameters(theta);
  Rng rng(2);
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd x(3);
    x << rng.normal(), rng.normal(), rng.normal();
    CHECK(net.forward(x) == doctest::Approx(0.75));
  }
}

TEST_CASE("mlp learns a linear map and beats the variance baseline") {
  Rng rng(42);
  const int n = 120;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.uniform(-1.0, 1.0);
    y(i) = 3.0 * X(i, 0) + 0.05 * rng.normal();
  }
  const Eigen::MatrixXd Xtr = X.topRows(90), Xte = X.bottomRows(30);
  const Eigen::VectorXd ytr = y.head(90), yte = y.tail(30);

  MlpConfig config{.hidden_dim = 8, .num_hidden_layers = 1, .dropout_rate = 0.0};
  MlpNet net(1, config, 42);
  TrainSchedule schedule;
  schedule.max_epochs = 200;
  schedule.lr = 5e-3;
  net.train(Xtr, ytr, schedule, &Xte, &yte);

  double mse = 0.0, var = 0.0;
  const double mean = yte.mean();
  for (int i = 0; i < 30; ++i) {
    const double err = net.forward(Xte.row(i)) - yte(i);
    mse += err * err;
    var += (yte(i) - mean) * (yte(i) - mean);
  }
  CHECK(mse / 30.0 < var / 30.0 / 10.0);
}

TEST_CASE("mlp analytic gradients match finite differences") {
  Rng rng(7);
  Eigen::MatrixXd X(12, 3);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
    y(i) = rng.normal();
  }
  MlpConfig config{.hidden_dim = 5, .num_hidden_layers = 2, .dropout_rate = 0.0};
  MlpNet net(3, config, 9);

  const auto [loss, grad] = net.loss_and_gradient(X, y);
  CHECK(loss > 0.0);
  const double err = max_relative_grad_error(
      net, [&] { return net.loss_and_gradient(X, y).first; }, grad);
  CHECK(err <= 1e-4);
}

TEST_CASE("mlp evaluation forward is deterministic and dropout-free") {
  MlpConfig config{.hidden_dim = 16, .num_hidden_layers = 1, .dropout_rate = 0.5};
  MlpNet net(2, config, 3);
  Eigen::VectorXd x(2);
  x << 0.4, -1.2;
  const double a = net.forward(x);
  for (int k = 0; k < 10; ++k) CHECK(net.forward(x) == a);

  // same seed, different dropout rate: identical initial weights, identical
  // evaluation output before training
  MlpConfig nodrop = config;
  nodrop.dropout_rate = 0.0;
  MlpNet twin(2, nodrop, 3);
  CHECK(twin.forward(x) == a);
}

TEST_CASE("mlp early stopping restores the best validation epoch") {
  Rng rng(11);
  Eigen::MatrixXd X(40, 2), Xv(10, 2);
  Eigen::VectorXd y(40), yv(10);
  for (int i = 0; i < 40; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y(i) = X(i, 0) - X(i, 1) + 0.1 * rng.normal();
  }
  for (int i = 0; i < 10; ++i) {
    Xv(i, 0) = rng.normal();
    Xv(i, 1) = rng.normal();
    yv(i) = Xv(i, 0) - Xv(i, 1) + 0.1 * rng.normal();
  }
  MlpConfig config{.hidden_dim = 12, .num_hidden_layers = 1, .dropout_rate = 0.0};
  MlpNet net(2, config, 5);
  TrainSchedule schedule;
  schedule.max_epochs = 120;
  schedule.early_stop_patience = 10;
  schedule.lr = 1e-2;
  const auto result = net.train(X, y, schedule, &Xv, &yv);

  REQUIRE(result.best_epoch >= 0);
  double best = result.val_history[static_cast<std::size_t>(result.best_epoch)];
  for (double v : result.val_history) CHECK(best <= v + 1e-12);

  // restored weights reproduce the recorded minimum
  double val = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double err = net.forward(Xv.row(i)) - yv(i);
    val += err * err;
  }
  CHECK(val / 10.0 == doctest::Approx(best).epsilon(1e-10));
}

TEST_CASE("gru_cell gate algebra") {
  const int h = 3, p = 2;
  GruCellParams params;
  params.w_update = Eigen::MatrixXd::Zero(h, p);
  params.u_update = Eigen::MatrixXd::Zero(h, h);
  params.b_update = Eigen::VectorXd::Zero(h);
  params.w_reset = params.w_update;
  params.u_reset = params.u_update;
  params.b_reset = params.b_update;
  params.w_cand = params.w_update;
  params.u_cand = params.u_update;
  params.b_cand = params.b_update;

  Eigen::VectorXd h_prev(h), x(p);
  h_prev << 1.0, -2.0, 0.5;
  x << 0.3, 0.7;

  SUBCASE("zero parameters halve the carried state") {
    const auto out = gru_cell(h_prev, x, params);
    for (int i = 0; i < h; ++i) CHECK(out(i) == doctest::Approx(0.5 * h_prev(i)));
  }

  SUBCASE("saturated update gate keeps only the candidate") {
    params.b_update = Eigen::VectorXd::Constant(h, 50.0);  // z -> 1
    params.b_cand = Eigen::VectorXd::Constant(h, 0.3);
    const auto out = gru_cell(h_prev, x, params);
    for (int i = 0; i < h; ++i) CHECK(out(i) == doctest::Approx(std::tanh(0.3)).epsilon(1e-9));
  }

  SUBCASE("closed update gate carries the state unchanged") {
    params.b_update = Eigen::VectorXd::Constant(h, -50.0);  // z -> 0
    const auto out = gru_cell(h_prev, x, params);
    for (int i = 0; i < h; ++i) CHECK(out(i) == doctest::Approx(h_prev(i)).epsilon(1e-9));
  }
}

TEST_CASE("gru bptt gradients match finite differences on a 3-step sequence") {
  Rng rng(13);
  GruConfig config{.hidden_dim = 4, .num_layers = 1, .dropout_rate = 0.0, .l2_reg = 1e-3,
                   .seq_len = 3};
  GruNet net(2, config, 17);

  std::vector<Eigen::MatrixXd> windows;
  Eigen::VectorXd y(4);
  for (int k = 0; k < 4; ++k) {
    Eigen::MatrixXd w(3, 2);
    for (int t = 0; t < 3; ++t)
      for (int j = 0; j < 2; ++j) w(t, j) = rng.normal();
    windows.push_back(w);
    y(k) = rng.normal();
  }

  const auto [loss, grad] = net.loss_and_gradient(windows, y);
  CHECK(loss > 0.0);
  const double err = max_relative_grad_error(
      net, [&] { return net.loss_and_gradient(windows, y).first; }, grad);
  CHECK(err <= 1e-4);
}

TEST_CASE("gru bptt gradients with two layers") {
  Rng rng(19);
  GruConfig config{.hidden_dim = 3, .num_layers = 2, .dropout_rate = 0.0, .l2_reg = 0.0,
                   .seq_len = 4};
  GruNet net(2, config, 23);

  std::vector<Eigen::MatrixXd> windows;
  Eigen::VectorXd y(3);
  for (int k = 0; k < 3; ++k) {
    Eigen::MatrixXd w(4, 2);
    for (int t = 0; t < 4; ++t)
      for (int j = 0; j < 2; ++j) w(t, j) = rng.normal();
    windows.push_back(w);
    y(k) = rng.normal();
  }
  const auto [loss, grad] = net.loss_and_gradient(windows, y);
  const double err = max_relative_grad_error(
      net, [&] { return net.loss_and_gradient(windows, y).first; }, grad);
  CHECK(err <= 1e-4);
}

TEST_CASE("gru heavy l2 drives weights toward zero") {
  Rng rng(29);
  Eigen::MatrixXd X(40, 2);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y(i) = X(i, 0);
  }
  GruConfig config{.hidden_dim = 4, .num_layers = 1, .dropout_rate = 0.0, .l2_reg = 50.0,
                   .seq_len = 4};
  GruNet net(2, config, 31);
  TrainSchedule schedule;
  schedule.max_epochs = 150;
  schedule.lr = 1e-2;
  const double before = net.parameters().norm();
  net.train(X, y, schedule);
  CHECK(net.parameters().norm() < 0.05 * before);
}

TEST_CASE("integrated gradients") {
  SUBCASE("linear function is exact at any step count") {
    Eigen::VectorXd w(3);
    w << 1.0, -2.0, 0.5;
    const DifferentiableFn fn{[&](const Eigen::VectorXd& v) { return w.dot(v); },
                              [&](const Eigen::VectorXd&) { return w; }};
    Eigen::VectorXd x(3);
    x << 2.0, 1.0, -1.0;
    const Eigen::VectorXd b = Eigen::VectorXd::Zero(3);
    for (int m : {2, 7, 50}) {
      const auto ig = integrated_gradients(fn, x, b, m);
      for (int j = 0; j < 3; ++j) CHECK(ig(j) == doctest::Approx(w(j) * x(j)).epsilon(1e-12));
      CHECK(std::fabs(ig.sum() - (fn.value(x) - fn.value(b))) < 1e-10);
    }
  }

  SUBCASE("x equals the baseline gives zero attributions") {
    const DifferentiableFn fn{
        [](const Eigen::VectorXd& v) { return v.squaredNorm(); },
        [](const Eigen::VectorXd& v) { return Eigen::VectorXd(2.0 * v); }};
    Eigen::VectorXd x(2);
    x << 0.4, -0.6;
    const auto ig = integrated_gradients(fn, x, x, 16);
    CHECK(ig.lpNorm<Eigen::Infinity>() == 0.0);
  }

  SUBCASE("completeness on a smooth two-layer net at m=256") {
    // tanh net with explicit analytic gradient, independent of MlpNet
    Rng rng(41);
    Eigen::MatrixXd W1(4, 3);
    Eigen::VectorXd b1(4), w2(4);
    for (int i = 0; i < 4; ++i) {
      b1(i) = rng.normal() * 0.3;
      w2(i) = rng.normal();
      for (int j = 0; j < 3; ++j) W1(i, j) = rng.normal() * 0.7;
    }
    const auto value = [&](const Eigen::VectorXd& v) {
      return w2.dot((W1 * v + b1).unaryExpr([](double u) { return std::tanh(u); }));
    };
    const DifferentiableFn fn{
        value,
        [&](const Eigen::VectorXd& v) {
          const Eigen::VectorXd t = (W1 * v + b1).unaryExpr([](double u) { return std::tanh(u); });
          const Eigen::VectorXd dt = Eigen::VectorXd::Ones(4) - t.cwiseProduct(t);
          return Eigen::VectorXd(W1.transpose() * w2.cwiseProduct(dt));
        }};
    Eigen::VectorXd x(3), b(3);
    x << 1.2, -0.7, 0.4;
    b.setZero();
    const auto ig = integrated_gradients(fn, x, b, 256);
    CHECK(std::fabs(ig.sum() - (value(x) - value(b))) <= 1e-3);
  }

  SUBCASE("attributions ignore constant output shifts") {
    const DifferentiableFn base{
        [](const Eigen::VectorXd& v) { return v(0) * v(0); },
        [](const Eigen::VectorXd& v) {
          Eigen::VectorXd g(1);
          g << 2.0 * v(0);
          return g;
        }};
    const DifferentiableFn shifted{
        [&](const Eigen::VectorXd& v) { return base.value(v) + 100.0; }, base.gradient};
    Eigen::VectorXd x(1), b(1);
    x << 1.5;
    b << 0.0;
    const auto a = integrated_gradients(base, x, b, 64);
    const auto c = integrated_gradients(shifted, x, b, 64);
    CHECK(a(0) == doctest::Approx(c(0)));
  }
}

TEST_CASE("mlp learner importance is IG-based and skips dummies") {
  Rng rng(51);
  Eigen::MatrixXd X(60, 3);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    X(i, 2) = (i % 4 == 0) ? 1.0 : 0.0;
    y(i) = 2.0 * X(i, 0) + 0.1 * rng.normal();
  }
  FeatureInfo info{{"signal", "noise", "q1"}, {false, false, true}};
  TrainSchedule schedule;
  schedule.max_epochs = 150;
  schedule.lr = 5e-3;
  MlpLearner learner(info, MlpConfig{.hidden_dim = 8, .num_hidden_layers = 1}, schedule);
  learner.fit(X, y);
  const auto imp = learner.importance();
  CHECK(imp.count("q1") == 0);
  CHECK(std::fabs(imp.at("signal")) > std::fabs(imp.at("noise")));
}

TEST_CASE("gru learner consumes trailing windows") {
  Rng rng(61);
  Eigen::MatrixXd X(50, 2);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y(i) = X(i, 0);
  }
  FeatureInfo info{{"a", "b"}, {false, false}};
  TrainSchedule schedule;
  schedule.max_epochs = 30;
  schedule.early_stop_patience = 10;
  GruLearner learner(info, GruConfig{.hidden_dim = 4, .seq_len = 4}, schedule);
  CHECK(learner.wants_history());
  learner.fit(X, y);

  Eigen::MatrixXd window(4, 2);
  for (int t = 0; t < 4; ++t) {
    window(t, 0) = 0.1 * t;
    window(t, 1) = -0.1;
  }
  const double with_history = learner.predict_with_history(window);
  CHECK(std::isfinite(with_history));
  const auto imp = learner.importance();
  CHECK(imp.size() == 2);
}
