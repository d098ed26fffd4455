#include "nowcast/linear.hpp"

#include <cmath>

#include "nowcast/errors.hpp"

namespace nowcast {

namespace {

struct Centered {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::RowVectorXd x_mean;
  double y_mean = 0.0;
};

Centered center(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw ShapeError("X rows and y length differ");
  if (X.rows() == 0) throw ShapeError("empty design matrix");
  Centered c;
  c.x_mean = X.colwise().mean();
  c.y_mean = y.mean();
  c.X = X.rowwise() - c.x_mean;
  c.y = y.array() - c.y_mean;
  return c;
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace

double rw_forecast(std::span<const double> y) {
  if (y.empty()) throw ShapeError("random walk forecast needs a nonempty series");
  return y.back();
}

double ar_fit_forecast(std::span<const double> y, int p, ArFit* fit_out) {
  if (p < 1) throw ConfigError("AR order must be >= 1");
  const auto n = static_cast<int>(y.size());
  if (n <= p + 1) throw ShapeError("series too short for AR(" + std::to_string(p) + ")");

  const int m = n - p;
  Eigen::MatrixXd X(m, p + 1);
  Eigen::VectorXd target(m);
  for (int i = 0; i < m; ++i) {
    const int t = p + i;
    target(i) = y[t];
    X(i, 0) = 1.0;
    for (int j = 1; j <= p; ++j) X(i, j) = y[t - j];
  }

  Eigen::MatrixXd xtx = X.transpose() * X;
  Eigen::VectorXd xty = X.transpose() * target;
  bool regularized = false;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
  if (!lu.isInvertible()) {
    xtx.diagonal().array() += 1e-8;
    regularized = true;
  }
  const Eigen::VectorXd beta = xtx.ldlt().solve(xty);

  double forecast = beta(0);
  for (int j = 1; j <= p; ++j) forecast += beta(j) * y[n - j];

  if (fit_out) {
    fit_out->intercept = beta(0);
    fit_out->phi = beta.tail(p);
    fit_out->regularized = regularized;
  }
  return forecast;
}

PenalizedFit ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha) {
  if (alpha < 0.0) throw ConfigError("ridge alpha must be >= 0");
  const auto c = center(X, y);
  const double n = static_cast<double>(X.rows());
  // minimizer of (1/2n)||yc - Xc b||^2 + alpha ||b||^2:
  //   (Xc'Xc + 2 n alpha I) b = Xc' yc
  Eigen::MatrixXd lhs = c.X.transpose() * c.X;
  lhs.diagonal().array() += 2.0 * n * alpha + (alpha == 0.0 ? 1e-10 : 0.0);
  PenalizedFit fit;
  fit.coefficients = lhs.ldlt().solve(c.X.transpose() * c.y);
  fit.intercept = c.y_mean - c.x_mean.dot(fit.coefficients);
  fit.penalty = alpha;
  fit.mix = 0.0;
  return fit;
}

PenalizedFit enet_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                      double gamma_mix, double tol, int max_iter) {
  if (alpha < 0.0) throw ConfigError("elastic net alpha must be >= 0");
  if (gamma_mix < 0.0 || gamma_mix > 1.0) throw ConfigError("gamma_mix must be in [0,1]");
  const auto c = center(X, y);
  const auto p = static_cast<int>(X.cols());
  const double n = static_cast<double>(X.rows());

  const double l1 = alpha * gamma_mix;
  const double l2 = alpha * (1.0 - gamma_mix);

  Eigen::VectorXd col_sq(p);
  for (int j = 0; j < p; ++j) col_sq(j) = c.X.col(j).squaredNorm() / n;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd resid = c.y;  // residual of the centered problem

  PenalizedFit fit;
  fit.penalty = alpha;
  fit.mix = gamma_mix;
  fit.converged = false;

  int sweep = 0;
  for (; sweep < max_iter; ++sweep) {
    double max_delta = 0.0;
    for (int j = 0; j < p; ++j) {
      const double denom = col_sq(j) + 2.0 * l2;
      if (denom <= 0.0) continue;  // constant column
      const double old = beta(j);
      const double rho = c.X.col(j).dot(resid) / n + col_sq(j) * old;
      const double updated = soft_threshold(rho, l1) / denom;
      if (updated != old) {
        resid -= (updated - old) * c.X.col(j);
        beta(j) = updated;
        max_delta = std::max(max_delta, std::fabs(updated - old));
      }
    }
    if (max_delta < tol) {
      fit.converged = true;
      ++sweep;
      break;
    }
  }
  fit.sweeps = sweep;
  fit.coefficients = beta;
  fit.intercept = c.y_mean - c.x_mean.dot(beta);
  return fit;
}

PenalizedFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                       double tol, int max_iter) {
  auto fit = enet_fit(X, y, lambda, 1.0, tol, max_iter);
  fit.mix = 1.0;
  return fit;
}

double enet_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const PenalizedFit& fit) {
  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd resid =
      y - Eigen::VectorXd::Constant(X.rows(), fit.intercept) - X * fit.coefficients;
  const double rss = resid.squaredNorm() / (2.0 * n);
  const double l1 = fit.coefficients.lpNorm<1>();
  const double l2 = fit.coefficients.squaredNorm();
  return rss + fit.penalty * (fit.mix * l1 + (1.0 - fit.mix) * l2);
}

std::map<std::string, double> cbfi_importance(const PenalizedFit& fit, const FeatureInfo& info) {
  if (static_cast<std::size_t>(fit.coefficients.size()) != info.count())
    throw ShapeError("coefficient count does not match feature info");
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < info.count(); ++j) {
    if (info.is_dummy[j]) continue;
    out[info.names[j]] = fit.coefficients(static_cast<Eigen::Index>(j));
  }
  return out;
}

void RwLearner::fit(const Eigen::MatrixXd&, const Eigen::VectorXd& y) {
  if (y.size() == 0) throw ShapeError("empty target");
  last_ = y(y.size() - 1);
  fitted_ = true;
}

double RwLearner::predict(const Eigen::VectorXd&) const {
  if (!fitted_) throw NumericError("predict before fit");
  return last_;
}

void ArLearner::fit(const Eigen::MatrixXd&, const Eigen::VectorXd& y) {
  std::vector<double> series(y.data(), y.data() + y.size());
  forecast_ = ar_fit_forecast(series, order_);
  fitted_ = true;
}

double ArLearner::predict(const Eigen::VectorXd&) const {
  if (!fitted_) throw NumericError("predict before fit");
  return forecast_;
}

void PenalizedLearner::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  switch (kind_) {
    case PenaltyKind::kRidge: fit_ = ridge_fit(X, y, penalty_); break;
    case PenaltyKind::kLasso: fit_ = lasso_fit(X, y, penalty_); break;
    case PenaltyKind::kElasticNet: fit_ = enet_fit(X, y, penalty_, mix_); break;
  }
  fitted_ = true;
}

double PenalizedLearner::predict(const Eigen::VectorXd& x) const {
  if (!fitted_) throw NumericError("predict before fit");
  return fit_.predict(x);
}

std::map<std::string, double> PenalizedLearner::importance() const {
  if (!fitted_) throw NumericError("importance before fit");
  return cbfi_importance(fit_, info_);
}

}  // namespace nowcast
