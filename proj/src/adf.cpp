#include "nowcast/adf.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "nowcast/errors.hpp"
#include "nowcast/math_util.hpp"

namespace nowcast {

namespace {

// MacKinnon (2010) response-surface coefficients, one variable, constant only.
struct CritSurface {
  double alpha;
  double b_inf, b1, b2, b3;
};

constexpr CritSurface kSurfaces[] = {
    {0.01, -3.43035, -6.5393, -16.786, -79.433},
    {0.05, -2.86154, -2.8903, -4.234, -40.040},
    {0.10, -2.56677, -1.5384, -2.809, 0.0},
};

double critical_value(double alpha, int n) {
  for (const auto& s : kSurfaces) {
    if (std::fabs(alpha - s.alpha) < 1e-9) {
      const double t = static_cast<double>(n);
      return s.b_inf + s.b1 / t + s.b2 / (t * t) + s.b3 / (t * t * t);
    }
  }
  throw ConfigError("adf_alpha must be one of 0.01, 0.05, 0.10 (tabulated levels)");
}

}  // namespace

AdfResult adf_test(std::span<const double> y, int lags, double alpha) {
  const auto n = static_cast<int>(y.size());
  // rows usable: t runs from lags+1 .. n-1 (0-based), regressors: 1, y_{t-1}, dy_{t-1..lags}
  const int m = n - lags - 1;
  const int k = 2 + lags;
  if (m <= k) throw ShapeError("series too short for ADF with " + std::to_string(lags) + " lags");

  Eigen::MatrixXd X(m, k);
  Eigen::VectorXd dy(m);
  for (int i = 0; i < m; ++i) {
    const int t = lags + 1 + i;
    dy(i) = y[t] - y[t - 1];
    X(i, 0) = 1.0;
    X(i, 1) = y[t - 1];
    for (int j = 1; j <= lags; ++j) X(i, 1 + j) = y[t - j] - y[t - j - 1];
  }

  const Eigen::MatrixXd xtx = X.transpose() * X;
  const Eigen::LDLT<Eigen::MatrixXd> solver(xtx);
  if (solver.info() != Eigen::Success)
    throw NumericError("ADF normal equations are singular");
  const Eigen::VectorXd beta = solver.solve(X.transpose() * dy);
  const Eigen::VectorXd resid = dy - X * beta;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(m - k);
  const Eigen::MatrixXd xtx_inv = solver.solve(Eigen::MatrixXd::Identity(k, k));
  const double se = std::sqrt(sigma2 * xtx_inv(1, 1));
  if (!(se > 0.0)) throw NumericError("ADF coefficient standard error is degenerate");

  AdfResult r;
  r.stat = beta(1) / se;
  r.lags = lags;
  r.effective_n = m;
  r.critical_value = critical_value(alpha, m);
  r.stationary = r.stat < r.critical_value;
  return r;
}

AdfFilterOutcome adf_filter(const SeriesFrame& frame, const TransformSpec& spec) {
  spec.validate();
  AdfFilterOutcome out{frame, {}};
  for (const auto& name : frame.names_of(ColumnKind::kContinuous)) {
    const auto& col = frame.column(name);
    AdfDecision d;
    d.column = name;
    const double m = stats::mean(col);
    if (stats::variance(col) <= 1e-14 * (1.0 + m * m)) {
      d.dropped = true;
      d.reason = DropReason::kZeroVariance;
    } else {
      d.result = adf_test(col, spec.adf_lags, spec.adf_alpha);
      d.dropped = !d.result.stationary;
      d.reason = DropReason::kUnitRoot;
    }
    if (d.dropped) out.frame.drop_column(name);
    out.decisions.push_back(std::move(d));
  }
  return out;
}

}  // namespace nowcast
