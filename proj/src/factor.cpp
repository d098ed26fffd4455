#include "nowcast/factor.hpp"

#include <cmath>

#include "nowcast/errors.hpp"
#include "nowcast/linear.hpp"

namespace nowcast {

PcaDecomposition pca_decompose(const Eigen::MatrixXd& X, int k) {
  const auto n = static_cast<int>(X.rows());
  const auto p = static_cast<int>(X.cols());
  if (n < 2) throw ShapeError("PCA needs at least two rows");
  if (k < 1 || k > std::min(n - 1, p))
    throw ShapeError("component count " + std::to_string(k) + " outside 1..min(n-1, p)");

  PcaDecomposition d;
  d.means = X.colwise().mean();
  const Eigen::MatrixXd Xc = X.rowwise() - d.means;
  const Eigen::MatrixXd cov = (Xc.transpose() * Xc) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("PCA eigen-solver failed");

  // SelfAdjointEigenSolver returns ascending eigenvalues; take the top k.
  d.loadings.resize(p, k);
  d.eigenvalues.resize(k);
  for (int j = 0; j < k; ++j) {
    const int src = p - 1 - j;
    d.eigenvalues(j) = std::max(0.0, solver.eigenvalues()(src));
    d.loadings.col(j) = solver.eigenvectors().col(src);
    // deterministic sign: largest-magnitude entry positive
    int arg = 0;
    d.loadings.col(j).cwiseAbs().maxCoeff(&arg);
    if (d.loadings(arg, j) < 0.0) d.loadings.col(j) = -d.loadings.col(j);
  }
  d.scores = Xc * d.loadings;
  return d;
}

PcrFit pcr_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k, double lambda) {
  if (lambda < 0.0) throw ConfigError("pcr lambda must be >= 0");
  if (X.rows() != y.size()) throw ShapeError("X rows and y length differ");
  PcrFit fit;
  fit.pca = pca_decompose(X, k);

  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd yc = y.array() - y.mean();
  Eigen::MatrixXd lhs = fit.pca.scores.transpose() * fit.pca.scores;
  lhs.diagonal().array() += 2.0 * n * lambda + (lambda == 0.0 ? 1e-10 : 0.0);
  const Eigen::VectorXd gamma = lhs.ldlt().solve(fit.pca.scores.transpose() * yc);

  fit.coefficients = fit.pca.loadings * gamma;
  fit.intercept = y.mean() - fit.pca.means.dot(fit.coefficients);
  return fit;
}

PlsFit pls_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int components) {
  const auto n = static_cast<int>(X.rows());
  const auto p = static_cast<int>(X.cols());
  if (X.rows() != y.size()) throw ShapeError("X rows and y length differ");
  if (components < 1 || components > std::min(n - 1, p))
    throw ShapeError("component count outside 1..min(n-1, p)");

  PlsFit fit;
  fit.x_means = X.colwise().mean();
  fit.y_mean = y.mean();
  Eigen::MatrixXd Xa = X.rowwise() - fit.x_means;
  Eigen::VectorXd ya = y.array() - fit.y_mean;
  if (ya.squaredNorm() <= 0.0) throw NumericError("PLS target has zero variance");

  fit.weights.resize(p, components);
  fit.scores.resize(n, components);
  fit.x_loadings.resize(p, components);
  fit.y_loadings.resize(components);
  fit.ss_y.resize(components);

  int built = 0;
  for (int a = 0; a < components; ++a) {
    Eigen::VectorXd w = Xa.transpose() * ya;
    const double wn = w.norm();
    if (wn <= 1e-14) break;  // nothing left to extract
    w /= wn;
    const Eigen::VectorXd t = Xa * w;
    const double tt = t.squaredNorm();
    if (tt <= 1e-14) break;
    const Eigen::VectorXd pa = Xa.transpose() * t / tt;
    const double ca = ya.dot(t) / tt;

    fit.weights.col(a) = w;
    fit.scores.col(a) = t;
    fit.x_loadings.col(a) = pa;
    fit.y_loadings(a) = ca;
    fit.ss_y(a) = ca * ca * tt;

    Xa -= t * pa.transpose();
    ya -= ca * t;
    ++built;
  }
  if (built == 0) throw NumericError("PLS extracted no components");
  if (built < components) {
    fit.weights.conservativeResize(p, built);
    fit.scores.conservativeResize(n, built);
    fit.x_loadings.conservativeResize(p, built);
    fit.y_loadings.conservativeResize(built);
    fit.ss_y.conservativeResize(built);
  }

  // regression form: beta = W (P' W)^{-1} c
  const Eigen::MatrixXd pw = fit.x_loadings.transpose() * fit.weights;
  fit.coefficients =
      fit.weights * pw.colPivHouseholderQr().solve(fit.y_loadings);
  return fit;
}

Eigen::VectorXd vip_scores(const PlsFit& fit) {
  const auto p = static_cast<int>(fit.weights.rows());
  const int A = fit.components();
  const double total = fit.ss_y.sum();
  if (total <= 0.0) throw NumericError("VIP undefined: no explained variance");
  Eigen::VectorXd vip(p);
  for (int j = 0; j < p; ++j) {
    double acc = 0.0;
    for (int a = 0; a < A; ++a) {
      const double wja = fit.weights(j, a);  // weight columns are unit norm
      acc += fit.ss_y(a) * wja * wja;
    }
    vip(j) = std::sqrt(static_cast<double>(p) * acc / total);
  }
  return vip;
}

DfmForecast dfm_fit_forecast(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::MatrixXd& dummies, const Eigen::VectorXd& x_test,
                             const Eigen::VectorXd& dummies_test, int r, int p_ar) {
  if (r < 1) throw ConfigError("DFM needs at least one factor");
  if (p_ar < 0) throw ConfigError("idiosyncratic AR order must be >= 0");
  const auto n = static_cast<int>(X.rows());
  if (y.size() != n || dummies.rows() != n) throw ShapeError("DFM inputs misaligned");

  const auto pca = pca_decompose(X, r);
  const auto kd = static_cast<int>(dummies.cols());

  Eigen::MatrixXd design(n, r + kd + 1);
  design.leftCols(r) = pca.scores;
  if (kd > 0) design.middleCols(r, kd) = dummies;
  design.col(r + kd).setOnes();

  Eigen::MatrixXd xtx = design.transpose() * design;
  xtx.diagonal().array() += 1e-10;
  const Eigen::VectorXd beta = xtx.ldlt().solve(design.transpose() * y);
  const Eigen::VectorXd resid = y - design * beta;

  Eigen::VectorXd z(r + kd + 1);
  z.head(r) = pca.transform(x_test);
  if (kd > 0) z.segment(r, kd) = dummies_test;
  z(r + kd) = 1.0;

  DfmForecast out;
  out.factor_coefficients = beta;
  out.forecast = beta.dot(z);
  if (p_ar > 0 && n > p_ar + 1) {
    std::vector<double> e(resid.data(), resid.data() + resid.size());
    ArFit ar;
    const double resid_forecast = ar_fit_forecast(e, p_ar, &ar);
    out.residual_ar = ar.phi;
    out.forecast += resid_forecast;
  }
  return out;
}

void PcrLearner::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const int k = std::min(k_, static_cast<int>(std::min(X.rows() - 1, X.cols())));
  fit_ = pcr_fit(X, y, k, lambda_);
  fitted_ = true;
}

double PcrLearner::predict(const Eigen::VectorXd& x) const {
  if (!fitted_) throw NumericError("predict before fit");
  return fit_.predict(x);
}

std::map<std::string, double> PcrLearner::importance() const {
  if (!fitted_) throw NumericError("importance before fit");
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < info_.count(); ++j) {
    if (info_.is_dummy[j]) continue;
    out[info_.names[j]] = fit_.coefficients(static_cast<Eigen::Index>(j));
  }
  return out;
}

void PlsLearner::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const int a = std::min(components_, static_cast<int>(std::min(X.rows() - 1, X.cols())));
  fit_ = pls_fit(X, y, a);
  fitted_ = true;
}

double PlsLearner::predict(const Eigen::VectorXd& x) const {
  if (!fitted_) throw NumericError("predict before fit");
  return fit_.predict(x);
}

std::map<std::string, double> PlsLearner::importance() const {
  if (!fitted_) throw NumericError("importance before fit");
  const auto vip = vip_scores(fit_);
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < info_.count(); ++j) {
    if (info_.is_dummy[j]) continue;
    out[info_.names[j]] = vip(static_cast<Eigen::Index>(j));
  }
  return out;
}

Eigen::MatrixXd DfmLearner::split_continuous(const Eigen::MatrixXd& X) const {
  std::vector<int> keep;
  for (std::size_t j = 0; j < info_.count(); ++j)
    if (!info_.is_dummy[j]) keep.push_back(static_cast<int>(j));
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = X.col(keep[j]);
  return out;
}

Eigen::MatrixXd DfmLearner::split_dummies(const Eigen::MatrixXd& X) const {
  std::vector<int> keep;
  for (std::size_t j = 0; j < info_.count(); ++j)
    if (info_.is_dummy[j]) keep.push_back(static_cast<int>(j));
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = X.col(keep[j]);
  return out;
}

void DfmLearner::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  train_x_ = split_continuous(X);
  train_dummies_ = split_dummies(X);
  train_y_ = y;
  fitted_ = true;
}

double DfmLearner::predict(const Eigen::VectorXd& x) const {
  if (!fitted_) throw NumericError("predict before fit");
  const Eigen::MatrixXd row = x.transpose();
  const Eigen::VectorXd xc = split_continuous(row).row(0);
  const Eigen::VectorXd xd = split_dummies(row).row(0);
  const int r = std::min(r_, static_cast<int>(std::min(train_x_.rows() - 1, train_x_.cols())));
  return dfm_fit_forecast(train_x_, train_y_, train_dummies_, xc, xd, r, p_ar_).forecast;
}

}  // namespace nowcast
