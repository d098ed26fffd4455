#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nowcast/learner.hpp"

namespace nowcast {

// Naive forecast: next value equals the last observed one.
double rw_forecast(std::span<const double> y);

struct ArFit {
  double intercept = 0.0;
  Eigen::VectorXd phi;
  bool regularized = false;  // singular normal equations fell back to a tiny ridge
};

// OLS AR(p) fit plus the one-step-ahead forecast from the series tail.
double ar_fit_forecast(std::span<const double> y, int p, ArFit* fit_out = nullptr);

struct PenalizedFit {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  double penalty = 0.0;   // lambda (lasso), alpha (ridge/EN)
  double mix = 1.0;       // EN mixing; 1 = pure L1, 0 = pure L2
  bool converged = true;
  int sweeps = 0;

  double predict(const Eigen::VectorXd& x) const {
    return intercept + coefficients.dot(x);
  }
};

// All objectives use the 1/(2n) residual normalization with an unpenalized
// intercept fit on centered data.
//   ridge:  (1/2n)||y - b0 - Xb||^2 + alpha * ||b||^2        (closed form)
//   lasso:  (1/2n)||y - b0 - Xb||^2 + lambda * ||b||_1       (coordinate descent)
//   enet:   (1/2n)||y - b0 - Xb||^2
//           + alpha * [(1-gamma) * ||b||^2 + gamma * ||b||_1]
PenalizedFit ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha);
PenalizedFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                       double tol = 1e-6, int max_iter = 10000);
PenalizedFit enet_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                      double gamma_mix, double tol = 1e-6, int max_iter = 10000);

// Objective value for the elastic-net family (gamma 1 = lasso, 0 = ridge).
double enet_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const PenalizedFit& fit);

// Signed coefficients on non-dummy features, keyed by name.
std::map<std::string, double> cbfi_importance(const PenalizedFit& fit, const FeatureInfo& info);

// ---- Learner adapters ----

class RwLearner final : public Learner {
 public:
  void fit(const Eigen::MatrixXd&, const Eigen::VectorXd& y) override;
  double predict(const Eigen::VectorXd&) const override;

 private:
  double last_ = 0.0;
  bool fitted_ = false;
};

class ArLearner final : public Learner {
 public:
  explicit ArLearner(int order = 3) : order_(order) {}
  void fit(const Eigen::MatrixXd&, const Eigen::VectorXd& y) override;
  double predict(const Eigen::VectorXd&) const override;

 private:
  int order_;
  double forecast_ = 0.0;
  bool fitted_ = false;
};

enum class PenaltyKind { kRidge, kLasso, kElasticNet };

class PenalizedLearner final : public Learner {
 public:
  PenalizedLearner(PenaltyKind kind, FeatureInfo info, double penalty, double mix = 1.0)
      : kind_(kind), info_(std::move(info)), penalty_(penalty), mix_(mix) {}

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) override;
  double predict(const Eigen::VectorXd& x) const override;
  std::map<std::string, double> importance() const override;

  const PenalizedFit& fit_result() const { return fit_; }

 private:
  PenaltyKind kind_;
  FeatureInfo info_;
  double penalty_;
  double mix_;
  PenalizedFit fit_;
  bool fitted_ = false;
};

}  // namespace nowcast
