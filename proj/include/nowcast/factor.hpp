#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "nowcast/learner.hpp"

namespace nowcast {

struct PcaDecomposition {
  Eigen::MatrixXd loadings;     // p x k, orthonormal columns
  Eigen::VectorXd eigenvalues;  // k, descending
  Eigen::RowVectorXd means;     // centering vector
  Eigen::MatrixXd scores;       // n x k

  Eigen::VectorXd transform(const Eigen::VectorXd& x) const {
    return loadings.transpose() * (x - means.transpose());
  }
};

// Eigen-decomposition of the sample covariance (1/(n-1)) of centered X.
PcaDecomposition pca_decompose(const Eigen::MatrixXd& X, int k);

struct PcrFit {
  Eigen::VectorXd coefficients;  // back-projected to the original space
  double intercept = 0.0;
  PcaDecomposition pca;

  double predict(const Eigen::VectorXd& x) const {
    return intercept + coefficients.dot(x);
  }
};

// Ridge of y on the first k principal-component scores with penalty lambda;
// coefficients are re-expressed in the original predictor space.
PcrFit pcr_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k, double lambda);

struct PlsFit {
  Eigen::MatrixXd weights;     // p x A   (w_a)
  Eigen::MatrixXd scores;      // n x A   (t_a)
  Eigen::MatrixXd x_loadings;  // p x A   (p_a)
  Eigen::VectorXd y_loadings;  // A       (c_a)
  Eigen::VectorXd ss_y;        // A, variance of y explained per component
  Eigen::VectorXd coefficients;  // p, regression form for prediction
  Eigen::RowVectorXd x_means;
  double y_mean = 0.0;

  int components() const { return static_cast<int>(y_loadings.size()); }
  double predict(const Eigen::VectorXd& x) const {
    return y_mean + coefficients.dot(x - x_means.transpose());
  }
};

// NIPALS PLS1 with X- and y-deflation.
PlsFit pls_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int components);

// Wold/Chong-Jun VIP scores; nonnegative, mean of squares equals 1.
Eigen::VectorXd vip_scores(const PlsFit& fit);

struct DfmForecast {
  double forecast = 0.0;
  Eigen::VectorXd factor_coefficients;  // on factors, then dummies, then 1
  Eigen::VectorXd residual_ar;          // AR coefficients on the idiosyncratic part
};

// Light dynamic factor benchmark: PCA factors of X, OLS of y on
// [factors, dummies], AR(p_ar) on that regression's residuals; the forecast
// adds the AR correction to the regression prediction at the test row.
DfmForecast dfm_fit_forecast(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::MatrixXd& dummies, const Eigen::VectorXd& x_test,
                             const Eigen::VectorXd& dummies_test, int r, int p_ar);

// ---- Learner adapters ----

class PcrLearner final : public Learner {
 public:
  PcrLearner(FeatureInfo info, int k, double lambda)
      : info_(std::move(info)), k_(k), lambda_(lambda) {}
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) override;
  double predict(const Eigen::VectorXd& x) const override;
  std::map<std::string, double> importance() const override;

 private:
  FeatureInfo info_;
  int k_;
  double lambda_;
  PcrFit fit_;
  bool fitted_ = false;
};

class PlsLearner final : public Learner {
 public:
  PlsLearner(FeatureInfo info, int components)
      : info_(std::move(info)), components_(components) {}
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) override;
  double predict(const Eigen::VectorXd& x) const override;
  std::map<std::string, double> importance() const override;  // VIP

 private:
  FeatureInfo info_;
  int components_;
  PlsFit fit_;
  bool fitted_ = false;
};

// Columns flagged as dummies in `info` go to the regression block, the rest
// feed the PCA factor extraction.
class DfmLearner final : public Learner {
 public:
  DfmLearner(FeatureInfo info, int r, int p_ar) : info_(std::move(info)), r_(r), p_ar_(p_ar) {}
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) override;
  double predict(const Eigen::VectorXd& x) const override;

 private:
  Eigen::MatrixXd split_continuous(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd split_dummies(const Eigen::MatrixXd& X) const;

  FeatureInfo info_;
  int r_;
  int p_ar_;
  Eigen::MatrixXd train_x_, train_dummies_;
  Eigen::VectorXd train_y_;
  bool fitted_ = false;
};

}  // namespace nowcast
