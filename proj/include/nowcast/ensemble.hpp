#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nowcast/learner.hpp"
#include "nowcast/rng.hpp"

namespace nowcast {

enum class SplitCriterion { kSquaredError, kAbsoluteError };

// Node impurity: variance (squared error) or mean absolute deviation from the
// median (absolute error).
double node_impurity(std::span<const double> y, SplitCriterion criterion);

// Impurity(parent) - [nL/n * Impurity(left) + nR/n * Impurity(right)].
double impurity_decrease(std::span<const double> parent, std::span<const double> left,
                         std::span<const double> right, SplitCriterion criterion);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;
  double split_score = 0.0;  // impurity decrease (RF) or gain (boosting)
  int left = -1;
  int right = -1;
};

struct TreeConfig {
  SplitCriterion criterion = SplitCriterion::kSquaredError;
  int max_depth = 6;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  int m_try = -1;  // features considered per split; -1 = all
};

class RegressionTree {
 public:
  // Grows on the rows listed in `rows`. Splits search sorted unique midpoints
  // exhaustively; ties break on lowest feature index, then lowest threshold.
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           const std::vector<int>& rows, const TreeConfig& config, Rng* rng);

  double predict(const Eigen::VectorXd& x) const;

  // Summed impurity decreases per feature.
  Eigen::VectorXd split_score_totals(int n_features) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }

  static RegressionTree from_nodes(std::vector<TreeNode> nodes) {
    RegressionTree t;
    t.nodes_ = std::move(nodes);
    return t;
  }

 private:
  int grow(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<int>& rows,
           int depth, const TreeConfig& config, Rng* rng);
  std::vector<TreeNode> nodes_;
};

struct ForestConfig {
  int n_estimators = 100;
  TreeConfig tree;
  bool bootstrap = true;
  std::uint64_t seed = 42;
};

struct ForestFit {
  std::vector<RegressionTree> trees;
  int n_features = 0;

  double predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd mdi() const;  // average over trees of summed impurity decreases
};

ForestFit rf_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestConfig& config);

// Gain for a candidate boosting split given child gradient sums; the parent
// statistics are the children's totals.
//   Score(S) = -(sum g)^2 / (sum h + lambda)
//   gain = Score(parent) - Score(L) - Score(R) - gamma
double xgb_split_gain(double g_sum_left, double h_sum_left, double g_sum_right,
                      double h_sum_right, double lambda_l2, double gamma_split);

struct BoostConfig {
  int n_rounds = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  double lambda_l2 = 1.0;
  double gamma_split = 0.0;
  double min_child_weight = 1.0;  // enforced on the hessian sum of each child
  double subsample = 1.0;
  double colsample = 1.0;
  std::uint64_t seed = 42;
};

struct BoostFit {
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;
  int n_features = 0;

  double predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gain_importance() const;  // average over trees of summed gains
};

// Second-order boosting with squared-error objective (g = yhat - y, h = 1).
BoostFit xgb_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const BoostConfig& config);

// ---- Learner adapters ----

class RfLearner final : public Learner {
 public:
  RfLearner(FeatureInfo info, ForestConfig config)
      : info_(std::move(info)), config_(config) {}
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) override;
  double predict(const Eigen::VectorXd& x) const override;
  std::map<std::string, double> importance() const override;  // MDI

 private:
  FeatureInfo info_;
  ForestConfig config_;
  ForestFit fit_;
  bool fitted_ = false;
};

class XgbLearner final : public Learner {
 public:
  XgbLearner(FeatureInfo info, BoostConfig config)
      : info_(std::move(info)), config_(config) {}
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) override;
  double predict(const Eigen::VectorXd& x) const override;
  std::map<std::string, double> importance() const override;  // gain

 private:
  FeatureInfo info_;
  BoostConfig config_;
  BoostFit fit_;
  bool fitted_ = false;
};

}  // namespace nowcast
