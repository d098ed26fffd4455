#include "nowcast/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "nowcast/errors.hpp"
#include "nowcast/math_util.hpp"

namespace nowcast {

namespace {

// Streaming sum of |y - median| under ascending insertions: two heaps with
// running sums on each side of the median.
class AbsDevAccumulator {
 public:
  void insert(double v) {
    if (low_.empty() || v <= low_.top()) {
      low_.push(v);
      low_sum_ += v;
    } else {
      high_.push(v);
      high_sum_ += v;
    }
    if (low_.size() > high_.size() + 1) {
      const double t = low_.top();
      low_.pop();
      low_sum_ -= t;
      high_.push(t);
      high_sum_ += t;
    } else if (high_.size() > low_.size()) {
      const double t = high_.top();
      high_.pop();
      high_sum_ -= t;
      low_.push(t);
      low_sum_ += t;
    }
  }

  // sum of absolute deviations from the median of everything inserted
  double abs_dev_sum() const {
    if (low_.empty()) return 0.0;
    const double med = median();
    const double nl = static_cast<double>(low_.size());
    const double nh = static_cast<double>(high_.size());
    return (med * nl - low_sum_) + (high_sum_ - med * nh);
  }

  double median() const {
    if (low_.size() == high_.size()) return 0.5 * (low_.top() + high_.top());
    return low_.top();
  }

 private:
  std::priority_queue<double> low_;  // max-heap
  std::priority_queue<double, std::vector<double>, std::greater<double>> high_;  // min-heap
  double low_sum_ = 0.0;
  double high_sum_ = 0.0;
};

struct BestSplit {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // impurity decrease or gain
};

}  // namespace

double node_impurity(std::span<const double> y, SplitCriterion criterion) {
  if (y.empty()) throw ShapeError("impurity of an empty node");
  if (criterion == SplitCriterion::kSquaredError) return stats::variance(y);
  std::vector<double> copy(y.begin(), y.end());
  const double med = stats::median(copy);
  double s = 0.0;
  for (double v : y) s += std::fabs(v - med);
  return s / static_cast<double>(y.size());
}

double impurity_decrease(std::span<const double> parent, std::span<const double> left,
                         std::span<const double> right, SplitCriterion criterion) {
  if (left.empty() || right.empty()) throw ShapeError("split produced an empty child");
  if (left.size() + right.size() != parent.size())
    throw ShapeError("children do not partition the parent");
  const double n = static_cast<double>(parent.size());
  const double nl = static_cast<double>(left.size());
  const double nr = static_cast<double>(right.size());
  return node_impurity(parent, criterion) -
         (nl / n * node_impurity(left, criterion) + nr / n * node_impurity(right, criterion));
}

void RegressionTree::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const std::vector<int>& rows, const TreeConfig& config, Rng* rng) {
  nodes_.clear();
  std::vector<int> work = rows;
  grow(X, y, work, 0, config, rng);
}

int RegressionTree::grow(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         std::vector<int>& rows, int depth, const TreeConfig& config, Rng* rng) {
  const int node_id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();

  std::vector<double> node_y;
  node_y.reserve(rows.size());
  for (int r : rows) node_y.push_back(y(r));
  const double node_mean =
      std::accumulate(node_y.begin(), node_y.end(), 0.0) / static_cast<double>(node_y.size());
  nodes_[node_id].value = node_mean;

  const auto n = static_cast<int>(rows.size());
  if (depth >= config.max_depth || n < config.min_samples_split ||
      n < 2 * config.min_samples_leaf)
    return node_id;
  const double parent_impurity = node_impurity(node_y, config.criterion);
  if (parent_impurity <= 0.0) return node_id;

  const auto p = static_cast<int>(X.cols());
  std::vector<int> features(static_cast<std::size_t>(p));
  std::iota(features.begin(), features.end(), 0);
  int n_consider = p;
  if (config.m_try > 0 && config.m_try < p && rng) {
    // partial Fisher-Yates; the chosen prefix is then sorted for the
    // deterministic lowest-feature-index tie-break
    for (int i = 0; i < config.m_try; ++i) {
      const auto j = static_cast<int>(rng->uniform_int(i, p - 1));
      std::swap(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(j)]);
    }
    n_consider = config.m_try;
    std::sort(features.begin(), features.begin() + n_consider);
  }

  BestSplit best;
  std::vector<std::pair<double, double>> order(static_cast<std::size_t>(n));  // (x, y)
  std::vector<double> left_imp(static_cast<std::size_t>(n)), right_imp(static_cast<std::size_t>(n));

  for (int fi = 0; fi < n_consider; ++fi) {
    const int f = features[static_cast<std::size_t>(fi)];
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = {X(rows[static_cast<std::size_t>(i)], f), y(rows[static_cast<std::size_t>(i)])};
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    if (order.front().first == order.back().first) continue;

    // left_imp[i]: impurity of the first i+1 sorted rows; right_imp[i]: of the rest
    if (config.criterion == SplitCriterion::kSquaredError) {
      double s = 0.0, s2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double v = order[static_cast<std::size_t>(i)].second;
        s += v;
        s2 += v * v;
        const double m = static_cast<double>(i + 1);
        left_imp[static_cast<std::size_t>(i)] = std::max(0.0, s2 / m - (s / m) * (s / m));
      }
      s = 0.0;
      s2 = 0.0;
      for (int i = n - 1; i >= 0; --i) {
        const double v = order[static_cast<std::size_t>(i)].second;
        s += v;
        s2 += v * v;
        const double m = static_cast<double>(n - i);
        right_imp[static_cast<std::size_t>(i)] = std::max(0.0, s2 / m - (s / m) * (s / m));
      }
    } else {
      AbsDevAccumulator fwd;
      for (int i = 0; i < n; ++i) {
        fwd.insert(order[static_cast<std::size_t>(i)].second);
        left_imp[static_cast<std::size_t>(i)] = fwd.abs_dev_sum() / static_cast<double>(i + 1);
      }
      AbsDevAccumulator bwd;
      for (int i = n - 1; i >= 0; --i) {
        bwd.insert(order[static_cast<std::size_t>(i)].second);
        right_imp[static_cast<std::size_t>(i)] = bwd.abs_dev_sum() / static_cast<double>(n - i);
      }
    }

    for (int i = config.min_samples_leaf - 1; i < n - config.min_samples_leaf; ++i) {
      const double lo = order[static_cast<std::size_t>(i)].first;
      const double hi = order[static_cast<std::size_t>(i) + 1].first;
      if (lo == hi) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = static_cast<double>(n - i - 1);
      const double decrease =
          parent_impurity - (nl / n * left_imp[static_cast<std::size_t>(i)] +
                             nr / n * right_imp[static_cast<std::size_t>(i) + 1]);
      if (decrease > best.score || !best.found) {
        if (decrease <= 0.0) continue;
        best.found = true;
        best.score = decrease;
        best.feature = f;
        best.threshold = 0.5 * (lo + hi);
      }
    }
  }

  if (!best.found) return node_id;

  std::vector<int> left_rows, right_rows;
  for (int r : rows) {
    if (X(r, best.feature) < best.threshold)
      left_rows.push_back(r);
    else
      right_rows.push_back(r);
  }

  nodes_[node_id].feature = best.feature;
  nodes_[node_id].threshold = best.threshold;
  nodes_[node_id].split_score = best.score;
  const int left_id = grow(X, y, left_rows, depth + 1, config, rng);
  nodes_[node_id].left = left_id;
  const int right_id = grow(X, y, right_rows, depth + 1, config, rng);
  nodes_[node_id].right = right_id;
  return node_id;
}

double RegressionTree::predict(const Eigen::VectorXd& x) const {
  if (nodes_.empty()) throw NumericError("predict on an unfitted tree");
  int id = 0;
  while (nodes_[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    id = x(node.feature) < node.threshold ? node.left : node.right;
  }
  return nodes_[static_cast<std::size_t>(id)].value;
}

Eigen::VectorXd RegressionTree::split_score_totals(int n_features) const {
  Eigen::VectorXd totals = Eigen::VectorXd::Zero(n_features);
  for (const auto& node : nodes_)
    if (node.feature >= 0) totals(node.feature) += node.split_score;
  return totals;
}

double ForestFit::predict(const Eigen::VectorXd& x) const {
  if (trees.empty()) throw NumericError("predict on an unfitted forest");
  double s = 0.0;
  for (const auto& tree : trees) s += tree.predict(x);
  return s / static_cast<double>(trees.size());
}

Eigen::VectorXd ForestFit::mdi() const {
  Eigen::VectorXd totals = Eigen::VectorXd::Zero(n_features);
  for (const auto& tree : trees) totals += tree.split_score_totals(n_features);
  return totals / static_cast<double>(trees.size());
}

ForestFit rf_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestConfig& config) {
  if (config.n_estimators < 1) throw ConfigError("forest needs at least one tree");
  if (X.rows() != y.size()) throw ShapeError("X rows and y length differ");
  const auto n = static_cast<int>(X.rows());

  ForestFit fit;
  fit.n_features = static_cast<int>(X.cols());
  fit.trees.resize(static_cast<std::size_t>(config.n_estimators));
  for (int b = 0; b < config.n_estimators; ++b) {
    Rng rng = Rng::stream(config.seed, {0x8f, static_cast<std::uint64_t>(b)});
    std::vector<int> rows(static_cast<std::size_t>(n));
    if (config.bootstrap) {
      for (auto& r : rows) r = static_cast<int>(rng.uniform_int(0, n - 1));
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    fit.trees[static_cast<std::size_t>(b)].fit(X, y, rows, config.tree, &rng);
  }
  return fit;
}

double xgb_split_gain(double g_sum_left, double h_sum_left, double g_sum_right,
                      double h_sum_right, double lambda_l2, double gamma_split) {
  if (h_sum_left < 0.0 || h_sum_right < 0.0) throw NumericError("negative hessian sums");
  const auto score = [lambda_l2](double g, double h) { return -(g * g) / (h + lambda_l2); };
  const double parent = score(g_sum_left + g_sum_right, h_sum_left + h_sum_right);
  return parent - score(g_sum_left, h_sum_left) - score(g_sum_right, h_sum_right) - gamma_split;
}

namespace {

// Gradient tree for boosting; leaves carry w = -sum(g)/(sum(h)+lambda).
class GradientTreeBuilder {
 public:
  GradientTreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& g,
                      const Eigen::VectorXd& h, const BoostConfig& config,
                      std::vector<int> features)
      : x_(X), g_(g), h_(h), config_(config), features_(std::move(features)) {}

  std::vector<TreeNode> build(std::vector<int> rows) {
    nodes_.clear();
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<int> rows, int depth) {
    const int node_id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    double g_sum = 0.0, h_sum = 0.0;
    for (int r : rows) {
      g_sum += g_(r);
      h_sum += h_(r);
    }
    nodes_[static_cast<std::size_t>(node_id)].value = -g_sum / (h_sum + config_.lambda_l2);
    if (depth >= config_.max_depth || rows.size() < 2) return node_id;

    BestSplit best;
    const auto n = static_cast<int>(rows.size());
    std::vector<std::pair<double, int>> order(static_cast<std::size_t>(n));
    for (int f : features_) {
      for (int i = 0; i < n; ++i)
        order[static_cast<std::size_t>(i)] = {x_(rows[static_cast<std::size_t>(i)], f), rows[static_cast<std::size_t>(i)]};
      std::stable_sort(order.begin(), order.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      if (order.front().first == order.back().first) continue;

      double gl = 0.0, hl = 0.0;
      for (int i = 0; i < n - 1; ++i) {
        gl += g_(order[static_cast<std::size_t>(i)].second);
        hl += h_(order[static_cast<std::size_t>(i)].second);
        const double lo = order[static_cast<std::size_t>(i)].first;
        const double hi = order[static_cast<std::size_t>(i) + 1].first;
        if (lo == hi) continue;
        const double gr = g_sum - gl, hr = h_sum - hl;
        if (hl < config_.min_child_weight || hr < config_.min_child_weight) continue;
        const double gain = xgb_split_gain(gl, hl, gr, hr, config_.lambda_l2, config_.gamma_split);
        if (gain > best.score || (!best.found && gain > 0.0)) {
          if (gain <= 0.0) continue;
          best.found = true;
          best.score = gain;
          best.feature = f;
          best.threshold = 0.5 * (lo + hi);
        }
      }
    }
    if (!best.found) return node_id;

    std::vector<int> left_rows, right_rows;
    for (int r : rows) {
      if (x_(r, best.feature) < best.threshold)
        left_rows.push_back(r);
      else
        right_rows.push_back(r);
    }
    nodes_[static_cast<std::size_t>(node_id)].feature = best.feature;
    nodes_[static_cast<std::size_t>(node_id)].threshold = best.threshold;
    nodes_[static_cast<std::size_t>(node_id)].split_score = best.score;
    const int left_id = grow(std::move(left_rows), depth + 1);
    nodes_[static_cast<std::size_t>(node_id)].left = left_id;
    const int right_id = grow(std::move(right_rows), depth + 1);
    nodes_[static_cast<std::size_t>(node_id)].right = right_id;
    return node_id;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& g_;
  const Eigen::VectorXd& h_;
  const BoostConfig& config_;
  std::vector<int> features_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

double BoostFit::predict(const Eigen::VectorXd& x) const {
  double out = base_score;
  for (const auto& tree : trees) out += learning_rate * tree.predict(x);
  return out;
}

Eigen::VectorXd BoostFit::gain_importance() const {
  Eigen::VectorXd totals = Eigen::VectorXd::Zero(n_features);
  for (const auto& tree : trees) totals += tree.split_score_totals(n_features);
  return trees.empty() ? totals : Eigen::VectorXd(totals / static_cast<double>(trees.size()));
}

BoostFit xgb_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const BoostConfig& config) {
  if (config.n_rounds < 1) throw ConfigError("boosting needs at least one round");
  if (config.subsample <= 0.0 || config.subsample > 1.0 || config.colsample <= 0.0 ||
      config.colsample > 1.0)
    throw ConfigError("subsample fractions must be in (0,1]");
  if (X.rows() != y.size()) throw ShapeError("X rows and y length differ");

  const auto n = static_cast<int>(X.rows());
  const auto p = static_cast<int>(X.cols());
  BoostFit fit;
  fit.base_score = y.mean();
  fit.learning_rate = config.learning_rate;
  fit.n_features = p;

  Eigen::VectorXd yhat = Eigen::VectorXd::Constant(n, fit.base_score);
  Rng rng = Rng::stream(config.seed, {0xb0});

  std::vector<int> all_rows(static_cast<std::size_t>(n));
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::vector<int> all_features(static_cast<std::size_t>(p));
  std::iota(all_features.begin(), all_features.end(), 0);

  for (int m = 0; m < config.n_rounds; ++m) {
    const Eigen::VectorXd g = yhat - y;  // squared-error gradients, h = 1
    const Eigen::VectorXd h = Eigen::VectorXd::Ones(n);

    std::vector<int> rows = all_rows;
    if (config.subsample < 1.0) {
      const int keep = std::max(1, static_cast<int>(std::floor(config.subsample * n)));
      for (int i = 0; i < keep; ++i) {
        const auto j = static_cast<int>(rng.uniform_int(i, n - 1));
        std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
      }
      rows.resize(static_cast<std::size_t>(keep));
      std::sort(rows.begin(), rows.end());
    }
    std::vector<int> features = all_features;
    if (config.colsample < 1.0) {
      const int keep = std::max(1, static_cast<int>(std::floor(config.colsample * p)));
      for (int i = 0; i < keep; ++i) {
        const auto j = static_cast<int>(rng.uniform_int(i, p - 1));
        std::swap(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(j)]);
      }
      features.resize(static_cast<std::size_t>(keep));
      std::sort(features.begin(), features.end());
    }

    GradientTreeBuilder builder(X, g, h, config, features);
    RegressionTree tree = RegressionTree::from_nodes(builder.build(rows));
    for (int i = 0; i < n; ++i) yhat(i) += config.learning_rate * tree.predict(X.row(i));
    fit.trees.push_back(std::move(tree));
  }
  return fit;
}

void RfLearner::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  fit_ = rf_fit(X, y, config_);
  fitted_ = true;
}

double RfLearner::predict(const Eigen::VectorXd& x) const {
  if (!fitted_) throw NumericError("predict before fit");
  return fit_.predict(x);
}

std::map<std::string, double> RfLearner::importance() const {
  if (!fitted_) throw NumericError("importance before fit");
  const auto mdi = fit_.mdi();
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < info_.count(); ++j) {
    if (info_.is_dummy[j]) continue;
    out[info_.names[j]] = mdi(static_cast<Eigen::Index>(j));
  }
  return out;
}

void XgbLearner::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  fit_ = xgb_fit(X, y, config_);
  fitted_ = true;
}

double XgbLearner::predict(const Eigen::VectorXd& x) const {
  if (!fitted_) throw NumericError("predict before fit");
  return fit_.predict(x);
}

std::map<std::string, double> XgbLearner::importance() const {
  if (!fitted_) throw NumericError("importance before fit");
  const auto gain = fit_.gain_importance();
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < info_.count(); ++j) {
    if (info_.is_dummy[j]) continue;
    out[info_.names[j]] = gain(static_cast<Eigen::Index>(j));
  }
  return out;
}

}  // namespace nowcast
