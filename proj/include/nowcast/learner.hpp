#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace nowcast {

// (epoch, validation MSE) -> keep going? Used by iterative learners to report
// intermediate losses to the pruner.
using ProgressCallback = std::function<bool(int, double)>;

// Feature metadata shared with learners so importance vectors can be named
// and dummy columns excluded from rankings.
struct FeatureInfo {
  std::vector<std::string> names;
  std::vector<bool> is_dummy;  // seasonal or shock

  std::size_t count() const { return names.size(); }
};

// Uniform contract realized by every model family. Rows of X are quarters in
// time order; y is the target over the same rows. predict() is callable only
// after fit().
class Learner {
 public:
  virtual ~Learner() = default;

  virtual void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) = 0;
  virtual double predict(const Eigen::VectorXd& x) const = 0;

  // Named importance over non-dummy features; empty for models without one.
  virtual std::map<std::string, double> importance() const { return {}; }

  // Sequence models consume a trailing window of rows ending at the forecast
  // quarter instead of a single row.
  virtual bool wants_history() const { return false; }
  virtual double predict_with_history(const Eigen::MatrixXd& window) const {
    return predict(window.row(window.rows() - 1));
  }

  // Hooks for iterative learners; no-ops elsewhere.
  virtual void set_validation(const Eigen::MatrixXd&, const Eigen::VectorXd&) {}
  virtual void set_progress_callback(ProgressCallback) {}
  virtual void set_epoch_budget(int) {}
  virtual int epochs_used() const { return 0; }
};

}  // namespace nowcast
