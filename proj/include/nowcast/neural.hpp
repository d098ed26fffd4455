#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nowcast/learner.hpp"
#include "nowcast/rng.hpp"

namespace nowcast {

struct TrainSchedule {
  int max_epochs = 200;
  int early_stop_patience = 30;
  double lr = 1e-3;
  int batch_size = 16;
  std::uint64_t seed = 42;

  void validate() const;
};

// Per-epoch hook: receives (epoch, validation MSE); returning false halts
// training (used by the pruner).
using EpochCallback = ProgressCallback;

struct TrainResult {
  int epochs_run = 0;
  int best_epoch = -1;  // epoch whose weights were restored (-1: none tracked)
  std::vector<double> val_history;
  bool halted_by_callback = false;
};

struct MlpConfig {
  int hidden_dim = 16;
  int num_hidden_layers = 1;
  double dropout_rate = 0.0;
};

// Feedforward ReLU regressor trained with Adam on the MSE loss. Dropout is
// active only during training; evaluation-mode forward passes are
// deterministic.
class MlpNet {
 public:
  MlpNet(int input_dim, const MlpConfig& config, std::uint64_t seed);

  double forward(const Eigen::VectorXd& x) const;  // evaluation mode
  Eigen::VectorXd input_gradient(const Eigen::VectorXd& x) const;

  TrainResult train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const TrainSchedule& schedule,
                    const Eigen::MatrixXd* X_val = nullptr,
                    const Eigen::VectorXd* y_val = nullptr,
                    const EpochCallback& callback = nullptr);

  // Full-batch MSE loss and its parameter gradient, evaluation mode.
  std::pair<double, Eigen::VectorXd> loss_and_gradient(const Eigen::MatrixXd& X,
                                                       const Eigen::VectorXd& y) const;

  const Eigen::VectorXd& parameters() const { return theta_; }
  void set_parameters(const Eigen::VectorXd& theta);

  int input_dim() const { return input_dim_; }

 private:
  struct ForwardCache;
  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  double run_forward(const Eigen::VectorXd& x, ForwardCache* cache, Rng* dropout_rng) const;
  void backward(const ForwardCache& cache, double upstream, Eigen::VectorXd& grad,
                Eigen::VectorXd* input_grad) const;

  int input_dim_;
  MlpConfig config_;
  std::vector<Eigen::Index> w_offsets_, b_offsets_;
  std::vector<int> widths_;  // input, hidden..., 1
  Eigen::VectorXd theta_;
};

struct GruConfig {
  int hidden_dim = 8;
  int num_layers = 1;
  double dropout_rate = 0.0;
  double l2_reg = 0.0;
  int seq_len = 4;  // trailing window of quarters per example
};

struct GruCellParams {
  Eigen::MatrixXd w_update, u_update;
  Eigen::VectorXd b_update;
  Eigen::MatrixXd w_reset, u_reset;
  Eigen::VectorXd b_reset;
  Eigen::MatrixXd w_cand, u_cand;
  Eigen::VectorXd b_cand;
};

// One GRU step: logistic update/reset gates, tanh candidate,
// h_t = (1 - z) * h_prev + z * cand.
Eigen::VectorXd gru_cell(const Eigen::VectorXd& h_prev, const Eigen::VectorXd& x_t,
                         const GruCellParams& params);

// Recurrent regressor over trailing windows; MSE + l2_reg * ||theta||^2
// minimized by Adam with backpropagation through time.
class GruNet {
 public:
  GruNet(int input_dim, const GruConfig& config, std::uint64_t seed);

  // window: seq_len x input_dim, oldest row first
  double forward(const Eigen::MatrixXd& window) const;
  Eigen::MatrixXd input_gradient(const Eigen::MatrixXd& window) const;

  // Rows of X are consecutive quarters; examples are trailing windows ending
  // at each row from seq_len-1 on.
  TrainResult train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const TrainSchedule& schedule,
                    const Eigen::MatrixXd* X_val = nullptr,
                    const Eigen::VectorXd* y_val = nullptr,
                    const EpochCallback& callback = nullptr);

  // Full-batch penalized loss and gradient over explicit windows.
  std::pair<double, Eigen::VectorXd> loss_and_gradient(
      const std::vector<Eigen::MatrixXd>& windows, const Eigen::VectorXd& y) const;

  const Eigen::VectorXd& parameters() const { return theta_; }
  void set_parameters(const Eigen::VectorXd& theta);
  const GruConfig& config() const { return config_; }

  double validation_mse(const Eigen::MatrixXd& X_val, const Eigen::VectorXd& y_val,
                        const Eigen::MatrixXd& X_context) const;

 private:
  struct LayerView {
    Eigen::Index wz, uz, bz, wr, ur, br, wh, uh, bh;  // offsets into theta_
    Eigen::Index in = 0, hidden = 0;
  };
  struct ForwardCache;

  double run_forward(const Eigen::MatrixXd& window, ForwardCache* cache,
                     Rng* dropout_rng) const;
  void backward(const ForwardCache& cache, double upstream, Eigen::VectorXd& grad,
                Eigen::MatrixXd* input_grad) const;

  int input_dim_;
  GruConfig config_;
  std::vector<LayerView> layers_;
  Eigen::Index head_w_ = 0, head_b_ = 0;
  Eigen::VectorXd theta_;
};

// Scalar function with an explicit gradient, the integration target for
// integrated gradients.
struct DifferentiableFn {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

// IG_j = (x_j - b_j) * (1/m) * sum_{s=1..m} dF(b + (s/m)(x-b))/dx_j
Eigen::VectorXd integrated_gradients(const DifferentiableFn& f, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& baseline, int steps);

// ---- Learner adapters ----

class MlpLearner final : public Learner {
 public:
  MlpLearner(FeatureInfo info, MlpConfig config, TrainSchedule schedule, int ig_steps = 50)
      : info_(std::move(info)), config_(config), schedule_(schedule), ig_steps_(ig_steps) {}

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) override;
  double predict(const Eigen::VectorXd& x) const override;
  std::map<std::string, double> importance() const override;  // IG vs zero baseline

  void set_validation(const Eigen::MatrixXd& X_val, const Eigen::VectorXd& y_val) override;
  void set_progress_callback(ProgressCallback cb) override { callback_ = std::move(cb); }
  void set_epoch_budget(int epochs) override {
    schedule_.max_epochs = epochs;
    schedule_.early_stop_patience = std::min(schedule_.early_stop_patience, epochs - 1);
  }
  int epochs_used() const override { return result_.epochs_run; }
  const TrainResult& train_result() const { return result_; }

 private:
  FeatureInfo info_;
  MlpConfig config_;
  TrainSchedule schedule_;
  int ig_steps_;
  std::optional<MlpNet> net_;
  std::optional<Eigen::MatrixXd> x_val_;
  std::optional<Eigen::VectorXd> y_val_;
  EpochCallback callback_;
  TrainResult result_;
  Eigen::MatrixXd eval_rows_;  // importance evaluation set: fit rows
};

class GruLearner final : public Learner {
 public:
  GruLearner(FeatureInfo info, GruConfig config, TrainSchedule schedule, int ig_steps = 50)
      : info_(std::move(info)), config_(config), schedule_(schedule), ig_steps_(ig_steps) {}

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) override;
  double predict(const Eigen::VectorXd& x) const override;  // repeats the row as a window
  bool wants_history() const override { return true; }
  double predict_with_history(const Eigen::MatrixXd& window) const override;
  std::map<std::string, double> importance() const override;

  void set_validation(const Eigen::MatrixXd& X_val, const Eigen::VectorXd& y_val) override;
  void set_progress_callback(ProgressCallback cb) override { callback_ = std::move(cb); }
  void set_epoch_budget(int epochs) override {
    schedule_.max_epochs = epochs;
    schedule_.early_stop_patience = std::min(schedule_.early_stop_patience, epochs - 1);
  }
  int epochs_used() const override { return result_.epochs_run; }
  const TrainResult& train_result() const { return result_; }
  int seq_len() const { return config_.seq_len; }

 private:
  FeatureInfo info_;
  GruConfig config_;
  TrainSchedule schedule_;
  int ig_steps_;
  std::optional<GruNet> net_;
  std::optional<Eigen::MatrixXd> x_val_;
  std::optional<Eigen::VectorXd> y_val_;
  EpochCallback callback_;
  TrainResult result_;
  Eigen::MatrixXd fit_x_;  // tail reused for default predict windows
};

}  // namespace nowcast
