#include "nowcast/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nowcast/errors.hpp"

namespace nowcast {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Adam over a flat parameter vector; defaults beta1=0.9, beta2=0.999, eps=1e-8.
class Adam {
 public:
  explicit Adam(Eigen::Index n)
      : m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr) {
    ++t_;
    m_ = 0.9 * m_ + 0.1 * grad;
    v_ = 0.999 * v_ + 0.001 * grad.cwiseProduct(grad);
    const double mc = 1.0 - std::pow(0.9, t_);
    const double vc = 1.0 - std::pow(0.999, t_);
    for (Eigen::Index i = 0; i < theta.size(); ++i)
      theta(i) -= lr * (m_(i) / mc) / (std::sqrt(v_(i) / vc) + 1e-8);
  }

 private:
  Eigen::VectorXd m_, v_;
  int t_ = 0;
};

Eigen::VectorXd dropout_mask(Eigen::Index n, double rate, Rng& rng) {
  Eigen::VectorXd mask(n);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < n; ++i) mask(i) = rng.uniform() < rate ? 0.0 : scale;
  return mask;
}

std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

}  // namespace

void TrainSchedule::validate() const {
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (early_stop_patience >= max_epochs)
    throw ConfigError("early_stop_patience must be < max_epochs");
  if (lr <= 0.0) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

// ---------------------------------------------------------------------------
// MLP

struct MlpNet::ForwardCache {
  Eigen::VectorXd input;
  std::vector<Eigen::VectorXd> pre;    // pre-activation per layer
  std::vector<Eigen::VectorXd> post;   // activation after relu (+ dropout)
  std::vector<Eigen::VectorXd> masks;  // empty in evaluation mode
};

MlpNet::MlpNet(int input_dim, const MlpConfig& config, std::uint64_t seed)
    : input_dim_(input_dim), config_(config) {
  if (input_dim < 1) throw ConfigError("MLP input dimension must be >= 1");
  if (config.hidden_dim < 1 || config.num_hidden_layers < 1)
    throw ConfigError("MLP needs at least one hidden unit and layer");
  if (config.dropout_rate < 0.0 || config.dropout_rate >= 1.0)
    throw ConfigError("dropout_rate must be in [0,1)");

  widths_.push_back(input_dim);
  for (int l = 0; l < config.num_hidden_layers; ++l) widths_.push_back(config.hidden_dim);
  widths_.push_back(1);

  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    w_offsets_.push_back(total);
    total += static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l];
    b_offsets_.push_back(total);
    total += widths_[l + 1];
  }
  theta_.resize(total);

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    const Eigen::Index wn = static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l];
    for (Eigen::Index i = 0; i < wn; ++i)
      theta_(w_offsets_[l] + i) = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < widths_[l + 1]; ++i)
      theta_(b_offsets_[l] + i) = rng.uniform(-bound, bound);
  }
}

Eigen::Map<const Eigen::MatrixXd> MlpNet::weight(int layer) const {
  return {theta_.data() + w_offsets_[static_cast<std::size_t>(layer)],
          widths_[static_cast<std::size_t>(layer) + 1], widths_[static_cast<std::size_t>(layer)]};
}

Eigen::Map<const Eigen::VectorXd> MlpNet::bias(int layer) const {
  return {theta_.data() + b_offsets_[static_cast<std::size_t>(layer)],
          widths_[static_cast<std::size_t>(layer) + 1]};
}

double MlpNet::run_forward(const Eigen::VectorXd& x, ForwardCache* cache,
                           Rng* dropout_rng) const {
  if (x.size() != input_dim_) throw ShapeError("MLP input dimension mismatch");
  const int n_layers = static_cast<int>(widths_.size()) - 1;
  Eigen::VectorXd a = x;
  if (cache) {
    cache->input = x;
    cache->pre.clear();
    cache->post.clear();
    cache->masks.clear();
  }
  for (int l = 0; l < n_layers; ++l) {
    Eigen::VectorXd z = weight(l) * a + bias(l);
    if (cache) cache->pre.push_back(z);
    if (l < n_layers - 1) {
      a = z.cwiseMax(0.0);
      if (dropout_rng && config_.dropout_rate > 0.0) {
        const Eigen::VectorXd mask = dropout_mask(a.size(), config_.dropout_rate, *dropout_rng);
        a = a.cwiseProduct(mask);
        if (cache) cache->masks.push_back(mask);
      }
      if (cache) cache->post.push_back(a);
    } else {
      a = z;
      if (cache) cache->post.push_back(a);
    }
  }
  return a(0);
}

double MlpNet::forward(const Eigen::VectorXd& x) const { return run_forward(x, nullptr, nullptr); }

void MlpNet::backward(const ForwardCache& cache, double upstream, Eigen::VectorXd& grad,
                      Eigen::VectorXd* input_grad) const {
  const int n_layers = static_cast<int>(widths_.size()) - 1;
  Eigen::VectorXd delta(1);
  delta(0) = upstream;

  for (int l = n_layers - 1; l >= 0; --l) {
    const Eigen::VectorXd& below =
        l == 0 ? cache.input : cache.post[static_cast<std::size_t>(l) - 1];
    Eigen::Map<Eigen::MatrixXd> dW(grad.data() + w_offsets_[static_cast<std::size_t>(l)],
                                   widths_[static_cast<std::size_t>(l) + 1],
                                   widths_[static_cast<std::size_t>(l)]);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + b_offsets_[static_cast<std::size_t>(l)],
                                   widths_[static_cast<std::size_t>(l) + 1]);
    dW += delta * below.transpose();
    db += delta;

    if (l == 0) {
      if (input_grad) *input_grad += weight(0).transpose() * delta;
      break;
    }
    Eigen::VectorXd din = weight(l).transpose() * delta;
    if (!cache.masks.empty())
      din = din.cwiseProduct(cache.masks[static_cast<std::size_t>(l) - 1]);
    const Eigen::VectorXd& pre = cache.pre[static_cast<std::size_t>(l) - 1];
    for (Eigen::Index i = 0; i < din.size(); ++i)
      if (pre(i) <= 0.0) din(i) = 0.0;
    delta = din;
  }
}

Eigen::VectorXd MlpNet::input_gradient(const Eigen::VectorXd& x) const {
  ForwardCache cache;
  run_forward(x, &cache, nullptr);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
  Eigen::VectorXd input_grad = Eigen::VectorXd::Zero(input_dim_);
  backward(cache, 1.0, grad, &input_grad);
  return input_grad;
}

std::pair<double, Eigen::VectorXd> MlpNet::loss_and_gradient(const Eigen::MatrixXd& X,
                                                             const Eigen::VectorXd& y) const {
  if (X.rows() != y.size()) throw ShapeError("X rows and y length differ");
  const auto n = static_cast<int>(X.rows());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
  double loss = 0.0;
  ForwardCache cache;
  for (int i = 0; i < n; ++i) {
    const double pred = run_forward(X.row(i), &cache, nullptr);
    const double err = pred - y(i);
    loss += err * err / n;
    backward(cache, 2.0 * err / n, grad, nullptr);
  }
  return {loss, grad};
}

void MlpNet::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != theta_.size()) throw ShapeError("parameter size mismatch");
  theta_ = theta;
}

TrainResult MlpNet::train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const TrainSchedule& schedule, const Eigen::MatrixXd* X_val,
                          const Eigen::VectorXd* y_val, const EpochCallback& callback) {
  schedule.validate();
  if (X.rows() != y.size()) throw ShapeError("X rows and y length differ");
  const auto n = static_cast<int>(X.rows());
  if (n == 0) throw ShapeError("empty training set");

  Rng rng = Rng::stream(schedule.seed, {0x31});
  Adam adam(theta_.size());
  TrainResult result;

  const bool track_val = X_val != nullptr && y_val != nullptr && X_val->rows() > 0;
  double best_val = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta = theta_;
  int stale = 0;

  ForwardCache cache;
  for (int epoch = 0; epoch < schedule.max_epochs; ++epoch) {
    const auto order = shuffled_indices(n, rng);
    double train_loss = 0.0;
    for (int start = 0; start < n; start += schedule.batch_size) {
      const int stop = std::min(n, start + schedule.batch_size);
      const double bsz = stop - start;
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
      for (int k = start; k < stop; ++k) {
        const int i = order[static_cast<std::size_t>(k)];
        const double pred = run_forward(X.row(i), &cache, &rng);
        const double err = pred - y(i);
        train_loss += err * err;
        backward(cache, 2.0 * err / bsz, grad, nullptr);
      }
      adam.step(theta_, grad, schedule.lr);
    }
    if (!std::isfinite(train_loss))
      throw NumericError("MLP training diverged (non-finite loss at epoch " +
                         std::to_string(epoch) + ")");
    result.epochs_run = epoch + 1;

    if (!track_val) {
      if (callback && !callback(epoch, train_loss / n)) {
        result.halted_by_callback = true;
        break;
      }
      continue;
    }

    double val_mse = 0.0;
    for (int i = 0; i < X_val->rows(); ++i) {
      const double err = forward(X_val->row(i)) - (*y_val)(i);
      val_mse += err * err;
    }
    val_mse /= static_cast<double>(X_val->rows());
    result.val_history.push_back(val_mse);

    if (val_mse < best_val) {
      best_val = val_mse;
      best_theta = theta_;
      result.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    if (callback && !callback(epoch, val_mse)) {
      result.halted_by_callback = true;
      break;
    }
    if (stale >= schedule.early_stop_patience) break;
  }
  if (track_val && result.best_epoch >= 0) theta_ = best_theta;
  return result;
}

// ---------------------------------------------------------------------------
// GRU

Eigen::VectorXd gru_cell(const Eigen::VectorXd& h_prev, const Eigen::VectorXd& x_t,
                         const GruCellParams& p) {
  if (p.w_update.rows() != h_prev.size() || p.w_update.cols() != x_t.size())
    throw ShapeError("gru_cell dimension mismatch");
  const Eigen::VectorXd z =
      (p.w_update * x_t + p.u_update * h_prev + p.b_update).unaryExpr(&sigmoid);
  const Eigen::VectorXd r =
      (p.w_reset * x_t + p.u_reset * h_prev + p.b_reset).unaryExpr(&sigmoid);
  const Eigen::VectorXd cand =
      (p.w_cand * x_t + p.u_cand * r.cwiseProduct(h_prev) + p.b_cand)
          .unaryExpr([](double v) { return std::tanh(v); });
  return (Eigen::VectorXd::Ones(h_prev.size()) - z).cwiseProduct(h_prev) +
         z.cwiseProduct(cand);
}

struct GruNet::ForwardCache {
  struct Step {
    Eigen::VectorXd x, h_prev, z, r, cand, h;
  };
  std::vector<std::vector<Step>> layers;       // [layer][time]
  std::vector<Eigen::MatrixXd> between_masks;  // dropout between layers, [layer](time x hidden)
  Eigen::VectorXd head_mask;                   // dropout before the output head
  Eigen::VectorXd final_h;                     // after head dropout
};

GruNet::GruNet(int input_dim, const GruConfig& config, std::uint64_t seed)
    : input_dim_(input_dim), config_(config) {
  if (input_dim < 1) throw ConfigError("GRU input dimension must be >= 1");
  if (config.hidden_dim < 1 || config.num_layers < 1)
    throw ConfigError("GRU needs at least one hidden unit and layer");
  if (config.dropout_rate < 0.0 || config.dropout_rate >= 1.0)
    throw ConfigError("dropout_rate must be in [0,1)");
  if (config.l2_reg < 0.0) throw ConfigError("l2_reg must be >= 0");
  if (config.seq_len < 1) throw ConfigError("seq_len must be >= 1");

  const Eigen::Index H = config.hidden_dim;
  Eigen::Index total = 0;
  for (int l = 0; l < config.num_layers; ++l) {
    const Eigen::Index in = l == 0 ? input_dim : H;
    LayerView v;
    v.in = in;
    v.hidden = H;
    v.wz = total; total += H * in;
    v.uz = total; total += H * H;
    v.bz = total; total += H;
    v.wr = total; total += H * in;
    v.ur = total; total += H * H;
    v.br = total; total += H;
    v.wh = total; total += H * in;
    v.uh = total; total += H * H;
    v.bh = total; total += H;
    layers_.push_back(v);
  }
  head_w_ = total;
  total += H;
  head_b_ = total;
  total += 1;
  theta_.resize(total);

  Rng rng(seed);
  for (const auto& v : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(v.in));
    const double hbound = 1.0 / std::sqrt(static_cast<double>(v.hidden));
    const auto fill = [&](Eigen::Index off, Eigen::Index count, double b) {
      for (Eigen::Index i = 0; i < count; ++i) theta_(off + i) = rng.uniform(-b, b);
    };
    fill(v.wz, v.hidden * v.in, bound);
    fill(v.uz, v.hidden * v.hidden, hbound);
    fill(v.bz, v.hidden, hbound);
    fill(v.wr, v.hidden * v.in, bound);
    fill(v.ur, v.hidden * v.hidden, hbound);
    fill(v.br, v.hidden, hbound);
    fill(v.wh, v.hidden * v.in, bound);
    fill(v.uh, v.hidden * v.hidden, hbound);
    fill(v.bh, v.hidden, hbound);
  }
  const double hbound = 1.0 / std::sqrt(static_cast<double>(H));
  for (Eigen::Index i = 0; i < H; ++i) theta_(head_w_ + i) = rng.uniform(-hbound, hbound);
  theta_(head_b_) = 0.0;
}

double GruNet::run_forward(const Eigen::MatrixXd& window, ForwardCache* cache,
                           Rng* dropout_rng) const {
  if (window.cols() != input_dim_) throw ShapeError("GRU window feature mismatch");
  const auto S = static_cast<int>(window.rows());
  const Eigen::Index H = config_.hidden_dim;
  const bool training = dropout_rng != nullptr && config_.dropout_rate > 0.0;

  if (cache) {
    cache->layers.assign(static_cast<std::size_t>(config_.num_layers), {});
    cache->between_masks.clear();
  }

  Eigen::MatrixXd inputs = window;  // sequence feeding the current layer
  for (int l = 0; l < config_.num_layers; ++l) {
    const auto& v = layers_[static_cast<std::size_t>(l)];
    const Eigen::Map<const Eigen::MatrixXd> Wz(theta_.data() + v.wz, H, v.in),
        Uz(theta_.data() + v.uz, H, H), Wr(theta_.data() + v.wr, H, v.in),
        Ur(theta_.data() + v.ur, H, H), Wh(theta_.data() + v.wh, H, v.in),
        Uh(theta_.data() + v.uh, H, H);
    const Eigen::Map<const Eigen::VectorXd> bz(theta_.data() + v.bz, H),
        br(theta_.data() + v.br, H), bh(theta_.data() + v.bh, H);

    Eigen::MatrixXd outputs(S, H);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
    for (int t = 0; t < S; ++t) {
      const Eigen::VectorXd x = inputs.row(t);
      const Eigen::VectorXd z = (Wz * x + Uz * h + bz).unaryExpr(&sigmoid);
      const Eigen::VectorXd r = (Wr * x + Ur * h + br).unaryExpr(&sigmoid);
      const Eigen::VectorXd cand = (Wh * x + Uh * r.cwiseProduct(h) + bh)
                                       .unaryExpr([](double u) { return std::tanh(u); });
      const Eigen::VectorXd h_new =
          (Eigen::VectorXd::Ones(H) - z).cwiseProduct(h) + z.cwiseProduct(cand);
      if (cache)
        cache->layers[static_cast<std::size_t>(l)].push_back({x, h, z, r, cand, h_new});
      h = h_new;
      outputs.row(t) = h.transpose();
    }

    if (l + 1 < config_.num_layers) {
      if (training) {
        Eigen::MatrixXd mask(S, H);
        for (int t = 0; t < S; ++t)
          mask.row(t) = dropout_mask(H, config_.dropout_rate, *dropout_rng).transpose();
        outputs = outputs.cwiseProduct(mask);
        if (cache) cache->between_masks.push_back(mask);
      } else if (cache) {
        cache->between_masks.emplace_back();
      }
    }
    inputs = outputs;
  }

  Eigen::VectorXd final_h = inputs.row(S - 1);
  if (training) {
    const Eigen::VectorXd mask = dropout_mask(H, config_.dropout_rate, *dropout_rng);
    final_h = final_h.cwiseProduct(mask);
    if (cache) cache->head_mask = mask;
  } else if (cache) {
    cache->head_mask = Eigen::VectorXd();
  }
  if (cache) cache->final_h = final_h;

  const Eigen::Map<const Eigen::VectorXd> head(theta_.data() + head_w_, H);
  return head.dot(final_h) + theta_(head_b_);
}

double GruNet::forward(const Eigen::MatrixXd& window) const {
  return run_forward(window, nullptr, nullptr);
}

void GruNet::backward(const ForwardCache& cache, double upstream, Eigen::VectorXd& grad,
                      Eigen::MatrixXd* input_grad) const {
  const Eigen::Index H = config_.hidden_dim;
  const auto S = static_cast<int>(cache.layers[0].size());
  const Eigen::Map<const Eigen::VectorXd> head(theta_.data() + head_w_, H);

  // output head
  Eigen::Map<Eigen::VectorXd>(grad.data() + head_w_, H) += upstream * cache.final_h;
  grad(head_b_) += upstream;

  // gradient flowing into each layer's output sequence
  Eigen::MatrixXd dout = Eigen::MatrixXd::Zero(S, H);
  Eigen::VectorXd dlast = upstream * head;
  if (cache.head_mask.size() > 0) dlast = dlast.cwiseProduct(cache.head_mask);
  dout.row(S - 1) = dlast.transpose();

  for (int l = config_.num_layers - 1; l >= 0; --l) {
    const auto& v = layers_[static_cast<std::size_t>(l)];
    const Eigen::Map<const Eigen::MatrixXd> Wz(theta_.data() + v.wz, H, v.in),
        Uz(theta_.data() + v.uz, H, H), Wr(theta_.data() + v.wr, H, v.in),
        Ur(theta_.data() + v.ur, H, H), Wh(theta_.data() + v.wh, H, v.in),
        Uh(theta_.data() + v.uh, H, H);
    Eigen::Map<Eigen::MatrixXd> dWz(grad.data() + v.wz, H, v.in), dUz(grad.data() + v.uz, H, H),
        dWr(grad.data() + v.wr, H, v.in), dUr(grad.data() + v.ur, H, H),
        dWh(grad.data() + v.wh, H, v.in), dUh(grad.data() + v.uh, H, H);
    Eigen::Map<Eigen::VectorXd> dbz(grad.data() + v.bz, H), dbr(grad.data() + v.br, H),
        dbh(grad.data() + v.bh, H);

    Eigen::MatrixXd dinputs = Eigen::MatrixXd::Zero(S, v.in);
    Eigen::VectorXd dh = Eigen::VectorXd::Zero(H);
    for (int t = S - 1; t >= 0; --t) {
      const auto& step = cache.layers[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)];
      dh += dout.row(t).transpose();

      const Eigen::VectorXd dz = dh.cwiseProduct(step.cand - step.h_prev);
      const Eigen::VectorXd da_z =
          dz.cwiseProduct(step.z.cwiseProduct(Eigen::VectorXd::Ones(H) - step.z));
      const Eigen::VectorXd dcand = dh.cwiseProduct(step.z);
      const Eigen::VectorXd da_h = dcand.cwiseProduct(
          (Eigen::VectorXd::Ones(H) - step.cand.cwiseProduct(step.cand)));
      const Eigen::VectorXd drh = Uh.transpose() * da_h;
      const Eigen::VectorXd dr = drh.cwiseProduct(step.h_prev);
      const Eigen::VectorXd da_r =
          dr.cwiseProduct(step.r.cwiseProduct(Eigen::VectorXd::Ones(H) - step.r));

      dWz += da_z * step.x.transpose();
      dUz += da_z * step.h_prev.transpose();
      dbz += da_z;
      dWr += da_r * step.x.transpose();
      dUr += da_r * step.h_prev.transpose();
      dbr += da_r;
      dWh += da_h * step.x.transpose();
      dUh += da_h * step.r.cwiseProduct(step.h_prev).transpose();
      dbh += da_h;

      dinputs.row(t) =
          (Wz.transpose() * da_z + Wr.transpose() * da_r + Wh.transpose() * da_h).transpose();
      dh = dh.cwiseProduct(Eigen::VectorXd::Ones(H) - step.z) + Uz.transpose() * da_z +
           Ur.transpose() * da_r + drh.cwiseProduct(step.r);
    }

    if (l > 0) {
      dout = dinputs;
      const auto& mask = cache.between_masks[static_cast<std::size_t>(l) - 1];
      if (mask.size() > 0) dout = dout.cwiseProduct(mask);
    } else if (input_grad) {
      *input_grad += dinputs;
    }
  }
}

Eigen::MatrixXd GruNet::input_gradient(const Eigen::MatrixXd& window) const {
  ForwardCache cache;
  run_forward(window, &cache, nullptr);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
  Eigen::MatrixXd input_grad = Eigen::MatrixXd::Zero(window.rows(), window.cols());
  backward(cache, 1.0, grad, &input_grad);
  return input_grad;
}

std::pair<double, Eigen::VectorXd> GruNet::loss_and_gradient(
    const std::vector<Eigen::MatrixXd>& windows, const Eigen::VectorXd& y) const {
  if (static_cast<Eigen::Index>(windows.size()) != y.size())
    throw ShapeError("window count and target length differ");
  const double n = static_cast<double>(windows.size());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
  double loss = 0.0;
  ForwardCache cache;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const double pred = run_forward(windows[i], &cache, nullptr);
    const double err = pred - y(static_cast<Eigen::Index>(i));
    loss += err * err / n;
    backward(cache, 2.0 * err / n, grad, nullptr);
  }
  loss += config_.l2_reg * theta_.squaredNorm();
  grad += 2.0 * config_.l2_reg * theta_;
  return {loss, grad};
}

void GruNet::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != theta_.size()) throw ShapeError("parameter size mismatch");
  theta_ = theta;
}

double GruNet::validation_mse(const Eigen::MatrixXd& X_val, const Eigen::VectorXd& y_val,
                              const Eigen::MatrixXd& X_context) const {
  // context rows immediately precede the validation rows in time
  const int S = config_.seq_len;
  double mse = 0.0;
  for (int i = 0; i < X_val.rows(); ++i) {
    Eigen::MatrixXd window(S, input_dim_);
    for (int s = 0; s < S; ++s) {
      const int pos = i - (S - 1) + s;
      if (pos >= 0)
        window.row(s) = X_val.row(pos);
      else if (X_context.rows() + pos >= 0)
        window.row(s) = X_context.row(X_context.rows() + pos);
      else
        window.row(s) = X_val.row(0);
    }
    const double err = forward(window) - y_val(i);
    mse += err * err;
  }
  return mse / static_cast<double>(X_val.rows());
}

TrainResult GruNet::train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const TrainSchedule& schedule, const Eigen::MatrixXd* X_val,
                          const Eigen::VectorXd* y_val, const EpochCallback& callback) {
  schedule.validate();
  if (X.rows() != y.size()) throw ShapeError("X rows and y length differ");
  const int S = config_.seq_len;
  const auto n_rows = static_cast<int>(X.rows());
  if (n_rows < S) throw ShapeError("need at least seq_len rows to train a GRU");

  // trailing windows ending at each row from S-1 on
  std::vector<Eigen::MatrixXd> windows;
  std::vector<double> targets;
  for (int t = S - 1; t < n_rows; ++t) {
    windows.push_back(X.middleRows(t - S + 1, S));
    targets.push_back(y(t));
  }
  const auto n = static_cast<int>(windows.size());

  Rng rng = Rng::stream(schedule.seed, {0x47});
  Adam adam(theta_.size());
  TrainResult result;

  const bool track_val = X_val != nullptr && y_val != nullptr && X_val->rows() > 0;
  double best_val = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta = theta_;
  int stale = 0;

  ForwardCache cache;
  for (int epoch = 0; epoch < schedule.max_epochs; ++epoch) {
    const auto order = shuffled_indices(n, rng);
    double train_loss = 0.0;
    for (int start = 0; start < n; start += schedule.batch_size) {
      const int stop = std::min(n, start + schedule.batch_size);
      const double bsz = stop - start;
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
      for (int k = start; k < stop; ++k) {
        const int i = order[static_cast<std::size_t>(k)];
        const double pred = run_forward(windows[static_cast<std::size_t>(i)], &cache, &rng);
        const double err = pred - targets[static_cast<std::size_t>(i)];
        train_loss += err * err;
        backward(cache, 2.0 * err / bsz, grad, nullptr);
      }
      grad += 2.0 * config_.l2_reg * bsz / n * theta_;
      adam.step(theta_, grad, schedule.lr);
    }
    if (!std::isfinite(train_loss))
      throw NumericError("GRU training diverged (non-finite loss at epoch " +
                         std::to_string(epoch) + ")");
    result.epochs_run = epoch + 1;

    if (!track_val) {
      if (callback && !callback(epoch, train_loss / n)) {
        result.halted_by_callback = true;
        break;
      }
      continue;
    }

    const double val_mse = validation_mse(*X_val, *y_val, X);
    result.val_history.push_back(val_mse);
    if (val_mse < best_val) {
      best_val = val_mse;
      best_theta = theta_;
      result.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    if (callback && !callback(epoch, val_mse)) {
      result.halted_by_callback = true;
      break;
    }
    if (stale >= schedule.early_stop_patience) break;
  }
  if (track_val && result.best_epoch >= 0) theta_ = best_theta;
  return result;
}

// ---------------------------------------------------------------------------
// Integrated gradients

Eigen::VectorXd integrated_gradients(const DifferentiableFn& f, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& baseline, int steps) {
  if (steps < 2) throw ConfigError("integrated gradients needs at least 2 steps");
  if (x.size() != baseline.size()) throw ShapeError("input and baseline sizes differ");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.size());
  const Eigen::VectorXd direction = x - baseline;
  for (int s = 1; s <= steps; ++s) {
    const double alpha = static_cast<double>(s) / steps;
    acc += f.gradient(baseline + alpha * direction);
  }
  return direction.cwiseProduct(acc / static_cast<double>(steps));
}

// ---------------------------------------------------------------------------
// Learner adapters

void MlpLearner::set_validation(const Eigen::MatrixXd& X_val, const Eigen::VectorXd& y_val) {
  x_val_ = X_val;
  y_val_ = y_val;
}

void MlpLearner::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  net_.emplace(static_cast<int>(X.cols()), config_, schedule_.seed);
  const Eigen::MatrixXd* xv = x_val_ ? &*x_val_ : nullptr;
  const Eigen::VectorXd* yv = y_val_ ? &*y_val_ : nullptr;
  result_ = net_->train(X, y, schedule_, xv, yv, callback_);
  eval_rows_ = xv && xv->rows() > 0 ? *xv : X.bottomRows(std::min<Eigen::Index>(X.rows(), 12));
}

double MlpLearner::predict(const Eigen::VectorXd& x) const {
  if (!net_) throw NumericError("predict before fit");
  return net_->forward(x);
}

std::map<std::string, double> MlpLearner::importance() const {
  if (!net_) throw NumericError("importance before fit");
  const DifferentiableFn fn{
      [this](const Eigen::VectorXd& v) { return net_->forward(v); },
      [this](const Eigen::VectorXd& v) { return net_->input_gradient(v); }};
  const Eigen::VectorXd baseline = Eigen::VectorXd::Zero(net_->input_dim());
  Eigen::VectorXd mean_ig = Eigen::VectorXd::Zero(net_->input_dim());
  for (int i = 0; i < eval_rows_.rows(); ++i)
    mean_ig += integrated_gradients(fn, eval_rows_.row(i), baseline, ig_steps_);
  mean_ig /= static_cast<double>(eval_rows_.rows());

  std::map<std::string, double> out;
  for (std::size_t j = 0; j < info_.count(); ++j) {
    if (info_.is_dummy[j]) continue;
    out[info_.names[j]] = mean_ig(static_cast<Eigen::Index>(j));
  }
  return out;
}

void GruLearner::set_validation(const Eigen::MatrixXd& X_val, const Eigen::VectorXd& y_val) {
  x_val_ = X_val;
  y_val_ = y_val;
}

void GruLearner::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  net_.emplace(static_cast<int>(X.cols()), config_, schedule_.seed);
  const Eigen::MatrixXd* xv = x_val_ ? &*x_val_ : nullptr;
  const Eigen::VectorXd* yv = y_val_ ? &*y_val_ : nullptr;
  result_ = net_->train(X, y, schedule_, xv, yv, callback_);
  fit_x_ = X;
}

double GruLearner::predict(const Eigen::VectorXd& x) const {
  if (!net_) throw NumericError("predict before fit");
  // default path: window = training tail followed by the probe row
  const int S = config_.seq_len;
  Eigen::MatrixXd window(S, x.size());
  for (int s = 0; s < S - 1; ++s) {
    const Eigen::Index r = fit_x_.rows() - (S - 1) + s;
    if (r >= 0)
      window.row(s) = fit_x_.row(r);
    else
      window.row(s) = x.transpose();
  }
  window.row(S - 1) = x.transpose();
  return net_->forward(window);
}

double GruLearner::predict_with_history(const Eigen::MatrixXd& window) const {
  if (!net_) throw NumericError("predict before fit");
  const int S = config_.seq_len;
  if (window.rows() == S) return net_->forward(window);
  if (window.rows() > S) return net_->forward(window.bottomRows(S));
  return predict(window.row(window.rows() - 1));
}

std::map<std::string, double> GruLearner::importance() const {
  if (!net_) throw NumericError("importance before fit");
  const int S = config_.seq_len;
  const int p = static_cast<int>(fit_x_.cols());
  const DifferentiableFn fn{
      [&](const Eigen::VectorXd& flat) {
        return net_->forward(Eigen::Map<const Eigen::MatrixXd>(flat.data(), S, p));
      },
      [&](const Eigen::VectorXd& flat) {
        const Eigen::MatrixXd g =
            net_->input_gradient(Eigen::Map<const Eigen::MatrixXd>(flat.data(), S, p));
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(g.data(), S * p));
      }};

  const Eigen::VectorXd baseline = Eigen::VectorXd::Zero(S * p);
  Eigen::VectorXd mean_ig = Eigen::VectorXd::Zero(p);
  int count = 0;
  const int first = std::max(S - 1, static_cast<int>(fit_x_.rows()) - 12);
  for (int t = first; t < fit_x_.rows(); ++t) {
    const Eigen::MatrixXd window = fit_x_.middleRows(t - S + 1, S);
    const Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(window.data(), S * p);
    const Eigen::VectorXd ig = integrated_gradients(fn, flat, baseline, ig_steps_);
    const Eigen::Map<const Eigen::MatrixXd> ig_mat(ig.data(), S, p);
    mean_ig += ig_mat.colwise().sum().transpose();  // attribute per feature across the window
    ++count;
  }
  if (count > 0) mean_ig /= static_cast<double>(count);

  std::map<std::string, double> out;
  for (std::size_t j = 0; j < info_.count(); ++j) {
    if (info_.is_dummy[j]) continue;
    out[info_.names[j]] = mean_ig(static_cast<Eigen::Index>(j));
  }
  return out;
}

}  // namespace nowcast
