#include "nowcast/mcs.hpp"

#include <algorithm>
#include <cmath>

#include "nowcast/errors.hpp"
#include "nowcast/rng.hpp"

namespace nowcast {

void LossMatrix::validate() const {
  if (models.empty() || quarters.empty()) throw ShapeError("empty loss matrix");
  if (losses.rows() != static_cast<Eigen::Index>(quarters.size()) ||
      losses.cols() != static_cast<Eigen::Index>(models.size()))
    throw ShapeError("loss matrix dimensions do not match labels");
  for (Eigen::Index i = 0; i < losses.rows(); ++i)
    for (Eigen::Index j = 0; j < losses.cols(); ++j)
      if (!std::isfinite(losses(i, j)) || losses(i, j) < 0.0)
        throw DataError("loss entries must be finite and nonnegative");
}

std::size_t LossMatrix::model_pos(const std::string& name) const {
  const auto it = std::find(models.begin(), models.end(), name);
  if (it == models.end()) throw DataError("no model named '" + name + "'");
  return static_cast<std::size_t>(it - models.begin());
}

namespace {

constexpr double kTieVariance = 1e-18;

std::vector<std::vector<int>> moving_block_resamples(int n, int block_len, int replicates,
                                                     Rng& rng) {
  const int block = std::min(block_len, n);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(replicates));
  for (auto& rows : out) {
    rows.reserve(static_cast<std::size_t>(n) + static_cast<std::size_t>(block));
    while (static_cast<int>(rows.size()) < n) {
      const auto start = static_cast<int>(rng.uniform_int(0, n - block));
      for (int k = 0; k < block; ++k) rows.push_back(start + k);
    }
    rows.resize(static_cast<std::size_t>(n));
  }
  return out;
}

}  // namespace

McsResult mcs(const LossMatrix& matrix, double alpha, int replicates, int block_len,
              McsStatistic statistic, std::uint64_t seed) {
  matrix.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  const auto n = static_cast<int>(matrix.quarters.size());
  if (n < block_len) throw ShapeError("need at least block_len loss rows");

  Rng rng = Rng::stream(seed, {0x3c5});
  const auto resamples = moving_block_resamples(n, block_len, replicates, rng);

  // bootstrap column means, shared across elimination rounds
  const auto k_all = static_cast<int>(matrix.models.size());
  Eigen::MatrixXd boot_means(replicates, k_all);
  for (int b = 0; b < replicates; ++b) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(k_all);
    for (int row : resamples[static_cast<std::size_t>(b)]) acc += matrix.losses.row(row);
    boot_means.row(b) = acc / static_cast<double>(n);
  }
  const Eigen::RowVectorXd sample_means = matrix.losses.colwise().mean();

  std::vector<int> active(static_cast<std::size_t>(k_all));
  for (int j = 0; j < k_all; ++j) active[static_cast<std::size_t>(j)] = j;

  McsResult result;
  double p_running = 0.0;
  std::vector<std::string> eliminated;

  while (true) {
    const auto m = static_cast<int>(active.size());
    if (m == 1) {
      result.p_values[matrix.models[static_cast<std::size_t>(active[0])]] = 1.0;
      break;
    }

    // relative means: d_i. = mean_j (Lbar_i - Lbar_j) over active j != i
    Eigen::VectorXd rel(m);
    Eigen::MatrixXd boot_rel(replicates, m);
    for (int a = 0; a < m; ++a) {
      const int i = active[static_cast<std::size_t>(a)];
      double acc = 0.0;
      Eigen::VectorXd bacc = Eigen::VectorXd::Zero(replicates);
      for (int bidx = 0; bidx < m; ++bidx) {
        const int j = active[static_cast<std::size_t>(bidx)];
        if (i == j) continue;
        acc += sample_means(i) - sample_means(j);
        bacc += boot_means.col(i) - boot_means.col(j);
      }
      rel(a) = acc / (m - 1);
      boot_rel.col(a) = bacc / (m - 1);
    }
    Eigen::VectorXd rel_var(m);
    for (int a = 0; a < m; ++a)
      rel_var(a) = (boot_rel.col(a).array() - rel(a)).square().mean();

    Eigen::VectorXd t_stats = Eigen::VectorXd::Zero(m);
    for (int a = 0; a < m; ++a)
      if (rel_var(a) > kTieVariance) t_stats(a) = rel(a) / std::sqrt(rel_var(a));

    double observed = 0.0;
    Eigen::VectorXd boot_stat = Eigen::VectorXd::Zero(replicates);
    if (statistic == McsStatistic::kTmax) {
      observed = t_stats.maxCoeff();
      for (int b = 0; b < replicates; ++b) {
        double worst = -1e300;
        for (int a = 0; a < m; ++a) {
          if (rel_var(a) <= kTieVariance) continue;
          worst = std::max(worst, (boot_rel(b, a) - rel(a)) / std::sqrt(rel_var(a)));
        }
        boot_stat(b) = worst == -1e300 ? 0.0 : worst;
      }
    } else {
      // TR: range statistic over pairwise differentials
      for (int a = 0; a < m; ++a) {
        for (int c = a + 1; c < m; ++c) {
          const int i = active[static_cast<std::size_t>(a)];
          const int j = active[static_cast<std::size_t>(c)];
          const double dij = sample_means(i) - sample_means(j);
          const Eigen::VectorXd boot_dij = boot_means.col(i) - boot_means.col(j);
          const double var = (boot_dij.array() - dij).square().mean();
          if (var <= kTieVariance) continue;
          const double sd = std::sqrt(var);
          observed = std::max(observed, std::fabs(dij) / sd);
          for (int b = 0; b < replicates; ++b)
            boot_stat(b) = std::max(boot_stat(b), std::fabs(boot_dij(b) - dij) / sd);
        }
      }
    }

    const bool all_tied = t_stats.lpNorm<Eigen::Infinity>() == 0.0;
    double p = 1.0;
    if (!all_tied) {
      int count = 0;
      for (int b = 0; b < replicates; ++b)
        if (boot_stat(b) >= observed) ++count;
      p = static_cast<double>(count) / replicates;
    }
    p_running = std::max(p_running, p);

    if (all_tied || p >= alpha) {
      // no rejection: everything still active survives at p_running
      for (int a : active) result.p_values[matrix.models[static_cast<std::size_t>(a)]] =
          std::max(p_running, p);
      break;
    }

    // eliminate the worst model (highest relative-loss t-statistic)
    int worst_a = 0;
    for (int a = 1; a < m; ++a)
      if (t_stats(a) > t_stats(worst_a)) worst_a = a;
    const int worst_model = active[static_cast<std::size_t>(worst_a)];
    result.p_values[matrix.models[static_cast<std::size_t>(worst_model)]] = p_running;
    eliminated.push_back(matrix.models[static_cast<std::size_t>(worst_model)]);
    active.erase(active.begin() + worst_a);
  }

  for (int a : active) result.survivors.push_back(matrix.models[static_cast<std::size_t>(a)]);
  result.ranking = eliminated;
  // survivors ranked best-last by mean loss (descending)
  std::vector<int> by_loss(active.begin(), active.end());
  std::sort(by_loss.begin(), by_loss.end(),
            [&](int a, int b) { return sample_means(a) > sample_means(b); });
  for (int a : by_loss) result.ranking.push_back(matrix.models[static_cast<std::size_t>(a)]);
  return result;
}

}  // namespace nowcast
