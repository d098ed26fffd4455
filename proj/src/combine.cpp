#include "nowcast/combine.hpp"

#include <algorithm>
#include <cmath>

#include "nowcast/errors.hpp"

namespace nowcast {

void ForecastPanel::validate() const {
  if (models.empty() || quarters.empty()) throw ShapeError("empty forecast panel");
  if (forecasts.rows() != static_cast<Eigen::Index>(quarters.size()) ||
      forecasts.cols() != static_cast<Eigen::Index>(models.size()) ||
      actuals.size() != static_cast<Eigen::Index>(quarters.size()))
    throw ShapeError("forecast panel dimensions do not match labels");
  for (Eigen::Index i = 0; i < forecasts.rows(); ++i) {
    if (!std::isfinite(actuals(i))) throw DataError("non-finite actual");
    for (Eigen::Index j = 0; j < forecasts.cols(); ++j)
      if (!std::isfinite(forecasts(i, j)))
        throw DataError("missing forecast for model '" + models[static_cast<std::size_t>(j)] +
                        "' at " + quarters[static_cast<std::size_t>(i)].str());
  }
}

std::string dominant_model(const WeightTrajectory& trajectory, std::size_t t) {
  if (t >= trajectory.quarters.size()) throw ShapeError("no weights at the requested quarter");
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < trajectory.weights.cols(); ++j)
    if (trajectory.weights(static_cast<Eigen::Index>(t), j) >
        trajectory.weights(static_cast<Eigen::Index>(t), best))
      best = j;
  return trajectory.models[static_cast<std::size_t>(best)];
}

namespace {

CombinedForecast make_result(const ForecastPanel& panel, const Eigen::MatrixXd& weights) {
  CombinedForecast out;
  out.weights.quarters = panel.quarters;
  out.weights.models = panel.models;
  out.weights.weights = weights;
  out.values.resize(panel.quarters.size());
  for (Eigen::Index t = 0; t < weights.rows(); ++t)
    out.values[static_cast<std::size_t>(t)] = weights.row(t).dot(panel.forecasts.row(t));
  return out;
}

}  // namespace

CombinedForecast combine_sa(const ForecastPanel& panel) {
  panel.validate();
  const auto n = static_cast<Eigen::Index>(panel.quarters.size());
  const auto m = static_cast<Eigen::Index>(panel.models.size());
  return make_result(panel,
                     Eigen::MatrixXd::Constant(n, m, 1.0 / static_cast<double>(m)));
}

CombinedForecast combine_wa(const ForecastPanel& panel) {
  panel.validate();
  const auto n = static_cast<Eigen::Index>(panel.quarters.size());
  const auto m = static_cast<Eigen::Index>(panel.models.size());
  Eigen::MatrixXd weights(n, m);
  Eigen::VectorXd sq_err_sum = Eigen::VectorXd::Zero(m);

  for (Eigen::Index t = 0; t < n; ++t) {
    if (t == 0) {
      weights.row(t).setConstant(1.0 / static_cast<double>(m));
    } else {
      Eigen::VectorXd rmse(m);
      for (Eigen::Index j = 0; j < m; ++j)
        rmse(j) = std::sqrt(sq_err_sum(j) / static_cast<double>(t));
      if ((rmse.array() <= 0.0).any()) {
        // perfect-history models split the whole weight among themselves
        weights.row(t).setZero();
        int zeros = 0;
        for (Eigen::Index j = 0; j < m; ++j)
          if (rmse(j) <= 0.0) ++zeros;
        for (Eigen::Index j = 0; j < m; ++j)
          if (rmse(j) <= 0.0) weights(t, j) = 1.0 / zeros;
      } else {
        const Eigen::VectorXd inv = rmse.cwiseInverse();
        weights.row(t) = (inv / inv.sum()).transpose();
      }
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      const double e = panel.actuals(t) - panel.forecasts(t, j);
      sq_err_sum(j) += e * e;
    }
  }
  return make_result(panel, weights);
}

CombinedForecast combine_ewa(const ForecastPanel& panel, double eta) {
  panel.validate();
  if (eta < 0.0) throw ConfigError("eta must be >= 0");
  const auto n = static_cast<Eigen::Index>(panel.quarters.size());
  const auto m = static_cast<Eigen::Index>(panel.models.size());
  Eigen::MatrixXd weights(n, m);
  Eigen::VectorXd cumloss = Eigen::VectorXd::Zero(m);

  for (Eigen::Index t = 0; t < n; ++t) {
    const double shift = cumloss.minCoeff();  // value-invariant overflow guard
    Eigen::VectorXd w(m);
    for (Eigen::Index j = 0; j < m; ++j) w(j) = std::exp(-eta * (cumloss(j) - shift));
    weights.row(t) = (w / w.sum()).transpose();
    for (Eigen::Index j = 0; j < m; ++j) {
      const double e = panel.actuals(t) - panel.forecasts(t, j);
      cumloss(j) += e * e;
    }
  }
  return make_result(panel, weights);
}

MetaEwaResult combine_meta_ewa(const ForecastPanel& panel, std::vector<double> etas,
                               double lambda) {
  panel.validate();
  if (etas.empty()) throw ConfigError("meta-EWA needs a nonempty eta grid");
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");

  MetaEwaResult result;
  result.etas = etas;
  for (double eta : etas) result.per_eta.push_back(combine_ewa(panel, eta));

  const auto n = static_cast<Eigen::Index>(panel.quarters.size());
  const auto k = static_cast<Eigen::Index>(etas.size());
  result.meta_weights.resize(n, k);
  Eigen::VectorXd cumloss = Eigen::VectorXd::Zero(k);

  result.combined.values.resize(panel.quarters.size());
  result.combined.weights.quarters = panel.quarters;
  result.combined.weights.models = panel.models;
  result.combined.weights.weights =
      Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(panel.models.size()));

  for (Eigen::Index t = 0; t < n; ++t) {
    const double shift = cumloss.minCoeff();
    Eigen::VectorXd omega(k);
    for (Eigen::Index j = 0; j < k; ++j) omega(j) = std::exp(-lambda * (cumloss(j) - shift));
    omega /= omega.sum();
    result.meta_weights.row(t) = omega.transpose();

    double combined = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double f = result.per_eta[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(t)];
      combined += omega(j) * f;
      // effective base-model weights: meta-mix of the aggregators' weights
      result.combined.weights.weights.row(t) +=
          omega(j) * result.per_eta[static_cast<std::size_t>(j)].weights.weights.row(t);
    }
    result.combined.values[static_cast<std::size_t>(t)] = combined;

    for (Eigen::Index j = 0; j < k; ++j) {
      const double e =
          panel.actuals(t) - result.per_eta[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(t)];
      cumloss(j) += e * e;
    }
  }
  return result;
}

}  // namespace nowcast
