#include "nowcast/gw.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nowcast/errors.hpp"
#include "nowcast/math_util.hpp"

namespace nowcast {

WeaveResult weave_covariance(std::span<const double> residuals, int max_lag) {
  const auto n = static_cast<int>(residuals.size());
  if (max_lag < 0) throw ConfigError("max_lag must be >= 0");
  if (n <= max_lag + 1) throw ShapeError("series too short for the requested lag depth");

  WeaveResult result;
  for (int k = 0; k <= max_lag; ++k)
    result.autocovariances.push_back(
        stats::autocovariance(residuals, static_cast<std::size_t>(k)));
  const double gamma0 = result.autocovariances[0];
  if (!(gamma0 > 0.0)) throw NumericError("degenerate variance: residuals are constant");

  std::vector<double> ratios;
  for (double g : result.autocovariances)
    ratios.push_back(std::clamp(std::fabs(g) / gamma0, 0.0, 1.0));
  result.weights = stats::isotonic_nonincreasing(ratios);

  double lrv = result.weights[0] * gamma0;
  for (int k = 1; k <= max_lag; ++k)
    lrv += 2.0 * result.weights[static_cast<std::size_t>(k)] *
           result.autocovariances[static_cast<std::size_t>(k)];
  // negative-autocovariance pileups can push the sum below zero; keep a floor
  result.long_run_variance = std::max(lrv, 0.05 * gamma0);
  result.variance_of_mean = result.long_run_variance / n;
  return result;
}

GwReport giacomini_white(std::span<const double> loss_model,
                         std::span<const double> loss_benchmark, int max_lag) {
  if (loss_model.size() != loss_benchmark.size())
    throw ShapeError("loss series lengths differ");
  const auto n = static_cast<int>(loss_model.size());
  if (n < 8) throw ShapeError("giacomini_white needs at least 8 observations");

  std::vector<double> d(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t)
    d[static_cast<std::size_t>(t)] = loss_model[static_cast<std::size_t>(t)] -
                                     loss_benchmark[static_cast<std::size_t>(t)];

  GwReport report;
  report.intercept = stats::mean(d);
  if (stats::variance(d) == 0.0) {
    report.degenerate = true;
    report.note = "identical forecasts";
    report.intercept_p = 1.0;
    report.wald = 0.0;
    report.wald_p = 1.0;
    return report;
  }

  std::vector<double> resid(d);
  for (double& v : resid) v -= report.intercept;
  const auto weave = weave_covariance(resid, max_lag);

  report.wald = report.intercept * report.intercept / weave.variance_of_mean;
  report.wald_p = stats::chi2_sf(report.wald, 1.0);
  report.intercept_p = report.wald_p;
  return report;
}

}  // namespace nowcast
