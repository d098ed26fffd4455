#pragma once

#include <span>
#include <string>
#include <vector>

namespace nowcast {

struct WeaveResult {
  double long_run_variance = 0.0;
  double variance_of_mean = 0.0;
  std::vector<double> weights;           // isotonic-projected, lag 0..max_lag
  std::vector<double> autocovariances;   // unweighted, lag 0..max_lag
};

// Autocorrelation-robust variance of a sample mean: autocovariances up to
// max_lag are reweighted by the nonincreasing isotonic projection of
// |gamma_k|/gamma_0 (clipped to [0,1]) and summed into a long-run variance.
WeaveResult weave_covariance(std::span<const double> residuals, int max_lag);

struct GwReport {
  double intercept = 0.0;
  double intercept_p = 1.0;
  double wald = 0.0;
  double wald_p = 1.0;
  bool degenerate = false;        // zero-variance loss differential
  std::string note;               // "identical forecasts" when degenerate
};

// Conditional predictive-ability comparison: regress the loss differential
// d_t = loss_model - loss_benchmark on an intercept, compute the Wald
// statistic with the WEAVE variance, p-value from chi-squared(1). A negative
// significant intercept means the model beats the benchmark.
GwReport giacomini_white(std::span<const double> loss_model,
                         std::span<const double> loss_benchmark, int max_lag = 4);

}  // namespace nowcast
