#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "nowcast/quarter.hpp"

namespace nowcast {

// Aligned base-model forecasts over the evaluation horizon.
struct ForecastPanel {
  std::vector<QuarterIndex> quarters;
  std::vector<std::string> models;
  Eigen::MatrixXd forecasts;  // N x M
  Eigen::VectorXd actuals;    // N

  void validate() const;
};

struct WeightTrajectory {
  std::vector<QuarterIndex> quarters;
  std::vector<std::string> models;
  Eigen::MatrixXd weights;  // N x M, each row sums to 1
};

// argmax weight at quarter t; ties break on model-name order
std::string dominant_model(const WeightTrajectory& trajectory, std::size_t t);

struct CombinedForecast {
  std::vector<double> values;
  WeightTrajectory weights;
};

// uniform mean of all base forecasts
CombinedForecast combine_sa(const ForecastPanel& panel);

// weights proportional to inverse partial RMSE over realized quarters through
// t-1; uniform on the first quarter. Models with zero partial RMSE split the
// whole weight among themselves.
CombinedForecast combine_wa(const ForecastPanel& panel);

// exponential weights on cumulative squared-error losses through t-1,
// overflow-guarded by subtracting the minimum loss
CombinedForecast combine_ewa(const ForecastPanel& panel, double eta);

struct MetaEwaResult {
  CombinedForecast combined;                // final second-tier forecast
  std::vector<CombinedForecast> per_eta;    // one EWA aggregator per eta
  Eigen::MatrixXd meta_weights;             // N x K over aggregators
  std::vector<double> etas;
};

// Parallel EWA aggregators, one per eta, themselves exponentially weighted by
// their own cumulative losses at rate lambda.
MetaEwaResult combine_meta_ewa(const ForecastPanel& panel, std::vector<double> etas,
                               double lambda);

}  // namespace nowcast
