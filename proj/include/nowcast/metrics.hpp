#pragma once

#include <span>

namespace nowcast {

struct MetricBundle {
  double msfe = 0.0;
  double rmsfe = 0.0;
  double mafe = 0.0;
};

MetricBundle metrics(std::span<const double> forecasts, std::span<const double> actuals);

// model RMSFE / benchmark RMSFE; < 1 marks an improvement over the benchmark
double rmsfe_ratio(const MetricBundle& model, const MetricBundle& benchmark);

}  // namespace nowcast
