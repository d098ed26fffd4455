#include "nowcast/metrics.hpp"

#include <cmath>

#include "nowcast/errors.hpp"

namespace nowcast {

MetricBundle metrics(std::span<const double> forecasts, std::span<const double> actuals) {
  if (forecasts.size() != actuals.size()) throw ShapeError("forecast/actual length mismatch");
  if (forecasts.empty()) throw ShapeError("metrics over an empty record set");
  MetricBundle out;
  for (std::size_t t = 0; t < forecasts.size(); ++t) {
    const double e = forecasts[t] - actuals[t];
    out.msfe += e * e;
    out.mafe += std::fabs(e);
  }
  const double n = static_cast<double>(forecasts.size());
  out.msfe /= n;
  out.mafe /= n;
  out.rmsfe = std::sqrt(out.msfe);
  return out;
}

double rmsfe_ratio(const MetricBundle& model, const MetricBundle& benchmark) {
  if (!(benchmark.rmsfe > 0.0)) throw NumericError("benchmark RMSFE must be positive");
  return model.rmsfe / benchmark.rmsfe;
}

}  // namespace nowcast
