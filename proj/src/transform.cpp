#include "nowcast/transform.hpp"

#include "nowcast/errors.hpp"

namespace nowcast {

Aggregation aggregation_from_string(const std::string& s) {
  if (s == "sum") return Aggregation::kSum;
  if (s == "mean") return Aggregation::kMean;
  if (s == "end_of_period") return Aggregation::kEndOfPeriod;
  throw ConfigError("unknown aggregation '" + s + "'");
}

void TransformSpec::validate() const {
  if (!(neg_shock_threshold < 0.0 && 0.0 < pos_shock_threshold))
    throw ConfigError("shock thresholds must satisfy neg < 0 < pos");
  if (!(adf_alpha > 0.0 && adf_alpha < 1.0)) throw ConfigError("adf_alpha must be in (0,1)");
  if (forward_fill_limit < 0) throw ConfigError("forward_fill_limit must be >= 0");
  if (adf_lags < 0) throw ConfigError("adf_lags must be >= 0");
}

std::vector<double> deflate_and_growth(std::span<const double> nominal,
                                       std::span<const double> deflator) {
  if (nominal.size() != deflator.size())
    throw ShapeError("nominal and deflator lengths differ");
  if (nominal.size() < 2) throw ShapeError("need at least two observations for growth");
  std::vector<double> real(nominal.size());
  for (std::size_t t = 0; t < nominal.size(); ++t) {
    if (!(deflator[t] > 0.0))
      throw NumericError("deflator must be strictly positive (index " + std::to_string(t) + ")");
    real[t] = 100.0 * nominal[t] / deflator[t];
  }
  std::vector<double> growth(nominal.size() - 1);
  for (std::size_t t = 1; t < real.size(); ++t)
    growth[t - 1] = 100.0 * (real[t] - real[t - 1]) / real[t - 1];
  return growth;
}

std::vector<double> aggregate_monthly(std::span<const double> values, Aggregation method) {
  if (values.size() % 3 != 0)
    throw ShapeError("monthly series length must be divisible by 3, got " +
                     std::to_string(values.size()));
  const std::size_t k = values.size() / 3;
  std::vector<double> out(k);
  for (std::size_t q = 0; q < k; ++q) {
    const double a = values[3 * q], b = values[3 * q + 1], c = values[3 * q + 2];
    switch (method) {
      case Aggregation::kSum: out[q] = a + b + c; break;
      case Aggregation::kMean: out[q] = (a + b + c) / 3.0; break;
      case Aggregation::kEndOfPeriod: out[q] = c; break;
    }
  }
  return out;
}

FillResult forward_fill(std::span<const std::optional<double>> series, int limit) {
  FillResult result;
  int leading = 0;
  while (static_cast<std::size_t>(leading) < series.size() && !series[static_cast<std::size_t>(leading)])
    ++leading;
  result.leading_gaps = leading;
  if (leading > limit) {
    result.flagged_removed = true;
    return result;
  }
  if (leading > 0)
    throw DataError("leading gap with no prior value (" + std::to_string(leading) +
                    " missing) and column not removable under limit " + std::to_string(limit));
  result.values.reserve(series.size());
  double last = 0.0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    if (series[t]) last = *series[t];
    result.values.push_back(last);
  }
  return result;
}

DummySet build_dummies(std::span<const double> target_growth,
                       std::span<const QuarterIndex> quarters, const TransformSpec& spec) {
  if (target_growth.size() != quarters.size())
    throw ShapeError("target growth and quarter index lengths differ");
  spec.validate();
  const std::size_t n = quarters.size();
  DummySet d;
  d.q1.resize(n);
  d.q2.resize(n);
  d.q3.resize(n);
  d.neg_shock.resize(n);
  d.pos_shock.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    d.q1[t] = quarters[t].quarter == 1 ? 1.0 : 0.0;
    d.q2[t] = quarters[t].quarter == 2 ? 1.0 : 0.0;
    d.q3[t] = quarters[t].quarter == 3 ? 1.0 : 0.0;
    d.neg_shock[t] = target_growth[t] <= spec.neg_shock_threshold ? 1.0 : 0.0;
    d.pos_shock[t] = target_growth[t] >= spec.pos_shock_threshold ? 1.0 : 0.0;
  }
  return d;
}

}  // namespace nowcast
