#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nowcast/quarter.hpp"
#include "nowcast/series_frame.hpp"

namespace nowcast {

enum class Aggregation { kSum, kMean, kEndOfPeriod };

Aggregation aggregation_from_string(const std::string& s);

// Knobs for the raw-series-to-design-matrix pipeline.
struct TransformSpec {
  int forward_fill_limit = 9;
  double adf_alpha = 0.05;
  int adf_lags = 4;                  // one year of quarterly lags
  double neg_shock_threshold = -2.5;  // percent
  double pos_shock_threshold = 5.0;   // percent

  void validate() const;
};

// real_t = 100 * nominal_t / deflator_t, then quarter-over-quarter percent
// growth; output has length n-1.
std::vector<double> deflate_and_growth(std::span<const double> nominal,
                                       std::span<const double> deflator);

// Collapses a monthly series (length divisible by 3) to quarters.
std::vector<double> aggregate_monthly(std::span<const double> values, Aggregation method);

struct FillResult {
  std::vector<double> values;  // empty when flagged_removed
  bool flagged_removed = false;
  int leading_gaps = 0;
};

// Carries the last observed value across interior gaps. A series whose run of
// leading gaps exceeds `limit` is flagged for removal instead of filled.
FillResult forward_fill(std::span<const std::optional<double>> series, int limit);

struct DummySet {
  std::vector<double> q1, q2, q3;       // seasonal (Q4 is the baseline)
  std::vector<double> neg_shock, pos_shock;
};

// Three seasonal indicator columns plus threshold-triggered shock indicators
// computed from the target growth series.
DummySet build_dummies(std::span<const double> target_growth,
                       std::span<const QuarterIndex> quarters, const TransformSpec& spec);

}  // namespace nowcast
