#pragma once

#include <span>
#include <string>
#include <vector>

#include "nowcast/series_frame.hpp"
#include "nowcast/transform.hpp"

namespace nowcast {

struct AdfResult {
  double stat = 0.0;
  double critical_value = 0.0;
  int lags = 0;
  int effective_n = 0;
  bool stationary = false;
};

// Augmented Dickey-Fuller regression with constant, no trend:
//   dy_t = c + rho * y_{t-1} + sum_i phi_i * dy_{t-i} + e_t
// The t statistic on rho is compared against MacKinnon response-surface
// critical values (constant-only case) at alpha in {0.01, 0.05, 0.10}.
AdfResult adf_test(std::span<const double> y, int lags, double alpha);

enum class DropReason { kUnitRoot, kZeroVariance };

struct AdfDecision {
  std::string column;
  bool dropped = false;
  DropReason reason = DropReason::kUnitRoot;
  AdfResult result;
};

struct AdfFilterOutcome {
  SeriesFrame frame;
  std::vector<AdfDecision> decisions;  // one per continuous column tested
};

// Drops continuous columns that fail to reject a unit root at spec.adf_alpha;
// constant columns are dropped with a distinct reason code.
AdfFilterOutcome adf_filter(const SeriesFrame& frame, const TransformSpec& spec);

}  // namespace nowcast
