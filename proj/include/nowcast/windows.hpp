#pragma once

#include <map>
#include <string>
#include <vector>

#include "nowcast/quarter.hpp"
#include "nowcast/series_frame.hpp"

namespace nowcast {

inline constexpr int kValidationQuarters = 12;

// One walk-forward iteration: expanding train block, 12-quarter validation
// window, single test quarter. The three pieces are contiguous and disjoint.
struct SplitPlan {
  QuarterRange train;
  QuarterRange validation;  // length 12, immediately precedes the test quarter
  QuarterIndex test;
};

struct Horizon {
  QuarterIndex first_test{2017, 1};
  QuarterIndex last_test{2023, 2};
  // Named sub-periods sliced by test quarter. Overall / COVID / Excluding-COVID
  // follow the stated windows; Pre/Post boundaries are inferred defaults and
  // overridable in config.
  std::map<std::string, QuarterRange> subperiods;

  static Horizon with_defaults();
  void validate() const;
};

// One SplitPlan per test quarter in [horizon.first_test, horizon.last_test];
// each split advances the train end by one quarter.
std::vector<SplitPlan> plan_walk_forward(const QuarterRange& data_range, const Horizon& horizon);

// Copy of `frame` with shock dummies forced to zero on the last validation
// quarter and the test quarter of `split`. Seasonal dummies and all other
// rows are untouched.
SeriesFrame neutralize_shock_dummies(const SeriesFrame& frame, const SplitPlan& split);

// Indices of records whose test quarter falls in the named sub-period.
std::vector<std::size_t> slice_subperiod(const std::vector<QuarterIndex>& test_quarters,
                                         const Horizon& horizon, const std::string& name);

}  // namespace nowcast
