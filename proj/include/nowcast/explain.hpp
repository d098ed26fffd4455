#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "nowcast/quarter.hpp"
#include "nowcast/windows.hpp"

namespace nowcast {

// Importance values over splits: one map per split (feature -> value),
// aligned with the split's test quarter.
struct ImportanceTrajectory {
  std::vector<QuarterIndex> test_quarters;
  std::vector<std::map<std::string, double>> values;  // one entry per split
};

// Per-feature arithmetic mean over the splits whose test quarter falls in the
// named sub-period.
std::map<std::string, double> aggregate(const ImportanceTrajectory& trajectory,
                                        const Horizon& horizon, const std::string& subperiod);

struct RankedFeature {
  std::string name;
  double value = 0.0;
};

// Descending by |value| when `signed_measure`, by value otherwise; ties break
// on the feature name. The signed value is reported either way.
std::vector<RankedFeature> top_k(const std::map<std::string, double>& means, std::size_t k,
                                 bool signed_measure = true);

// Pearson correlation of average-ranked data (ties averaged).
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace nowcast
