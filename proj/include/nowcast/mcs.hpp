#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nowcast/quarter.hpp"

namespace nowcast {

// Out-of-sample squared errors: N test quarters by K models.
struct LossMatrix {
  std::vector<QuarterIndex> quarters;
  std::vector<std::string> models;
  Eigen::MatrixXd losses;

  void validate() const;
  std::size_t model_pos(const std::string& name) const;
};

enum class McsStatistic { kTmax, kTR };

struct McsResult {
  std::vector<std::string> survivors;
  std::map<std::string, double> p_values;  // max-so-far convention
  std::vector<std::string> ranking;        // eliminated first (worst to better), survivors last
};

// Hansen-Lunde-Nason iterative elimination. Pairwise loss differentials are
// moving-block bootstrapped (common time resample across models) to build the
// null distribution of the chosen statistic; while equal predictive ability
// is rejected at `alpha`, the model with the highest relative-loss t-statistic
// is removed. Exactly constant differentials count as ties and never drive an
// elimination.
McsResult mcs(const LossMatrix& losses, double alpha = 0.10, int replicates = 10000,
              int block_len = 4, McsStatistic statistic = McsStatistic::kTmax,
              std::uint64_t seed = 42);

}  // namespace nowcast
