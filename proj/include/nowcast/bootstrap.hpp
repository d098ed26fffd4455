#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nowcast/learner.hpp"
#include "nowcast/quarter.hpp"
#include "nowcast/rng.hpp"

namespace nowcast {

struct BreakSchedule {
  std::vector<QuarterIndex> breaks;  // strictly increasing; each starts a new segment

  static BreakSchedule with_defaults();
  void validate() const;
};

struct BootstrapConfig {
  int block_len = 4;
  int replicates = 1000;
  double alpha = 0.025;  // per tail
  std::uint64_t seed = 42;
  double max_failure_fraction = 0.05;

  void validate() const;
};

// Contiguous partition of the quarter range at the break quarters (a break
// quarter opens a new segment; breaks outside the range are ignored).
// Returned as inclusive [first, last] row intervals whose concatenation
// reproduces the input.
std::vector<std::pair<std::size_t, std::size_t>> segment(std::span<const QuarterIndex> quarters,
                                                         const BreakSchedule& schedule);

// Block resample of one segment: draws contiguous `block_len` runs with
// replacement (uniform start positions), concatenates, truncates to the
// segment length. Returns indices relative to the segment start.
std::vector<std::size_t> resample_segment(std::size_t segment_len, int block_len, Rng& rng);

// Segment-wise pair block resample over a full train+validation range;
// returns absolute row indices, one per original row.
std::vector<std::size_t> pair_block_resample(std::span<const QuarterIndex> quarters,
                                             const BreakSchedule& schedule, int block_len,
                                             Rng& rng);

// Builds a fresh learner for a bootstrap replicate; the seed is split per
// replicate index so replicates are order-independent.
using LearnerFactory = std::function<std::unique_ptr<Learner>(std::uint64_t replicate_seed)>;

struct IntervalResult {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> draws;  // completed replicate forecasts
  int failures = 0;
};

// B retrainings on pair-block resamples of (X, y), each forecasting the fixed
// test row; the interval takes the empirical [alpha, 1-alpha] quantiles.
// `test_window` feeds learners that consume trailing histories.
IntervalResult prediction_interval(const LearnerFactory& factory, const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& y,
                                   std::span<const QuarterIndex> quarters,
                                   const Eigen::VectorXd& x_test,
                                   const Eigen::MatrixXd* test_window,
                                   const BreakSchedule& schedule, const BootstrapConfig& config);

struct ImportanceCi {
  // per feature: lower and upper quantile of the replicate importances
  std::map<std::string, std::pair<double, double>> bounds;
  std::map<std::string, double> mean;
  int failures = 0;
};

// Same resampling loop; per-feature empirical quantiles of the replicate
// importance values.
ImportanceCi importance_ci(const LearnerFactory& factory, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, std::span<const QuarterIndex> quarters,
                           const BreakSchedule& schedule, const BootstrapConfig& config);

}  // namespace nowcast
