#include "nowcast/bootstrap.hpp"

#include <algorithm>

#include "nowcast/errors.hpp"
#include "nowcast/math_util.hpp"

namespace nowcast {

BreakSchedule BreakSchedule::with_defaults() {
  return {{{1997, 3}, {2001, 1}, {2003, 1}, {2008, 3}, {2020, 1}, {2022, 1}}};
}

void BreakSchedule::validate() const {
  for (std::size_t i = 1; i < breaks.size(); ++i)
    if (!(breaks[i - 1] < breaks[i]))
      throw ConfigError("break schedule must be strictly increasing");
}

void BootstrapConfig::validate() const {
  if (block_len < 1) throw ConfigError("block_len must be >= 1");
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("alpha must be in (0, 0.5)");
}

std::vector<std::pair<std::size_t, std::size_t>> segment(std::span<const QuarterIndex> quarters,
                                                         const BreakSchedule& schedule) {
  schedule.validate();
  if (quarters.empty()) throw ShapeError("cannot segment an empty range");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  for (const auto& brk : schedule.breaks) {
    if (!(quarters.front() < brk) || quarters.back() < brk) continue;  // outside, ignored
    // first row at or after the break quarter
    std::size_t cut = start;
    while (cut < quarters.size() && quarters[cut] < brk) ++cut;
    if (cut > start && cut < quarters.size()) {
      out.emplace_back(start, cut - 1);
      start = cut;
    }
  }
  out.emplace_back(start, quarters.size() - 1);
  return out;
}

std::vector<std::size_t> resample_segment(std::size_t segment_len, int block_len, Rng& rng) {
  if (segment_len == 0) throw ShapeError("empty segment");
  if (block_len < 1) throw ConfigError("block_len must be >= 1");
  const auto block = std::min<std::size_t>(static_cast<std::size_t>(block_len), segment_len);
  const std::size_t n_starts = segment_len - block + 1;

  std::vector<std::size_t> out;
  out.reserve(segment_len + block);
  while (out.size() < segment_len) {
    const auto start = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(n_starts) - 1));
    for (std::size_t k = 0; k < block; ++k) out.push_back(start + k);
  }
  out.resize(segment_len);  // truncate the remainder
  return out;
}

std::vector<std::size_t> pair_block_resample(std::span<const QuarterIndex> quarters,
                                             const BreakSchedule& schedule, int block_len,
                                             Rng& rng) {
  std::vector<std::size_t> rows;
  rows.reserve(quarters.size());
  for (const auto& [first, last] : segment(quarters, schedule)) {
    const auto indices = resample_segment(last - first + 1, block_len, rng);
    for (std::size_t idx : indices) rows.push_back(first + idx);
  }
  return rows;
}

namespace {

struct ResampledData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

ResampledData gather(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const std::vector<std::size_t>& rows) {
  ResampledData out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
    out.y(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

void check_failures(int failures, const BootstrapConfig& config) {
  const double frac = static_cast<double>(failures) / config.replicates;
  if (frac > config.max_failure_fraction)
    throw NumericError("bootstrap failure fraction " + std::to_string(frac) +
                       " exceeds the allowed " + std::to_string(config.max_failure_fraction));
}

}  // namespace

IntervalResult prediction_interval(const LearnerFactory& factory, const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& y,
                                   std::span<const QuarterIndex> quarters,
                                   const Eigen::VectorXd& x_test,
                                   const Eigen::MatrixXd* test_window,
                                   const BreakSchedule& schedule, const BootstrapConfig& config) {
  config.validate();
  if (static_cast<std::size_t>(X.rows()) != quarters.size())
    throw ShapeError("design rows and quarter index differ");

  IntervalResult result;
  result.draws.reserve(static_cast<std::size_t>(config.replicates));
  for (int b = 0; b < config.replicates; ++b) {
    Rng rng = Rng::stream(config.seed, {0xb1, static_cast<std::uint64_t>(b)});
    try {
      const auto rows = pair_block_resample(quarters, schedule, config.block_len, rng);
      const auto data = gather(X, y, rows);
      auto learner = factory(Rng::stream(config.seed, {0xb2, static_cast<std::uint64_t>(b)})
                                 .next_u64());
      learner->fit(data.X, data.y);
      const double forecast = learner->wants_history() && test_window != nullptr
                                  ? learner->predict_with_history(*test_window)
                                  : learner->predict(x_test);
      if (!std::isfinite(forecast)) throw NumericError("non-finite replicate forecast");
      result.draws.push_back(forecast);
    } catch (const std::exception&) {
      ++result.failures;
    }
  }
  check_failures(result.failures, config);
  result.lower = stats::quantile(result.draws, config.alpha);
  result.upper = stats::quantile(result.draws, 1.0 - config.alpha);
  return result;
}

ImportanceCi importance_ci(const LearnerFactory& factory, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, std::span<const QuarterIndex> quarters,
                           const BreakSchedule& schedule, const BootstrapConfig& config) {
  config.validate();
  ImportanceCi result;
  std::map<std::string, std::vector<double>> samples;
  for (int b = 0; b < config.replicates; ++b) {
    Rng rng = Rng::stream(config.seed, {0xb1, static_cast<std::uint64_t>(b)});
    try {
      const auto rows = pair_block_resample(quarters, schedule, config.block_len, rng);
      const auto data = gather(X, y, rows);
      auto learner = factory(Rng::stream(config.seed, {0xb2, static_cast<std::uint64_t>(b)})
                                 .next_u64());
      learner->fit(data.X, data.y);
      for (const auto& [name, value] : learner->importance()) samples[name].push_back(value);
    } catch (const std::exception&) {
      ++result.failures;
    }
  }
  check_failures(result.failures, config);
  for (auto& [name, values] : samples) {
    result.bounds[name] = {stats::quantile(values, config.alpha),
                           stats::quantile(values, 1.0 - config.alpha)};
    result.mean[name] = stats::mean(values);
  }
  return result;
}

}  // namespace nowcast
