#include "nowcast/explain.hpp"

#include <algorithm>
#include <cmath>

#include "nowcast/errors.hpp"

namespace nowcast {

std::map<std::string, double> aggregate(const ImportanceTrajectory& trajectory,
                                        const Horizon& horizon, const std::string& subperiod) {
  if (trajectory.test_quarters.size() != trajectory.values.size())
    throw ShapeError("trajectory quarters and values misaligned");
  const auto keep = slice_subperiod(trajectory.test_quarters, horizon, subperiod);
  if (keep.empty())
    throw DataError("sub-period '" + subperiod + "' selects no splits to aggregate");

  std::map<std::string, double> sums;
  std::map<std::string, int> counts;
  for (std::size_t i : keep) {
    for (const auto& [name, value] : trajectory.values[i]) {
      sums[name] += value;
      counts[name] += 1;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [name, sum] : sums) out[name] = sum / counts[name];
  return out;
}

std::vector<RankedFeature> top_k(const std::map<std::string, double>& means, std::size_t k,
                                 bool signed_measure) {
  if (k < 1) throw ConfigError("top_k needs k >= 1");
  std::vector<RankedFeature> ranked;
  ranked.reserve(means.size());
  for (const auto& [name, value] : means) ranked.push_back({name, value});
  std::sort(ranked.begin(), ranked.end(),
            [signed_measure](const RankedFeature& a, const RankedFeature& b) {
              const double ka = signed_measure ? std::fabs(a.value) : a.value;
              const double kb = signed_measure ? std::fabs(b.value) : b.value;
              if (ka != kb) return ka > kb;
              return a.name < b.name;
            });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("spearman inputs differ in length");
  if (x.size() < 3) throw ShapeError("spearman needs at least 3 points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);

  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw NumericError("spearman undefined: an argument has zero rank variance");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace nowcast
