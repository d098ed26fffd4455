#include "nowcast/standardize.hpp"

#include <cmath>

#include "nowcast/errors.hpp"
#include "nowcast/math_util.hpp"

namespace nowcast {

StandardizeStats standardize_fit(const SeriesFrame& train, std::size_t first_row,
                                 std::size_t last_row) {
  if (first_row > last_row || last_row >= train.rows()) throw ShapeError("bad training rows");
  StandardizeStats stats;
  for (const auto& name : train.names()) {
    const auto kind = train.kind(name);
    if (kind == ColumnKind::kSeasonalDummy || kind == ColumnKind::kShockDummy) continue;
    const auto& col = train.column(name);
    std::span<const double> window(col.data() + first_row, last_row - first_row + 1);
    ColumnStats cs;
    cs.mean = stats::mean(window);
    cs.std = std::sqrt(stats::variance(window));
    if (!(cs.std > 0.0))
      throw NumericError("train standard deviation is zero for column '" + name + "'");
    stats.emplace(name, cs);
  }
  return stats;
}

SeriesFrame standardize_apply(const SeriesFrame& frame, const StandardizeStats& stats,
                              bool scale_target) {
  SeriesFrame out = frame;
  for (const auto& name : frame.names()) {
    const auto kind = frame.kind(name);
    if (kind == ColumnKind::kSeasonalDummy || kind == ColumnKind::kShockDummy) continue;
    if (kind == ColumnKind::kTarget && !scale_target) continue;
    const auto it = stats.find(name);
    if (it == stats.end())
      throw DataError("no training statistics for column '" + name + "'");
    auto& col = out.column_mut(name);
    for (double& v : col) v = (v - it->second.mean) / it->second.std;
  }
  return out;
}

}  // namespace nowcast
