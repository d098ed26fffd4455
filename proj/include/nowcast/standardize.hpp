#pragma once

#include <map>
#include <string>

#include "nowcast/series_frame.hpp"

namespace nowcast {

struct ColumnStats {
  double mean = 0.0;
  double std = 1.0;
};

using StandardizeStats = std::map<std::string, ColumnStats>;

// Means and population standard deviations of the continuous and target
// columns over the training rows [first_row, last_row].
StandardizeStats standardize_fit(const SeriesFrame& train, std::size_t first_row,
                                 std::size_t last_row);

// Applies train statistics to every row of `frame`. Dummy columns pass
// through untouched. The target column is scaled only when scale_target.
SeriesFrame standardize_apply(const SeriesFrame& frame, const StandardizeStats& stats,
                              bool scale_target = false);

}  // namespace nowcast
