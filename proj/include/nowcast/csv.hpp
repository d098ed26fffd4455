#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nowcast/quarter.hpp"
#include "nowcast/series_frame.hpp"

namespace nowcast {

// Raw quarterly table as read from disk: header row, first column `quarter`
// formatted "YYYY Qn", empty cells for missing observations.
struct RawTable {
  std::vector<QuarterIndex> quarters;
  std::vector<std::string> names;                         // excludes the quarter column
  std::vector<std::vector<std::optional<double>>> cells;  // per column
};

RawTable read_raw_csv(const std::string& path);

// Complete frame (no gaps). Column kinds default to continuous; override per
// name via `kinds`.
SeriesFrame frame_from_csv(const std::string& path,
                           const std::map<std::string, ColumnKind>& kinds = {});

void write_frame_csv(const SeriesFrame& frame, const std::string& path);

}  // namespace nowcast
