#include "nowcast/series_frame.hpp"

#include <algorithm>
#include <cmath>

#include "nowcast/errors.hpp"

namespace nowcast {

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kContinuous: return "continuous";
    case ColumnKind::kSeasonalDummy: return "seasonal_dummy";
    case ColumnKind::kShockDummy: return "shock_dummy";
    case ColumnKind::kTarget: return "target";
  }
  return "continuous";
}

ColumnKind column_kind_from_string(const std::string& s) {
  if (s == "continuous") return ColumnKind::kContinuous;
  if (s == "seasonal_dummy") return ColumnKind::kSeasonalDummy;
  if (s == "shock_dummy") return ColumnKind::kShockDummy;
  if (s == "target") return ColumnKind::kTarget;
  throw ConfigError("unknown column kind: " + s);
}

SeriesFrame::SeriesFrame(std::vector<QuarterIndex> index) : index_(std::move(index)) {
  for (std::size_t i = 1; i < index_.size(); ++i) {
    if (!(index_[i - 1] < index_[i]))
      throw DataError("quarter index must be strictly increasing");
  }
}

void SeriesFrame::add_column(const std::string& name, std::vector<double> values,
                             ColumnKind kind) {
  if (values.size() != index_.size())
    throw ShapeError("column '" + name + "' length " + std::to_string(values.size()) +
                     " != index length " + std::to_string(index_.size()));
  if (has_column(name)) throw DataError("duplicate column '" + name + "'");
  names_.push_back(name);
  columns_.push_back(std::move(values));
  kinds_.push_back(kind);
}

void SeriesFrame::drop_column(const std::string& name) {
  const std::size_t pos = column_pos(name);
  names_.erase(names_.begin() + static_cast<std::ptrdiff_t>(pos));
  columns_.erase(columns_.begin() + static_cast<std::ptrdiff_t>(pos));
  kinds_.erase(kinds_.begin() + static_cast<std::ptrdiff_t>(pos));
}

bool SeriesFrame::has_column(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t SeriesFrame::column_pos(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw DataError("no column named '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

const std::vector<double>& SeriesFrame::column(const std::string& name) const {
  return columns_[column_pos(name)];
}

std::vector<double>& SeriesFrame::column_mut(const std::string& name) {
  return columns_[column_pos(name)];
}

ColumnKind SeriesFrame::kind(const std::string& name) const {
  return kinds_[column_pos(name)];
}

std::vector<std::string> SeriesFrame::names_of(ColumnKind kind) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (kinds_[i] == kind) out.push_back(names_[i]);
  return out;
}

std::string SeriesFrame::target_name() const {
  const auto targets = names_of(ColumnKind::kTarget);
  if (targets.size() != 1)
    throw DataError("frame must carry exactly one target column, found " +
                    std::to_string(targets.size()));
  return targets.front();
}

std::vector<std::string> SeriesFrame::feature_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (kinds_[i] != ColumnKind::kTarget) out.push_back(names_[i]);
  return out;
}

double SeriesFrame::at(std::size_t row, const std::string& name) const {
  return columns_[column_pos(name)].at(row);
}

void SeriesFrame::set(std::size_t row, const std::string& name, double value) {
  columns_[column_pos(name)].at(row) = value;
}

std::optional<std::size_t> SeriesFrame::row_of(QuarterIndex q) const {
  const auto it = std::lower_bound(
      index_.begin(), index_.end(), q,
      [](const QuarterIndex& a, const QuarterIndex& b) { return a < b; });
  if (it == index_.end() || !(*it == q)) return std::nullopt;
  return static_cast<std::size_t>(it - index_.begin());
}

SeriesFrame SeriesFrame::slice_rows(std::size_t first_row, std::size_t last_row) const {
  if (first_row > last_row || last_row >= rows()) throw ShapeError("bad row slice");
  SeriesFrame out(std::vector<QuarterIndex>(index_.begin() + static_cast<std::ptrdiff_t>(first_row),
                                            index_.begin() + static_cast<std::ptrdiff_t>(last_row) + 1));
  for (std::size_t c = 0; c < names_.size(); ++c) {
    std::vector<double> vals(columns_[c].begin() + static_cast<std::ptrdiff_t>(first_row),
                             columns_[c].begin() + static_cast<std::ptrdiff_t>(last_row) + 1);
    out.add_column(names_[c], std::move(vals), kinds_[c]);
  }
  return out;
}

Eigen::MatrixXd SeriesFrame::matrix(const std::vector<std::string>& cols, std::size_t first_row,
                                    std::size_t last_row) const {
  if (first_row > last_row || last_row >= rows()) throw ShapeError("bad row range");
  const std::size_t n = last_row - first_row + 1;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto& col = column(cols[c]);
    for (std::size_t r = 0; r < n; ++r)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = col[first_row + r];
  }
  return m;
}

Eigen::VectorXd SeriesFrame::vector(const std::string& col, std::size_t first_row,
                                    std::size_t last_row) const {
  if (first_row > last_row || last_row >= rows()) throw ShapeError("bad row range");
  const auto& c = column(col);
  const std::size_t n = last_row - first_row + 1;
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) v(static_cast<Eigen::Index>(r)) = c[first_row + r];
  return v;
}

void SeriesFrame::validate() const {
  for (std::size_t c = 0; c < names_.size(); ++c) {
    for (double v : columns_[c]) {
      if (std::isnan(v))
        throw DataError("column '" + names_[c] + "' holds a missing value after preprocessing");
      if ((kinds_[c] == ColumnKind::kSeasonalDummy || kinds_[c] == ColumnKind::kShockDummy) &&
          v != 0.0 && v != 1.0)
        throw DataError("dummy column '" + names_[c] + "' holds a non-binary value");
    }
  }
  target_name();
}

}  // namespace nowcast
