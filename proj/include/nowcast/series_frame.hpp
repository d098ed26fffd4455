#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nowcast/quarter.hpp"

namespace nowcast {

enum class ColumnKind { kContinuous, kSeasonalDummy, kShockDummy, kTarget };

std::string to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& s);

// Quarter-indexed data matrix. Columns are named, typed (continuous / dummy /
// target) and equal length; the invariants are enforced on mutation.
class SeriesFrame {
 public:
  SeriesFrame() = default;
  explicit SeriesFrame(std::vector<QuarterIndex> index);

  std::size_t rows() const { return index_.size(); }
  std::size_t cols() const { return names_.size(); }

  const std::vector<QuarterIndex>& index() const { return index_; }

  void add_column(const std::string& name, std::vector<double> values, ColumnKind kind);
  void drop_column(const std::string& name);

  bool has_column(const std::string& name) const;
  std::size_t column_pos(const std::string& name) const;  // throws if absent
  const std::vector<double>& column(const std::string& name) const;
  std::vector<double>& column_mut(const std::string& name);
  ColumnKind kind(const std::string& name) const;

  const std::vector<std::string>& names() const { return names_; }
  std::vector<std::string> names_of(ColumnKind kind) const;
  std::string target_name() const;       // throws unless exactly one target
  std::vector<std::string> feature_names() const;  // everything but the target

  double at(std::size_t row, const std::string& name) const;
  void set(std::size_t row, const std::string& name, double value);

  // Position of a quarter in the index; nullopt when absent.
  std::optional<std::size_t> row_of(QuarterIndex q) const;

  // Row-slice copy, [first_row, last_row] inclusive.
  SeriesFrame slice_rows(std::size_t first_row, std::size_t last_row) const;

  // Dense matrix of the named columns over [first_row, last_row].
  Eigen::MatrixXd matrix(const std::vector<std::string>& cols, std::size_t first_row,
                         std::size_t last_row) const;
  Eigen::VectorXd vector(const std::string& col, std::size_t first_row,
                         std::size_t last_row) const;

  // Dummy columns must hold only 0/1; throws otherwise.
  void validate() const;

 private:
  std::vector<QuarterIndex> index_;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::vector<ColumnKind> kinds_;
};

}  // namespace nowcast
