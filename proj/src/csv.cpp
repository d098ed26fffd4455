#include "nowcast/csv.hpp"

#include <fstream>
#include <sstream>

#include "nowcast/errors.hpp"

namespace nowcast {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  out.push_back(cell);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

RawTable read_raw_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
  auto header = split_line(line);
  if (header.empty() || trim(header[0]) != "quarter")
    throw DataError("'" + path + "': first header column must be 'quarter'");

  RawTable table;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    if (name.empty()) throw DataError("'" + path + "': blank column name in header");
    table.names.push_back(name);
  }
  table.cells.resize(table.names.size());

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size())
      throw DataError("'" + path + "' line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, got " +
                      std::to_string(cells.size()));
    table.quarters.push_back(QuarterIndex::parse(trim(cells[0])));
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const std::string v = trim(cells[c]);
      if (v.empty()) {
        table.cells[c - 1].push_back(std::nullopt);
      } else {
        try {
          table.cells[c - 1].push_back(std::stod(v));
        } catch (const std::exception&) {
          throw DataError("'" + path + "' line " + std::to_string(line_no) +
                          ": bad number '" + v + "'");
        }
      }
    }
  }
  if (table.quarters.empty()) throw DataError("'" + path + "' has no data rows");
  for (std::size_t i = 1; i < table.quarters.size(); ++i) {
    if (table.quarters[i].serial() != table.quarters[i - 1].serial() + 1)
      throw DataError("'" + path + "': quarters must be consecutive, gap after " +
                      table.quarters[i - 1].str());
  }
  return table;
}

SeriesFrame frame_from_csv(const std::string& path,
                           const std::map<std::string, ColumnKind>& kinds) {
  RawTable raw = read_raw_csv(path);
  SeriesFrame frame(raw.quarters);
  for (std::size_t c = 0; c < raw.names.size(); ++c) {
    std::vector<double> vals;
    vals.reserve(raw.quarters.size());
    for (const auto& cell : raw.cells[c]) {
      if (!cell)
        throw DataError("'" + path + "': column '" + raw.names[c] +
                        "' has missing cells; run ingest first");
      vals.push_back(*cell);
    }
    const auto it = kinds.find(raw.names[c]);
    frame.add_column(raw.names[c], std::move(vals),
                     it == kinds.end() ? ColumnKind::kContinuous : it->second);
  }
  return frame;
}

void write_frame_csv(const SeriesFrame& frame, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "quarter";
  for (const auto& name : frame.names()) out << "," << name;
  out << "\n";
  std::ostringstream row;
  row.precision(17);
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    row.str("");
    row << frame.index()[r].str();
    for (const auto& name : frame.names()) row << "," << frame.column(name)[r];
    out << row.str() << "\n";
  }
}

}  // namespace nowcast
