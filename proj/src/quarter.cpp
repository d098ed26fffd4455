#include "nowcast/quarter.hpp"

#include <cstdio>

#include "nowcast/errors.hpp"

namespace nowcast {

QuarterIndex QuarterIndex::parse(const std::string& text) {
  int y = 0, q = 0;
  if (std::sscanf(text.c_str(), "%d Q%d", &y, &q) != 2 &&
      std::sscanf(text.c_str(), "%dQ%d", &y, &q) != 2)
    throw DataError("cannot parse quarter '" + text + "', expected 'YYYY Qn'");
  if (q < 1 || q > 4) throw DataError("quarter out of range in '" + text + "'");
  return {y, q};
}

std::string QuarterIndex::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%d Q%d", year, quarter);
  return buf;
}

}  // namespace nowcast
