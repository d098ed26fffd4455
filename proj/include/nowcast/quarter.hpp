#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace nowcast {

// Calendar quarter, totally ordered; (y, 4) + 1 == (y+1, 1).
struct QuarterIndex {
  int year = 0;
  int quarter = 1;  // 1..4

  static QuarterIndex parse(const std::string& text);  // "YYYY Qn"
  std::string str() const;

  int serial() const { return year * 4 + (quarter - 1); }
  static QuarterIndex from_serial(int s) {
    int y = s / 4;
    int q = s % 4;
    if (q < 0) {
      q += 4;
      y -= 1;
    }
    return {y, q + 1};
  }

  QuarterIndex next() const { return from_serial(serial() + 1); }
  QuarterIndex prev() const { return from_serial(serial() - 1); }
  QuarterIndex plus(int n) const { return from_serial(serial() + n); }

  friend auto operator<=>(const QuarterIndex& a, const QuarterIndex& b) {
    return a.serial() <=> b.serial();
  }
  friend bool operator==(const QuarterIndex& a, const QuarterIndex& b) {
    return a.serial() == b.serial();
  }
};

// Closed interval of quarters.
struct QuarterRange {
  QuarterIndex first;
  QuarterIndex last;

  bool contains(QuarterIndex q) const { return first <= q && q <= last; }
  int length() const { return last.serial() - first.serial() + 1; }
};

}  // namespace nowcast
