#pragma once

#include <span>

namespace nowcast {

struct ShapiroWilkResult {
  double w = 0.0;
  double p_value = 0.0;
};

// Shapiro-Wilk normality test via the Royston (1995) AS R94 approximation;
// valid for 3 <= n <= 5000.
ShapiroWilkResult shapiro_wilk(std::span<const double> residuals);

struct LjungBoxResult {
  double q = 0.0;
  double p_value = 0.0;
  int lags = 0;
};

// Q = n(n+2) sum_k rho_k^2 / (n-k), upper tail of chi-squared(lags).
LjungBoxResult ljung_box(std::span<const double> residuals, int lags = 4);

}  // namespace nowcast
