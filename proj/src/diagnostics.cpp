#include "nowcast/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "nowcast/errors.hpp"
#include "nowcast/math_util.hpp"

namespace nowcast {

namespace {

double poly(const double* coeffs, int n, double x) {
  double acc = coeffs[0];
  double xp = 1.0;
  for (int i = 1; i < n; ++i) {
    xp *= x;
    acc += coeffs[i] * xp;
  }
  return acc;
}

}  // namespace

ShapiroWilkResult shapiro_wilk(std::span<const double> residuals) {
  const auto n = static_cast<int>(residuals.size());
  if (n < 3 || n > 5000)
    throw ShapeError("shapiro_wilk defined for 3 <= n <= 5000, got " + std::to_string(n));

  std::vector<double> x(residuals.begin(), residuals.end());
  std::sort(x.begin(), x.end());
  if (x.front() == x.back()) throw NumericError("shapiro_wilk on constant residuals");

  // expected normal order statistics (Blom scores)
  std::vector<double> m(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    m[static_cast<std::size_t>(i)] =
        stats::normal_ppf((i + 1 - 0.375) / (n + 0.25));
  double m_sq = 0.0;
  for (double v : m) m_sq += v * v;

  std::vector<double> a(static_cast<std::size_t>(n));
  if (n == 3) {
    a[0] = -std::sqrt(0.5);
    a[1] = 0.0;
    a[2] = std::sqrt(0.5);
  } else {
    const double rsn = 1.0 / std::sqrt(static_cast<double>(n));
    const double c_last = m[static_cast<std::size_t>(n) - 1] / std::sqrt(m_sq);
    static const double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static const double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    const double a_n = c_last + poly(c1, 6, rsn);
    double phi;
    if (n > 5) {
      const double c_last2 = m[static_cast<std::size_t>(n) - 2] / std::sqrt(m_sq);
      const double a_n1 = c_last2 + poly(c2, 6, rsn);
      phi = (m_sq - 2.0 * m[static_cast<std::size_t>(n) - 1] * m[static_cast<std::size_t>(n) - 1] -
             2.0 * m[static_cast<std::size_t>(n) - 2] * m[static_cast<std::size_t>(n) - 2]) /
            (1.0 - 2.0 * a_n * a_n - 2.0 * a_n1 * a_n1);
      a[static_cast<std::size_t>(n) - 2] = a_n1;
      a[1] = -a_n1;
    } else {
      phi = (m_sq - 2.0 * m[static_cast<std::size_t>(n) - 1] * m[static_cast<std::size_t>(n) - 1]) /
            (1.0 - 2.0 * a_n * a_n);
    }
    a[static_cast<std::size_t>(n) - 1] = a_n;
    a[0] = -a_n;
    const int inner_lo = n > 5 ? 2 : 1;
    for (int i = inner_lo; i < n - inner_lo; ++i)
      a[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] / std::sqrt(phi);
  }

  const double mean = stats::mean(x);
  double numer = 0.0, denom = 0.0;
  for (int i = 0; i < n; ++i) {
    numer += a[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    denom += (x[static_cast<std::size_t>(i)] - mean) * (x[static_cast<std::size_t>(i)] - mean);
  }
  ShapiroWilkResult result;
  result.w = numer * numer / denom;
  result.w = std::min(result.w, 1.0);

  // Royston's normalizing transformation
  if (n == 3) {
    const double pi6 = 6.0 / M_PI;
    const double stqr = std::asin(std::sqrt(0.75));
    result.p_value = std::clamp(pi6 * (std::asin(std::sqrt(result.w)) - stqr), 0.0, 1.0);
    return result;
  }
  double z;
  if (n <= 11) {
    const double g = -2.273 + 0.459 * n;
    const double mu = 0.5440 - 0.39978 * n + 0.025054 * n * n - 0.0006714 * n * n * n;
    const double sigma = std::exp(1.3822 - 0.77857 * n + 0.062767 * n * n - 0.0020322 * n * n * n);
    z = (-std::log(g - std::log1p(-result.w)) - mu) / sigma;
  } else {
    const double ln = std::log(static_cast<double>(n));
    const double mu = -1.5861 - 0.31082 * ln - 0.083751 * ln * ln + 0.0038915 * ln * ln * ln;
    const double sigma = std::exp(-0.4803 - 0.082676 * ln + 0.0030302 * ln * ln);
    z = (std::log1p(-result.w) - mu) / sigma;
  }
  result.p_value = 1.0 - stats::normal_cdf(z);
  return result;
}

LjungBoxResult ljung_box(std::span<const double> residuals, int lags) {
  const auto n = static_cast<int>(residuals.size());
  if (lags < 1) throw ConfigError("ljung_box needs lags >= 1");
  if (n <= lags) throw ShapeError("ljung_box needs n > lags");
  const double gamma0 = stats::autocovariance(residuals, 0);
  if (!(gamma0 > 0.0)) throw NumericError("ljung_box on constant residuals");

  LjungBoxResult result;
  result.lags = lags;
  for (int k = 1; k <= lags; ++k) {
    const double rho = stats::autocovariance(residuals, static_cast<std::size_t>(k)) / gamma0;
    result.q += rho * rho / (n - k);
  }
  result.q *= static_cast<double>(n) * (n + 2.0);
  result.p_value = stats::chi2_sf(result.q, lags);
  return result;
}

}  // namespace nowcast
