#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nowcast::stats {

double mean(std::span<const double> x);
double variance(std::span<const double> x);  // denominator n
double sample_variance(std::span<const double> x);  // denominator n-1
double median(std::vector<double> x);  // by value, sorts its copy

// Empirical quantile with linear interpolation between order statistics
// (the h = (n-1)p convention). p in [0, 1].
double quantile(std::vector<double> x, double p);

// Autocovariance at lag k with 1/n normalization, about the sample mean.
double autocovariance(std::span<const double> x, std::size_t lag);

// Pool-adjacent-violators projection onto nonincreasing sequences.
std::vector<double> isotonic_nonincreasing(std::span<const double> y);

// Standard normal cdf / quantile (Wichura AS 241 for the inverse).
double normal_cdf(double x);
double normal_ppf(double p);

// Upper-tail probability of a chi-squared variate with k dof.
double chi2_sf(double x, double k);

// Regularized incomplete gamma functions.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

}  // namespace nowcast::stats
