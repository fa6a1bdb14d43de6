#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace snse {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Wilson score interval for hits/n at normal quantile z.
Interval wilson_interval(std::size_t hits, std::size_t n, double z = 1.959963984540054);

/// One-sided upper bound on p after zero hits in n trials: 1 - alpha^{1/n}.
double zero_hit_upper_bound(std::size_t n, double alpha = 0.05);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double r_squared = 0.0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);
/// Fit log y = slope log x + intercept.
LinearFit loglog_fit(std::span<const double> x, std::span<const double> y);

/// Sample quantile with linear interpolation between order statistics (type 7).
double quantile(std::vector<double> values, double q);
/// Fraction of values <= x.
double empirical_cdf(std::span<const double> values, double x);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  std::size_t n = 0;
  double standard_error() const;
};

Moments moments(std::span<const double> values);

}  // namespace snse
