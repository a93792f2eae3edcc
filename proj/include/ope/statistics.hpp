#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ope {

double sample_mean(std::span<const double> v);
/// Unbiased sample variance.
double sample_variance(std::span<const double> v);
double standard_error(std::span<const double> v);

struct WilsonInterval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};
/// Wilson score interval for k successes in `trials` (default 95% level).
WilsonInterval wilson_interval(std::size_t k, std::size_t trials, double z = 1.959963984540054);

/// sup_x |F_emp(x) - cdf(x)|.
double ks_statistic(std::vector<double> data, const std::function<double(double)>& cdf);
/// sup_x |F_a(x) - F_b(x)|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Least-squares slope of log(value) against log(n); 0 if any value is not positive.
double loglog_slope(std::span<const double> n, std::span<const double> values);
bool strictly_decreasing(std::span<const double> values);
bool strictly_increasing(std::span<const double> values);

unsigned default_threads();
/// Runs fn(0..count-1) on up to `threads` workers. Callers write into
/// preallocated slots so the result never depends on scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Round-trip decimal formatting (17 significant digits).
std::string format_double(double v);

}  // namespace ope
