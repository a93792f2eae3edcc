#pragma once

#include <cstddef>

#include "ope/measures.hpp"

namespace ope {

/// Christoffel-Darboux kernel K_n(x, y) = sum_{j<n} p_j(x) p_j(y) of a measure.
/// Immutable; safe to share between threads.
class CDKernel {
 public:
  CDKernel(MeasurePtr measure, std::size_t n);

  const Measure& measure() const noexcept { return *measure_; }
  const MeasurePtr& measure_ptr() const noexcept { return measure_; }
  std::size_t n() const noexcept { return n_; }
  /// Recurrence coefficients with depth >= n + 1.
  const RecurrenceCoefficients& coeffs() const noexcept { return coeffs_; }
  /// gamma_{n-1} / gamma_n.
  double b_n() const { return coeffs_.b(n_); }

  /// (p_0(x), ..., p_n(x)) with a common scale factor.
  ScaledPrefix basis(double x) const { return eval_orthonormal_prefix_scaled(coeffs_, n_, x); }

 private:
  MeasurePtr measure_;
  std::size_t n_;
  RecurrenceCoefficients coeffs_;
};

/// Below this separation kernel_cd falls back to the direct sum.
inline bool cd_near_diagonal(double x, double y) {
  return std::abs(x - y) < 1e-6 * (1.0 + std::abs(x) + std::abs(y));
}

double kernel_sum(const CDKernel& kern, double x, double y);
double kernel_cd(const CDKernel& kern, double x, double y);
/// K_n(x, x).
double kernel_diag(const CDKernel& kern, double x);

/// sqrt(w(x) w(y)) K_n(x, y), assembled in log space.
double kernel_tilde(const CDKernel& kern, double x, double y);

/// K~(x + a/K~(x,x), x + b/K~(x,x)) / K~(x,x).
double scaled_kernel(const CDKernel& kern, double x, double a, double b);

/// |sum_i lambda_i K(x, z_i) K(z_i, y) - K(x, y)| with an m-point Gauss rule of the measure.
double reproducing_residual(const CDKernel& kern, double x, double y, std::size_t m);

}  // namespace ope
