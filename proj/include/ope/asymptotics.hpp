#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ope/linstat.hpp"

namespace ope {

struct EquilibriumDensity {
  enum class Kind { ArcsineUnitInterval, SemicircleVaryingGaussian, Custom };
  Kind kind = Kind::Custom;
  std::function<double(double)> evaluator;
  Interval support;

  double operator()(double x) const { return evaluator(x); }

  /// 1 / (pi sqrt(1 - x^2)) on (-1, 1).
  static EquilibriumDensity arcsine();
  /// Semicircle with the given second moment; the varying Gaussian ensemble with
  /// N = n has second moment 1 and radius 2.
  static EquilibriumDensity semicircle(double second_moment = 1.0);
};

/// Integral of the density over its support by refined Gauss-Legendre panels in
/// the angle variable.
double density_mass(const EquilibriumDensity& rho, double rtol = 1e-12);

/// Limit density of K~_n(x,x)/n for a kernel's measure, when one is known.
std::optional<EquilibriumDensity> equilibrium_for(const Measure& measure);

/// int (f(y) - f(x)) K_n(x,y)^2 / K_n(x,x) dmu(y).
double nevai_integral(const CDKernel& kern, const TestFunction& f, double x, std::size_t m = 0);

/// sup_s |int (f(s) - f(n^a (y - x*))) K_n(x_s, y)^2 / K_n(x_s, x_s) dmu(y)|, x_s = x* + s n^{-a}.
double alpha_nevai_functional(const CDKernel& kern, const TestFunction& f, double alpha,
                              double xstar, const std::vector<double>& s_grid, std::size_t m = 0);
/// 21 equispaced points on [-2, 2].
std::vector<double> default_s_grid();

/// int_{|y - x*| < delta} K_n(x*,y)^2 / K_n(x*,x*) dmu(y).
double concentration_mass(const CDKernel& kern, double xstar, double delta, std::size_t m = 0);

/// sin(pi (b - a)) / (pi (b - a)), equal to 1 on the diagonal.
double sine_kernel(double a, double b);

struct Box {
  double lo = -2.0;
  double hi = 2.0;
};
/// sup over a grid x grid lattice of (a, b) in box^2 of |scaled_kernel - sine_kernel|.
double universality_error(const CDKernel& kern, double x, Box box, std::size_t grid);

/// sup over `grid` equispaced points of |K~_n(x,x)/n - rho(x)| on the interval.
double totik_error(const CDKernel& kern, const std::function<double(double)>& rho,
                   Interval interval, std::size_t grid);

struct DecayDiagnostic {
  std::vector<std::size_t> n_grid;
  std::vector<double> values;
  bool is_decreasing = false;
  double fit_slope = 0.0;
  /// Premises of the decay theorem are not checkable for this measure.
  bool unverified_premise = false;

  nlohmann::json to_json() const;
};
DecayDiagnostic make_decay_diagnostic(std::vector<std::size_t> n_grid, std::vector<double> values);

/// n^{alpha - 1} Var X_{f, alpha, x*} across the grid.
DecayDiagnostic variance_decay_diagnostic(const MeasurePtr& measure, const TestFunction& f,
                                          double alpha, double xstar,
                                          const std::vector<std::size_t>& n_grid);

}  // namespace ope
