#include "ope/asymptotics.hpp"

#include <algorithm>
#include <numbers>

#include "ope/errors.hpp"
#include "ope/statistics.hpp"

namespace ope {

EquilibriumDensity EquilibriumDensity::arcsine() {
  EquilibriumDensity d;
  d.kind = Kind::ArcsineUnitInterval;
  d.support = {-1.0, 1.0};
  d.evaluator = [](double x) {
    if (!(x > -1.0 && x < 1.0)) return 0.0;
    return 1.0 / (std::numbers::pi * std::sqrt((1.0 - x) * (1.0 + x)));
  };
  return d;
}

EquilibriumDensity EquilibriumDensity::semicircle(double second_moment) {
  if (!(second_moment > 0.0)) throw PreconditionError("second moment must be positive");
  EquilibriumDensity d;
  d.kind = Kind::SemicircleVaryingGaussian;
  const double R = 2.0 * std::sqrt(second_moment);
  d.support = {-R, R};
  d.evaluator = [R](double x) {
    if (!(std::abs(x) < R)) return 0.0;
    return 2.0 * std::sqrt((R - x) * (R + x)) / (std::numbers::pi * R * R);
  };
  return d;
}

double density_mass(const EquilibriumDensity& rho, double rtol) {
  if (!rho.support.bounded()) throw PreconditionError("density support must be bounded");
  const double c = rho.support.center(), r = rho.support.radius();
  const auto gl = gauss_quadrature(classical_recurrence(FamilyTag::legendre(), 16), 16);
  // x = c + r cos(theta) removes inverse-square-root endpoint behavior.
  auto integrate = [&](std::size_t panels) {
    double s = 0.0;
    const double h = std::numbers::pi / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      const double mid = (static_cast<double>(p) + 0.5) * h;
      for (std::size_t q = 0; q < gl.size(); ++q) {
        const double th = mid + 0.5 * h * gl.nodes[q];
        s += h * gl.weights[q] * rho(c + r * std::cos(th)) * r * std::sin(th);
      }
    }
    return s;
  };
  double prev = integrate(4);
  for (std::size_t panels = 8; panels <= 4096; panels *= 2) {
    const double cur = integrate(panels);
    if (std::abs(cur - prev) <= rtol * std::abs(cur)) return cur;
    prev = cur;
  }
  throw ResolutionError("density integral did not converge");
}

std::optional<EquilibriumDensity> equilibrium_for(const Measure& measure) {
  switch (measure.family().kind) {
    case Family::Chebyshev1st:
    case Family::Legendre:
    case Family::Jacobi:
      return EquilibriumDensity::arcsine();
    case Family::VaryingGaussian:
      return EquilibriumDensity::semicircle(1.0);
    case Family::Discretized:
      if (measure.support().bounded()) {
        auto d = EquilibriumDensity::arcsine();
        const double c = measure.support().center(), r = measure.support().radius();
        d.kind = EquilibriumDensity::Kind::Custom;
        d.support = measure.support();
        d.evaluator = [c, r](double x) {
          const double u = (x - c) / r;
          if (!(u > -1.0 && u < 1.0)) return 0.0;
          return 1.0 / (std::numbers::pi * r * std::sqrt((1.0 - u) * (1.0 + u)));
        };
        return d;
      }
      return std::nullopt;
  }
  return std::nullopt;
}

namespace {

// Integrals of g(y) K(x,y)^2 / K(x,x) for several evaluation points x on shared nodes.
std::vector<double> section_integrals(const CDKernel& kern, const NodePlan& plan,
                                      const std::vector<double>& xs,
                                      const std::function<double(std::size_t, double)>& g) {
  return converge(kern, plan, [&](const KernelNodes& nodes, double& scale) {
    std::vector<double> out;
    scale = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const Eigen::VectorXd v = nodes.normalized_section(xs[k]);
      double s = 0.0, mag = 0.0;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double gi = g(k, nodes.x()[i]);
        const double w = v[static_cast<Eigen::Index>(i)] * v[static_cast<Eigen::Index>(i)];
        s += gi * w;
        mag += std::abs(gi) * w;
      }
      out.push_back(s);
      scale = std::max(scale, std::abs(s) + 1e-4 * mag);
    }
    if (scale == 0.0) scale = 1e-300;
    return out;
  });
}

}  // namespace

double nevai_integral(const CDKernel& kern, const TestFunction& f, double x, std::size_t m) {
  const double fx = f(x);
  const auto plan = plan_for(kern, f, m);
  return section_integrals(kern, plan, {x}, [&](std::size_t, double y) { return f(y) - fx; })[0];
}

std::vector<double> default_s_grid() {
  std::vector<double> s(21);
  for (int i = 0; i < 21; ++i) s[static_cast<std::size_t>(i)] = -2.0 + 0.2 * i;
  return s;
}

double alpha_nevai_functional(const CDKernel& kern, const TestFunction& f, double alpha,
                              double xstar, const std::vector<double>& s_grid, std::size_t m) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in [0, 1)");
  if (s_grid.empty()) throw PreconditionError("s grid must not be empty");
  const ScaledStatistic st{f, alpha, xstar};
  const TestFunction g = st.at_rank(kern.n());
  const double scale = std::pow(static_cast<double>(kern.n()), alpha);
  const Interval sup = kern.measure().support();
  std::vector<double> xs;
  for (double s : s_grid) {
    const double x = xstar + s / scale;
    if (!(x > sup.lo && x < sup.hi)) throw DomainError("alpha-Nevai evaluation point outside the support");
    xs.push_back(x);
  }
  const auto plan = plan_for(kern, g, m);
  const auto vals = section_integrals(kern, plan, xs, [&](std::size_t k, double y) {
    return f(s_grid[k]) - g(y);
  });
  double best = 0.0;
  for (double v : vals) best = std::max(best, std::abs(v));
  return best;
}

double concentration_mass(const CDKernel& kern, double xstar, double delta, std::size_t m) {
  if (!(delta > 0.0)) throw PreconditionError("delta must be positive");
  // Indicator of the open window as a step pair.
  TestFunction window;
  const double lo = xstar - delta, hi = xstar + delta;
  window.evaluator = [lo, hi](double y) { return (y > lo && y < hi) ? 1.0 : 0.0; };
  window.sup_norm = 1.0;
  window.discontinuities = {lo, hi};
  window.polynomial_degree = 0;
  window.support = Interval{lo, hi};
  const auto plan = plan_for(kern, window, m);
  return section_integrals(kern, plan, {xstar}, [&](std::size_t, double y) { return window(y); })[0];
}

double sine_kernel(double a, double b) {
  const double d = b - a;
  if (d == 0.0) return 1.0;
  return std::sin(std::numbers::pi * d) / (std::numbers::pi * d);
}

double universality_error(const CDKernel& kern, double x, Box box, std::size_t grid) {
  if (grid == 0) throw PreconditionError("grid must be positive");
  if (!(box.hi >= box.lo) || box.hi - box.lo > 5.0) throw PreconditionError("box side must be in [0, 5]");
  std::vector<double> pts(grid);
  for (std::size_t i = 0; i < grid; ++i)
    pts[i] = grid == 1 ? box.lo
                       : box.lo + (box.hi - box.lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
  double err = 0.0;
  for (double a : pts)
    for (double b : pts) err = std::max(err, std::abs(scaled_kernel(kern, x, a, b) - sine_kernel(a, b)));
  return err;
}

double totik_error(const CDKernel& kern, const std::function<double(double)>& rho,
                   Interval interval, std::size_t grid) {
  if (grid == 0 || !interval.bounded()) throw PreconditionError("need a bounded interval and grid >= 1");
  const double n = static_cast<double>(kern.n());
  double err = 0.0;
  for (std::size_t i = 0; i < grid; ++i) {
    const double x = grid == 1 ? interval.center()
                               : interval.lo + interval.length() * static_cast<double>(i) /
                                                   static_cast<double>(grid - 1);
    err = std::max(err, std::abs(kernel_tilde(kern, x, x) / n - rho(x)));
  }
  return err;
}

nlohmann::json DecayDiagnostic::to_json() const {
  return {{"n_grid", n_grid},         {"values", values},        {"is_decreasing", is_decreasing},
          {"fit_slope", fit_slope}, {"unverified_premise", unverified_premise}};
}

DecayDiagnostic make_decay_diagnostic(std::vector<std::size_t> n_grid, std::vector<double> values) {
  if (n_grid.size() != values.size()) throw PreconditionError("grid and values differ in length");
  DecayDiagnostic d;
  d.n_grid = std::move(n_grid);
  d.values = std::move(values);
  d.is_decreasing = strictly_decreasing(d.values);
  if (d.values.size() >= 2) {
    std::vector<double> nn(d.n_grid.begin(), d.n_grid.end());
    d.fit_slope = loglog_slope(nn, d.values);
  }
  return d;
}

DecayDiagnostic variance_decay_diagnostic(const MeasurePtr& measure, const TestFunction& f,
                                          double alpha, double xstar,
                                          const std::vector<std::size_t>& n_grid) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0, 1)");
  std::vector<double> values;
  for (std::size_t n : n_grid) {
    const CDKernel kern(measure, n);
    const double v = exact_scaled_variance(kern, ScaledStatistic{f, alpha, xstar});
    values.push_back(std::pow(static_cast<double>(n), alpha - 1.0) * v);
  }
  auto d = make_decay_diagnostic(n_grid, std::move(values));
  d.unverified_premise = measure->family().kind == Family::Discretized;
  return d;
}

}  // namespace ope
