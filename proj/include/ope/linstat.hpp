#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ope/kernel.hpp"
#include "ope/quadrature.hpp"
#include "ope/sampler.hpp"

namespace ope {

/// Bounded test function with the metadata the quadrature and the bounds need.
struct TestFunction {
  std::function<double(double)> evaluator;
  double sup_norm = std::numeric_limits<double>::infinity();
  std::optional<double> lipschitz;
  std::optional<Interval> support;
  std::vector<double> discontinuities;
  std::vector<double> kinks;
  /// Set when f is a polynomial of at most this degree between consecutive
  /// breakpoints.
  std::optional<int> polynomial_degree;
  nlohmann::json spec;

  double operator()(double x) const { return evaluator(x); }
  /// Discontinuities, kinks and support endpoints, sorted.
  std::vector<double> breakpoints() const;
};

/// Registry keys: identity, square, polynomial, clipped_polynomial, constant,
/// bump, tent, step, cosine.
TestFunction make_test_function(const std::string& key,
                                const nlohmann::json& params = nlohmann::json::object());
std::vector<std::string> test_function_keys();
/// p(x) = sum c_k x^k, optionally clipped to [-clip, clip].
TestFunction polynomial_function(std::vector<double> coeffs, std::optional<double> clip = {});

/// f(n^alpha (x - xstar)).
struct ScaledStatistic {
  TestFunction f;
  double alpha = 0.0;
  double xstar = 0.0;

  TestFunction at_rank(std::size_t n) const;
  nlohmann::json to_json() const;
  /// {"f": key | coefficients | {"key","params"}, "params", "sup_norm", "lipschitz", "alpha", "xstar"}.
  static ScaledStatistic from_json(const nlohmann::json& j);
};

double eval_statistic(const SampleConfiguration& sample, const TestFunction& f);
double eval_scaled_statistic(const SampleConfiguration& sample, const ScaledStatistic& s,
                             std::size_t n);

/// Quadrature route for integrals of f against the kernel: one exact Gauss pass
/// when f is polynomial on the support, refined panels otherwise. m = 0 selects
/// the default 2n + 64.
NodePlan plan_for(const CDKernel& kern, const TestFunction& f, std::size_t m,
                  const std::vector<double>& extra_breakpoints = {});

double exact_mean(const CDKernel& kern, const TestFunction& f, std::size_t m = 0);

/// Symmetrized double integral, cross-checked against the two-term form.
double exact_variance(const CDKernel& kern, const TestFunction& f, std::size_t m = 0);
double exact_scaled_variance(const CDKernel& kern, const ScaledStatistic& s, std::size_t m = 0);

struct MgfValue {
  double log_mgf = 0.0;
  double mgf = 1.0;
  bool overflow = false;  // mgf not representable; use log_mgf
};
MgfValue mgf(const CDKernel& kern, const TestFunction& f, double t, std::size_t m = 0);
/// log E exp(t X_f) for several t on shared node sets.
std::vector<double> log_mgf_series(const CDKernel& kern, const TestFunction& f,
                                   const std::vector<double>& ts, std::size_t m = 0);

/// ||[f, K_n]||_HS^2 = 2 Var X_f.
double commutator_hs_norm_sq(const CDKernel& kern, const TestFunction& f, std::size_t m = 0);

}  // namespace ope
