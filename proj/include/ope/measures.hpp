#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ope {

/// Closed interval; either end may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static Interval line() { return {}; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  double length() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  double radius() const { return 0.5 * (hi - lo); }
};

/// Orthonormal three-term recurrence
///   b_{k+1} p_{k+1}(x) = (x - a_k) p_k(x) - b_k p_{k-1}(x),  p_{-1} = 0, p_0 = 1.
/// Stores a_0..a_{D-1} and b_1..b_D.
class RecurrenceCoefficients {
 public:
  RecurrenceCoefficients(std::vector<double> diag, std::vector<double> offdiag);

  std::size_t depth() const noexcept { return diag_.size(); }
  double a(std::size_t k) const { return diag_.at(k); }
  /// b_k for 1 <= k <= depth; b_0 is defined as 0.
  double b(std::size_t k) const { return k == 0 ? 0.0 : offdiag_.at(k - 1); }
  std::span<const double> diag() const noexcept { return diag_; }
  std::span<const double> offdiag() const noexcept { return offdiag_; }
  RecurrenceCoefficients truncated(std::size_t depth) const;

 private:
  std::vector<double> diag_;
  std::vector<double> offdiag_;
};

enum class Family { Chebyshev1st, Legendre, Jacobi, VaryingGaussian, Discretized };

/// Family tag with the parameters that select a member of the family.
struct FamilyTag {
  Family kind = Family::Chebyshev1st;
  double alpha = 0.0;     // Jacobi exponent on (1 - x)
  double beta = 0.0;      // Jacobi exponent on (1 + x)
  std::size_t scale = 1;  // VaryingGaussian: dmu_N = sqrt(N/2pi) exp(-N x^2/2) dx

  static FamilyTag chebyshev1st() { return {Family::Chebyshev1st}; }
  static FamilyTag legendre() { return {Family::Legendre}; }
  static FamilyTag jacobi(double a, double b) { return {Family::Jacobi, a, b}; }
  static FamilyTag varying_gaussian(std::size_t n) { return {Family::VaryingGaussian, 0.0, 0.0, n}; }
};

std::string family_name(Family f);

RecurrenceCoefficients classical_recurrence(const FamilyTag& family, std::size_t depth);

/// Discretized Stieltjes procedure for the normalized measure w(x)dx / int w.
/// Compact supports are discretized with an endpoint-clustered midpoint rule in the
/// angle variable (exact for Chebyshev-type endpoint behaviour), the whole line
/// with a Gauss-Hermite rule of `grid` nodes.
RecurrenceCoefficients stieltjes_recurrence(const std::function<double(double)>& weight,
                                            Interval support, std::size_t depth,
                                            std::size_t grid);

/// p_k(x) by forward recurrence.
double eval_orthonormal(const RecurrenceCoefficients& coeffs, std::size_t k, double x);
/// (p_0(x), ..., p_k(x)) in one pass.
std::vector<double> eval_orthonormal_prefix(const RecurrenceCoefficients& coeffs, std::size_t k,
                                            double x);

/// Prefix values with an overflow-safe common scale: p_j(x) = values[j] * exp(log_scale).
struct ScaledPrefix {
  std::vector<double> values;
  double log_scale = 0.0;
};
ScaledPrefix eval_orthonormal_prefix_scaled(const RecurrenceCoefficients& coeffs, std::size_t k,
                                            double x);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

/// m-point Gauss rule for the measure (Golub-Welsch nodes, Christoffel weights).
QuadratureRule gauss_quadrature(const RecurrenceCoefficients& coeffs, std::size_t m);

/// gamma_{n-1} / gamma_n, which equals b_n for the orthonormal recurrence.
double leading_ratio(const RecurrenceCoefficients& coeffs, std::size_t n);

/// Named weight for Discretized measures. Only the key is serialized.
struct WeightFunction {
  std::string key;
  std::function<double(double)> log_weight;  // -inf where the weight vanishes
  Interval natural_support;
};

const WeightFunction& weight_registry(const std::string& key);
std::vector<std::string> weight_registry_keys();
/// Adds or replaces a registry entry. Not synchronized with concurrent lookups.
void register_weight(WeightFunction weight);

class Measure;
using MeasurePtr = std::shared_ptr<const Measure>;

/// Absolutely continuous probability measure with its orthonormal polynomial system.
class Measure {
 public:
  static MeasurePtr chebyshev1st(std::size_t depth = 64);
  static MeasurePtr legendre(std::size_t depth = 64);
  static MeasurePtr jacobi(double alpha, double beta, std::size_t depth = 64);
  static MeasurePtr varying_gaussian(std::size_t n, std::size_t depth = 64);
  static MeasurePtr discretized(const std::string& weight_key, Interval support,
                                std::size_t grid, std::size_t depth = 64);
  static MeasurePtr from_tag(const FamilyTag& tag, std::size_t depth = 64);

  const FamilyTag& family() const noexcept { return tag_; }
  Interval support() const noexcept { return support_; }
  double total_mass() const noexcept { return 1.0; }
  std::size_t depth() const noexcept { return depth_; }
  const std::string& weight_key() const noexcept { return weight_key_; }
  std::size_t grid() const noexcept { return grid_; }

  /// Lebesgue density of the measure; zero off the support.
  double weight(double x) const;
  double log_weight(double x) const;
  /// log_weight with the distances x - lo and hi - x supplied separately, which
  /// keeps endpoint singularities accurate when x itself has rounded to an endpoint.
  double log_weight_local(double x, double from_lo, double from_hi) const;

  /// Recurrence coefficients to the requested depth; extends lazily past the
  /// precomputed depth.
  RecurrenceCoefficients recurrence(std::size_t depth) const;
  RecurrenceCoefficients recurrence() const { return recurrence(depth_); }

  /// Discrete approximation used by Discretized measures (empty otherwise).
  const QuadratureRule& discretization() const noexcept { return grid_rule_; }

  nlohmann::json to_json() const;
  static MeasurePtr from_json(const nlohmann::json& j);

 private:
  Measure() = default;

  FamilyTag tag_;
  Interval support_;
  std::size_t depth_ = 0;
  double log_norm_ = 0.0;  // log of the normalizing constant of the raw weight

  // Discretized only.
  std::string weight_key_;
  std::size_t grid_ = 0;
  std::function<double(double)> raw_log_weight_;
  QuadratureRule grid_rule_;
  mutable std::mutex cache_mutex_;
  // Level k holds depth_ << k coefficients, so values never depend on request order.
  mutable std::map<std::size_t, std::shared_ptr<const RecurrenceCoefficients>> cache_;
};

MeasurePtr varying_gaussian_measure(std::size_t n);

}  // namespace ope
