#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include <json.hpp>

#include "ope/linstat.hpp"
#include "ope/rng.hpp"
#include "ope/statistics.hpp"

namespace ope {

struct ConstantA {
  double value = 0.0;  // 2e^2 sum_{m<=M} (e/3)^m (m+2)^{3/2}
  std::size_t terms_used = 0;
  double tail_bound = 0.0;  // certified bound on the omitted tail
};

/// Computed once and cached.
const ConstantA& constant_A();

enum class BoundName {
  Global,
  Normalized,
  General,
  Rank,
  Lipschitz,
  Meso,
  MesoLipschitz,
  Local
};
enum class Regime { Gaussian, Exponential };

std::string bound_label(BoundName b);
std::string regime_label(Regime r);

struct BoundReport {
  BoundName name = BoundName::General;
  double epsilon = 0.0;
  double rhs = 2.0;
  /// log(rhs); stays finite when rhs underflows to zero.
  double log_rhs = std::log(2.0);
  Regime regime = Regime::Gaussian;
  nlohmann::json inputs;
  double A = 0.0;
  /// The bound is stated only for n large enough, with no explicit threshold.
  bool asymptotic_only = false;

  nlohmann::json to_json() const;
};

BoundReport bound_general(double var, double sup_norm, double eps);
BoundReport bound_global(std::size_t n, double sup_norm, double eps);
BoundReport bound_normalized(std::size_t n, double N, double sup_norm, double eps);
/// r = rank of the kernel.
BoundReport bound_rank(std::size_t r, double sup_norm, double eps);
/// c bounds (gamma_{n-1}/gamma_n)^2 = b_n^2.
BoundReport bound_lipschitz(double lip, double sup_norm, double eps, double c = 1.0);
BoundReport bound_meso(std::size_t n, double alpha, double sup_norm, double eps,
                       std::optional<double> lipschitz = std::nullopt, double c = 1.0);
BoundReport bound_local(std::size_t n, double alpha, double sup_norm, double eps);

/// max_{1<=k<=n} b_k^2, the default c for the Lipschitz bounds.
double recurrence_ratio_bound(const RecurrenceCoefficients& coeffs, std::size_t n);

struct MgfInequalityResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};
/// |log det(1 + (e^{tf} - 1)K) - t Tr(fK)| <= A t^2 ||[f,K]||^2 / 2, |t| <= 1/(3||f||).
MgfInequalityResult mgf_inequality_check(const CDKernel& kern, const TestFunction& f, double t,
                            std::size_t m = 0);

struct TailEstimate {
  double empirical = 0.0;
  WilsonInterval interval;
  BoundReport bound;
  bool dominated = false;  // Wilson upper limit <= bound rhs
  double exact_mean = 0.0;
  std::size_t replicas = 0;
};
/// Monte Carlo frequency of |X_f - E X_f| / normalization >= eps against the
/// normalized global bound. Replica i draws from rng.substream(i).
TailEstimate tail_probability_mc(const CDKernel& kern, const TestFunction& f, double eps,
                                 std::size_t replicas, const RngStream& rng,
                                 double normalization, unsigned threads = 1);

}  // namespace ope
