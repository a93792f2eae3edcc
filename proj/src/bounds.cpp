#include "ope/bounds.hpp"

#include <cmath>
#include <numbers>

#include "ope/errors.hpp"

namespace ope {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw PreconditionError(std::string(what) + " must be positive and finite");
}

void require_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in [0, 1)");
}

BoundReport make(BoundName name, double eps, double exponent, Regime regime, nlohmann::json inputs) {
  BoundReport r;
  r.name = name;
  r.epsilon = eps;
  r.log_rhs = std::log(2.0) + exponent;
  r.rhs = 2.0 * std::exp(exponent);
  r.regime = regime;
  r.inputs = std::move(inputs);
  r.A = constant_A().value;
  return r;
}

// -eps * min(g, e) with the regime of the smaller rate.
BoundReport two_rate(BoundName name, double eps, double g, double e, nlohmann::json inputs) {
  const bool gaussian = g <= e;
  return make(name, eps, -eps * (gaussian ? g : e), gaussian ? Regime::Gaussian : Regime::Exponential,
              std::move(inputs));
}

}  // namespace

const ConstantA& constant_A() {
  static const ConstantA a = [] {
    const long double e = std::numbers::e_v<long double>;
    const long double q = e / 3.0L;
    auto term = [q](std::size_t m) {
      return std::pow(q, static_cast<long double>(m)) *
             std::pow(static_cast<long double>(m) + 2.0L, 1.5L);
    };
    // Term ratios q ((m+3)/(m+2))^{3/2} decrease in m, so once below one the
    // tail after M is at most t_{M+1} / (1 - r_{M+1}).
    long double sum = 0.0L;
    std::size_t m = 0;
    long double tail = 0.0L;
    for (;; ++m) {
      sum += term(m);
      const long double r = q * std::pow((static_cast<long double>(m) + 4.0L) / (static_cast<long double>(m) + 3.0L), 1.5L);
      if (r < 1.0L) {
        tail = term(m + 1) / (1.0L - r);
        if (tail <= 1e-13L * sum) break;
      }
    }
    const long double pref = 2.0L * e * e;
    return ConstantA{static_cast<double>(pref * sum), m + 1, static_cast<double>(pref * tail)};
  }();
  return a;
}

std::string bound_label(BoundName b) {
  switch (b) {
    case BoundName::Global: return "global";
    case BoundName::Normalized: return "normalized";
    case BoundName::General: return "general";
    case BoundName::Rank: return "rank";
    case BoundName::Lipschitz: return "lipschitz";
    case BoundName::Meso: return "meso";
    case BoundName::MesoLipschitz: return "meso_lipschitz";
    case BoundName::Local: return "local";
  }
  return "unknown";
}

std::string regime_label(Regime r) { return r == Regime::Gaussian ? "gaussian" : "exponential"; }

nlohmann::json BoundReport::to_json() const {
  return {{"bound", bound_label(name)}, {"epsilon", epsilon},      {"rhs", rhs},
          {"log_rhs", log_rhs},        {"regime", regime_label(regime)}, {"inputs", inputs},
          {"A", A},                    {"asymptotic_only", asymptotic_only}};
}

BoundReport bound_general(double var, double sup_norm, double eps) {
  require_positive(sup_norm, "sup_norm");
  require_positive(eps, "epsilon");
  if (!(var >= 0.0)) throw PreconditionError("variance must be nonnegative");
  const double A = constant_A().value;
  nlohmann::json in{{"variance", var}, {"sup_norm", sup_norm}};
  const double threshold = 2.0 * A * var / (3.0 * sup_norm);
  if (var > 0.0 && eps < threshold)
    return make(BoundName::General, eps, -eps * eps / (4.0 * A * var), Regime::Gaussian, in);
  return make(BoundName::General, eps, -eps / (6.0 * sup_norm), Regime::Exponential, in);
}

BoundReport bound_global(std::size_t n, double sup_norm, double eps) {
  if (n == 0) throw PreconditionError("n must be at least 1");
  require_positive(sup_norm, "sup_norm");
  require_positive(eps, "epsilon");
  const double A = constant_A().value;
  const double nn = static_cast<double>(n);
  return two_rate(BoundName::Global, eps, nn * eps / (8.0 * A * sup_norm * sup_norm),
                  nn / (6.0 * sup_norm), {{"n", n}, {"sup_norm", sup_norm}});
}

BoundReport bound_normalized(std::size_t n, double N, double sup_norm, double eps) {
  if (n == 0) throw PreconditionError("n must be at least 1");
  require_positive(N, "normalization N");
  require_positive(sup_norm, "sup_norm");
  require_positive(eps, "epsilon");
  const double A = constant_A().value;
  const double nn = static_cast<double>(n);
  return two_rate(BoundName::Normalized, eps, eps * N * N / (8.0 * A * nn * sup_norm * sup_norm),
                  N / (6.0 * sup_norm), {{"n", n}, {"N", N}, {"sup_norm", sup_norm}});
}

BoundReport bound_rank(std::size_t r, double sup_norm, double eps) {
  if (r == 0) throw PreconditionError("rank must be at least 1");
  require_positive(sup_norm, "sup_norm");
  require_positive(eps, "epsilon");
  const double A = constant_A().value;
  const double rr = static_cast<double>(r);
  nlohmann::json in{{"rank", r}, {"sup_norm", sup_norm}};
  if (eps < 4.0 * A * rr * sup_norm / 3.0)
    return make(BoundName::Rank, eps, -eps * eps / (8.0 * A * rr * sup_norm * sup_norm),
                Regime::Gaussian, in);
  return make(BoundName::Rank, eps, -eps / (6.0 * sup_norm), Regime::Exponential, in);
}

BoundReport bound_lipschitz(double lip, double sup_norm, double eps, double c) {
  require_positive(lip, "lipschitz constant");
  require_positive(sup_norm, "sup_norm");
  require_positive(eps, "epsilon");
  require_positive(c, "ratio bound c");
  const double A = constant_A().value;
  return two_rate(BoundName::Lipschitz, eps, eps / (4.0 * A * lip * lip * c),
                  1.0 / (6.0 * sup_norm), {{"lipschitz", lip}, {"sup_norm", sup_norm}, {"c", c}});
}

BoundReport bound_meso(std::size_t n, double alpha, double sup_norm, double eps,
                       std::optional<double> lipschitz, double c) {
  if (n == 0) throw PreconditionError("n must be at least 1");
  require_alpha(alpha);
  require_positive(sup_norm, "sup_norm");
  require_positive(eps, "epsilon");
  const double A = constant_A().value;
  const double nn = static_cast<double>(n);
  if (lipschitz) {
    require_positive(*lipschitz, "lipschitz constant");
    require_positive(c, "ratio bound c");
    const double L = *lipschitz;
    auto r = two_rate(BoundName::MesoLipschitz, eps, eps / (2.0 * A * L * L * c),
                      std::pow(nn, alpha) / (6.0 * sup_norm),
                      {{"n", n}, {"alpha", alpha}, {"sup_norm", sup_norm}, {"lipschitz", L}, {"c", c}});
    r.asymptotic_only = true;
    return r;
  }
  return two_rate(BoundName::Meso, eps,
                  eps * std::pow(nn, 1.0 - 2.0 * alpha) / (8.0 * A * sup_norm * sup_norm),
                  std::pow(nn, 1.0 - alpha) / (6.0 * sup_norm),
                  {{"n", n}, {"alpha", alpha}, {"sup_norm", sup_norm}});
}

BoundReport bound_local(std::size_t n, double alpha, double sup_norm, double eps) {
  if (n == 0) throw PreconditionError("n must be at least 1");
  require_alpha(alpha);
  require_positive(sup_norm, "sup_norm");
  require_positive(eps, "epsilon");
  auto r = make(BoundName::Local, eps,
                -eps * std::pow(static_cast<double>(n), 1.0 - alpha) / (6.0 * sup_norm),
                Regime::Exponential, {{"n", n}, {"alpha", alpha}, {"sup_norm", sup_norm}});
  r.asymptotic_only = true;
  return r;
}

double recurrence_ratio_bound(const RecurrenceCoefficients& coeffs, std::size_t n) {
  if (n == 0 || n > coeffs.depth()) throw PreconditionError("need 1 <= n <= depth");
  double c = 0.0;
  for (std::size_t k = 1; k <= n; ++k) c = std::max(c, coeffs.b(k) * coeffs.b(k));
  return c;
}

MgfInequalityResult mgf_inequality_check(const CDKernel& kern, const TestFunction& f, double t, std::size_t m) {
  require_positive(f.sup_norm, "sup_norm");
  if (!(std::abs(t) <= (1.0 + 1e-12) / (3.0 * f.sup_norm)))
    throw PreconditionError("|t| must not exceed 1/(3 ||f||)");
  MgfInequalityResult res;
  if (t == 0.0) return res;
  const auto plan = plan_for(kern, f, m);
  const auto r = converge(kern, plan, [&](const KernelNodes& nodes, double& scale) {
    const Eigen::VectorXd fv = nodes.sample(f.evaluator);
    const Eigen::VectorXd g = (t * fv.array()).unaryExpr([](double v) { return std::expm1(v); });
    const auto [ld, sign] = nodes.log_det(g);
    if (sign <= 0) throw NumericalError("Fredholm determinant is not positive");
    const double mean = fv.dot(nodes.diagonal());
    const double var = nodes.symmetric_variance(fv);
    const double mag = fv.cwiseAbs().dot(nodes.diagonal());
    scale = std::abs(ld - t * mean) + 1e-4 * std::abs(t) * mag + std::abs(var);
    return std::vector<double>{ld - t * mean, var};
  });
  res.lhs = std::abs(r[0]);
  res.rhs = 0.5 * constant_A().value * t * t * (2.0 * r[1]);
  res.holds = res.lhs <= res.rhs + 1e-10;
  return res;
}

TailEstimate tail_probability_mc(const CDKernel& kern, const TestFunction& f, double eps,
                                 std::size_t replicas, const RngStream& rng,
                                 double normalization, unsigned threads) {
  if (replicas < 1000) throw PreconditionError("tail estimation needs at least 1000 replicas");
  require_positive(eps, "epsilon");
  require_positive(normalization, "normalization");
  require_positive(f.sup_norm, "sup_norm");
  TailEstimate out;
  out.replicas = replicas;
  out.exact_mean = exact_mean(kern, f);
  const OpeSampler sampler(kern);
  std::vector<unsigned char> hit(replicas, 0);
  parallel_for(replicas, threads, [&](std::size_t i) {
    RngStream s = rng.substream(i);
    const auto cfg = sampler.sample(s);
    hit[i] = std::abs(eval_statistic(cfg, f) - out.exact_mean) / normalization >= eps;
  });
  std::size_t k = 0;
  for (auto h : hit) k += h;
  out.interval = wilson_interval(k, replicas);
  out.empirical = out.interval.estimate;
  const std::size_t n = kern.n();
  out.bound = normalization == static_cast<double>(n) ? bound_global(n, f.sup_norm, eps)
                                                      : bound_normalized(n, normalization, f.sup_norm, eps);
  out.dominated = out.interval.hi <= out.bound.rhs;
  return out;
}

}  // namespace ope
