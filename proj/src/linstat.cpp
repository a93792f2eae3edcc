#include "ope/linstat.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "ope/errors.hpp"

namespace ope {

namespace {

// max |d/du exp(1 - 1/(1-u^2))| on (-1, 1), rounded up.
constexpr double kBumpSlope = 2.1704;

double horner(const std::vector<double>& c, double x) {
  double s = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
  return s;
}

std::vector<double> derivative(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  return d;
}

void trim(std::vector<double>& c) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
}

// Real roots of a polynomial from its companion matrix, polished by Newton steps.
std::vector<double> real_roots(std::vector<double> c) {
  trim(c);
  std::vector<double> roots;
  if (c.size() <= 1) return roots;
  if (c.size() == 2) return {-c[0] / c[1]};
  const auto d = static_cast<Eigen::Index>(c.size() - 1);
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < d; ++i) comp(i, d - 1) = -c[static_cast<std::size_t>(i)] / c.back();
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  const auto dc = derivative(c);
  for (Eigen::Index i = 0; i < d; ++i) {
    const std::complex<double> z = es.eigenvalues()[i];
    if (std::abs(z.imag()) > 1e-7 * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int it = 0; it < 4; ++it) {
      const double dp = horner(dc, x);
      if (dp == 0.0) break;
      x -= horner(c, x) / dp;
    }
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

double param(const nlohmann::json& p, const char* key, double def) {
  if (!p.contains(key) || p.at(key).is_null()) return def;
  if (!p.at(key).is_number()) throw ConfigurationError(std::string("parameter '") + key + "' must be a number");
  return p.at(key).get<double>();
}

TestFunction bump(double c, double w, double h) {
  if (!(w > 0.0)) throw ConfigurationError("bump width must be positive");
  TestFunction f;
  f.evaluator = [c, w, h](double x) {
    const double u = (x - c) / w;
    if (!(std::abs(u) < 1.0)) return 0.0;
    return h * std::exp(1.0 - 1.0 / ((1.0 - u) * (1.0 + u)));
  };
  f.sup_norm = std::abs(h);
  f.lipschitz = kBumpSlope * std::abs(h) / w;
  f.support = Interval{c - w, c + w};
  return f;
}

TestFunction tent(double c, double w, double h) {
  if (!(w > 0.0)) throw ConfigurationError("tent width must be positive");
  TestFunction f;
  f.evaluator = [c, w, h](double x) { return h * std::max(0.0, 1.0 - std::abs(x - c) / w); };
  f.sup_norm = std::abs(h);
  f.lipschitz = std::abs(h) / w;
  f.support = Interval{c - w, c + w};
  f.kinks = {c - w, c, c + w};
  f.polynomial_degree = 1;
  return f;
}

TestFunction step(double at, double lo, double hi) {
  TestFunction f;
  f.evaluator = [at, lo, hi](double x) { return x < at ? lo : hi; };
  f.sup_norm = std::max(std::abs(lo), std::abs(hi));
  if (lo == hi)
    f.lipschitz = 0.0;
  else
    f.discontinuities = {at};
  f.polynomial_degree = 0;
  return f;
}

TestFunction cosine(double freq, double phase, double amp) {
  TestFunction f;
  f.evaluator = [freq, phase, amp](double x) { return amp * std::cos(freq * x + phase); };
  f.sup_norm = std::abs(amp);
  f.lipschitz = std::abs(amp * freq);
  return f;
}

std::vector<double> coefficients(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ConfigurationError("polynomial coefficients must be a nonempty array");
  std::vector<double> c;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigurationError("polynomial coefficients must be numbers");
    c.push_back(v.get<double>());
  }
  return c;
}

}  // namespace

std::vector<double> TestFunction::breakpoints() const {
  std::vector<double> b = discontinuities;
  b.insert(b.end(), kinks.begin(), kinks.end());
  if (support) {
    if (std::isfinite(support->lo)) b.push_back(support->lo);
    if (std::isfinite(support->hi)) b.push_back(support->hi);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

TestFunction polynomial_function(std::vector<double> coeffs, std::optional<double> clip) {
  trim(coeffs);
  if (coeffs.empty()) coeffs = {0.0};
  if (clip && !(*clip > 0.0)) throw ConfigurationError("clip level must be positive");
  TestFunction f;
  const int degree = static_cast<int>(coeffs.size()) - 1;
  f.polynomial_degree = degree;
  if (degree == 0) {
    const double c0 = clip ? std::clamp(coeffs[0], -*clip, *clip) : coeffs[0];
    f.evaluator = [c0](double) { return c0; };
    f.sup_norm = std::abs(c0);
    f.lipschitz = 0.0;
    return f;
  }
  if (!clip) {
    f.evaluator = [coeffs](double x) { return horner(coeffs, x); };
    if (degree == 1) f.lipschitz = std::abs(coeffs[1]);
    return f;
  }
  const double s = *clip;
  f.evaluator = [coeffs, s](double x) { return std::clamp(horner(coeffs, x), -s, s); };
  f.sup_norm = s;
  for (double level : {s, -s}) {
    auto shifted = coeffs;
    shifted[0] -= level;
    for (double r : real_roots(shifted)) f.kinks.push_back(r);
  }
  std::sort(f.kinks.begin(), f.kinks.end());
  // On each piece where the clip is inactive, |p'| peaks at a piece end or at a
  // critical point of p'.
  const auto d1 = derivative(coeffs);
  std::vector<double> candidates = f.kinks;
  for (double r : real_roots(derivative(d1))) candidates.push_back(r);
  double lip = 0.0;
  for (double x : candidates)
    if (std::abs(horner(coeffs, x)) <= s * (1.0 + 1e-12)) lip = std::max(lip, std::abs(horner(d1, x)));
  f.lipschitz = lip;
  return f;
}

std::vector<std::string> test_function_keys() {
  return {"bump", "clipped_polynomial", "constant", "cosine", "identity",
          "polynomial", "square", "step", "tent"};
}

TestFunction make_test_function(const std::string& key, const nlohmann::json& params) {
  const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
  if (!p.is_object()) throw ConfigurationError("test function params must be an object");
  std::optional<double> clip;
  if (p.contains("sup_norm") && !p.at("sup_norm").is_null()) clip = param(p, "sup_norm", 1.0);
  TestFunction f;
  if (key == "identity") {
    f = polynomial_function({0.0, 1.0}, clip);
  } else if (key == "square") {
    f = polynomial_function({0.0, 0.0, 1.0}, clip);
  } else if (key == "polynomial" || key == "clipped_polynomial") {
    if (!p.contains("coeffs")) throw ConfigurationError("polynomial needs 'coeffs'");
    if (key == "clipped_polynomial" && !clip)
      throw ConfigurationError("clipped_polynomial needs 'sup_norm'");
    f = polynomial_function(coefficients(p.at("coeffs")), clip);
  } else if (key == "constant") {
    f = polynomial_function({param(p, "c", 1.0)}, clip);
  } else if (key == "bump") {
    f = bump(param(p, "center", 0.0), param(p, "width", 1.0), param(p, "height", 1.0));
  } else if (key == "tent") {
    f = tent(param(p, "center", 0.0), param(p, "width", 1.0), param(p, "height", 1.0));
  } else if (key == "step") {
    f = step(param(p, "at", 0.0), param(p, "lo", 0.0), param(p, "hi", 1.0));
  } else if (key == "cosine") {
    f = cosine(param(p, "freq", 1.0), param(p, "phase", 0.0), param(p, "amp", 1.0));
  } else {
    throw ConfigurationError("unknown test function key '" + key + "'");
  }
  f.spec = {{"key", key}, {"params", p}};
  return f;
}

TestFunction ScaledStatistic::at_rank(std::size_t n) const {
  if (alpha == 0.0 && xstar == 0.0) return f;
  const double s = std::pow(static_cast<double>(n), alpha);
  const double xs = xstar;
  TestFunction g = f;
  auto base = f.evaluator;
  g.evaluator = [base, s, xs](double x) { return base(s * (x - xs)); };
  auto map = [s, xs](double b) { return xs + b / s; };
  for (double& b : g.discontinuities) b = map(b);
  for (double& b : g.kinks) b = map(b);
  if (g.support) g.support = Interval{map(g.support->lo), map(g.support->hi)};
  if (g.lipschitz) g.lipschitz = *g.lipschitz * s;
  return g;
}

nlohmann::json ScaledStatistic::to_json() const {
  nlohmann::json j;
  j["f"] = f.spec;
  j["sup_norm"] = std::isfinite(f.sup_norm) ? nlohmann::json(f.sup_norm) : nlohmann::json(nullptr);
  j["lipschitz"] = f.lipschitz ? nlohmann::json(*f.lipschitz) : nlohmann::json(nullptr);
  j["alpha"] = alpha;
  j["xstar"] = xstar;
  return j;
}

ScaledStatistic ScaledStatistic::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("f")) throw ConfigurationError("statistic needs an 'f' entry");
  ScaledStatistic s;
  nlohmann::json params = j.value("params", nlohmann::json::object());
  const bool has_sup = j.contains("sup_norm") && !j.at("sup_norm").is_null();
  if (has_sup && !j.at("sup_norm").is_number()) throw ConfigurationError("sup_norm must be a number");
  const auto& fj = j.at("f");
  std::string key;
  if (fj.is_string()) {
    key = fj.get<std::string>();
  } else if (fj.is_array()) {
    key = has_sup ? "clipped_polynomial" : "polynomial";
    params["coeffs"] = fj;
  } else if (fj.is_object()) {
    key = fj.value("key", std::string());
    params = fj.value("params", nlohmann::json::object());
  } else {
    throw ConfigurationError("'f' must be a registry key, coefficient array or object");
  }
  const bool clippable = key == "identity" || key == "square" || key == "polynomial" ||
                         key == "clipped_polynomial" || key == "constant";
  if (has_sup && clippable) params["sup_norm"] = j.at("sup_norm");
  s.f = make_test_function(key, params);
  if (has_sup && !clippable) {
    const double declared = j.at("sup_norm").get<double>();
    if (declared < s.f.sup_norm * (1.0 - 1e-12))
      throw ConfigurationError("declared sup_norm is below the function's actual sup norm");
    s.f.sup_norm = declared;
  }
  if (j.contains("lipschitz") && !j.at("lipschitz").is_null()) {
    if (!j.at("lipschitz").is_number()) throw ConfigurationError("lipschitz must be a number or null");
    const double declared = j.at("lipschitz").get<double>();
    if (declared < 0.0 || (s.f.lipschitz && declared < *s.f.lipschitz * (1.0 - 1e-12)))
      throw ConfigurationError("declared lipschitz constant is below the function's own");
    s.f.lipschitz = declared;
  }
  s.alpha = j.value("alpha", 0.0);
  s.xstar = j.value("xstar", 0.0);
  if (!(s.alpha >= 0.0 && s.alpha < 1.0)) throw ConfigurationError("alpha must lie in [0, 1)");
  if (!std::isfinite(s.xstar)) throw ConfigurationError("xstar must be finite");
  return s;
}

double eval_statistic(const SampleConfiguration& sample, const TestFunction& f) {
  double s = 0.0;
  for (double x : sample.points) s += f(x);
  return s;
}

double eval_scaled_statistic(const SampleConfiguration& sample, const ScaledStatistic& s,
                             std::size_t n) {
  if (n != sample.points.size()) throw PreconditionError("n must equal the sample size");
  const double scale = std::pow(static_cast<double>(n), s.alpha);
  double acc = 0.0;
  for (double x : sample.points) acc += s.f(scale * (x - s.xstar));
  return acc;
}

NodePlan plan_for(const CDKernel& kern, const TestFunction& f, std::size_t m,
                  const std::vector<double>& extra_breakpoints) {
  const std::size_t n = kern.n();
  if (m != 0 && m < n) throw PreconditionError("quadrature size must be at least the kernel rank");
  NodePlan plan;
  plan.m = m == 0 ? 2 * n + 64 : m;
  plan.breakpoints = f.breakpoints();
  plan.breakpoints.insert(plan.breakpoints.end(), extra_breakpoints.begin(), extra_breakpoints.end());
  const Interval s = kern.measure().support();
  bool interior_break = false;
  for (double b : plan.breakpoints)
    if (b > s.lo && b < s.hi) interior_break = true;
  if (f.polynomial_degree && !interior_break) {
    plan.gauss = true;
    plan.m = std::max(plan.m, n + static_cast<std::size_t>(*f.polynomial_degree) + 1);
    return plan;
  }
  if (f.support && f.support->bounded()) plan.zoom = f.support;
  return plan;
}

double exact_mean(const CDKernel& kern, const TestFunction& f, std::size_t m) {
  const auto plan = plan_for(kern, f, m);
  return converge(kern, plan, [&f](const KernelNodes& nodes, double& scale) {
    const Eigen::VectorXd fv = nodes.sample(f.evaluator);
    const double v = fv.dot(nodes.diagonal());
    scale = std::abs(v) + 1e-4 * fv.cwiseAbs().dot(nodes.diagonal());
    return std::vector<double>{v};
  })[0];
}

double exact_variance(const CDKernel& kern, const TestFunction& f, std::size_t m) {
  const auto plan = plan_for(kern, f, m);
  const auto r = converge(kern, plan, [&f](const KernelNodes& nodes, double& scale) {
    const Eigen::VectorXd fv = nodes.sample(f.evaluator);
    const double sym = nodes.symmetric_variance(fv);
    const double two = nodes.two_term_variance(fv);
    const double mass = fv.cwiseAbs2().dot(nodes.diagonal());
    scale = std::abs(sym) + 1e-4 * mass;
    return std::vector<double>{sym, two, mass};
  });
  const double sym = r[0], two = r[1], mass = r[2];
  if (std::abs(sym - two) > 1e-8 * std::max(std::abs(sym), std::abs(two)) + 1e-11 * mass)
    throw ConsistencyError("variance representations disagree: " + std::to_string(sym) + " vs " +
                           std::to_string(two));
  return sym;
}

double exact_scaled_variance(const CDKernel& kern, const ScaledStatistic& s, std::size_t m) {
  return exact_variance(kern, s.at_rank(kern.n()), m);
}

std::vector<double> log_mgf_series(const CDKernel& kern, const TestFunction& f,
                                   const std::vector<double>& ts, std::size_t m) {
  for (double t : ts)
    if (!std::isfinite(t)) throw PreconditionError("mgf argument must be finite");
  const auto plan = plan_for(kern, f, m);
  return converge(kern, plan, [&](const KernelNodes& nodes, double& scale) {
    const Eigen::VectorXd fv = nodes.sample(f.evaluator);
    const double mag = fv.cwiseAbs().dot(nodes.diagonal());
    std::vector<double> out;
    scale = 0.0;
    for (double t : ts) {
      if (t == 0.0) {
        out.push_back(0.0);
        continue;
      }
      const Eigen::VectorXd g = (t * fv.array()).unaryExpr([](double v) { return std::expm1(v); });
      const auto [ld, sign] = nodes.log_det(g);
      if (sign <= 0 || std::isnan(ld))
        throw NumericalError("Fredholm determinant is not positive at t = " + std::to_string(t));
      out.push_back(ld);
      scale = std::max(scale, std::abs(ld) + 1e-4 * std::abs(t) * mag);
    }
    if (scale == 0.0) scale = 1.0;
    return out;
  });
}

MgfValue mgf(const CDKernel& kern, const TestFunction& f, double t, std::size_t m) {
  MgfValue v;
  if (t == 0.0) return v;
  v.log_mgf = log_mgf_series(kern, f, {t}, m)[0];
  v.mgf = std::exp(v.log_mgf);
  v.overflow = !std::isfinite(v.mgf) || v.mgf == 0.0;
  return v;
}

double commutator_hs_norm_sq(const CDKernel& kern, const TestFunction& f, std::size_t m) {
  return 2.0 * exact_variance(kern, f, m);
}

}  // namespace ope
