#include "ope/measures.hpp"

#include <algorithm>
#include <map>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "ope/errors.hpp"

namespace ope {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRescaleThreshold = 1e150;

double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Normalized discrete measure approximating w(x)dx / Z on `support`.
struct Discretization {
  QuadratureRule rule;  // weights sum to one
  double log_mass = 0.0;
};

// u - sin(u) without cancellation for small u.
double u_minus_sin(double u) {
  if (u > 1.0) return u - std::sin(u);
  const double u2 = u * u;
  double term = u * u2 / 6.0, sum = 0.0;
  for (int k = 1; k < 10; ++k) {
    sum += term;
    term *= -u2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
  }
  return sum;
}

Discretization discretize(const std::function<double(double)>& log_w, Interval support,
                          std::size_t grid) {
  std::vector<double> nodes(grid), logw(grid);
  if (support.bounded()) {
    // Midpoint rule in t after x = c + r cos(theta(t)), theta = pi (t - sin(2 pi t) / (2 pi)).
    // The map flattens the integrand at both ends, so weights that stay finite at
    // an endpoint converge like M^-6 instead of the M^-2 of plain Gauss-Chebyshev,
    // and 1/sqrt endpoint singularities are integrated exactly.
    //   int g dx = r / M * sum g(x_i) sin(theta_i) theta'(t_i),  theta' = 2 pi sin^2(pi t).
    const double c = support.center(), r = support.radius();
    const double base = std::log(r / static_cast<double>(grid));
    const double inner_lo = std::nextafter(support.lo, support.hi);
    const double inner_hi = std::nextafter(support.hi, support.lo);
    for (std::size_t i = 0; i < grid; ++i) {
      const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
      const double theta = t <= 0.5 ? 0.5 * u_minus_sin(2.0 * std::numbers::pi * t)
                                    : std::numbers::pi - 0.5 * u_minus_sin(2.0 * std::numbers::pi * (1.0 - t));
      const double sp = std::sin(std::numbers::pi * t);
      // Nodes that round onto an endpoint are moved one ulp inside; they carry
      // negligible mass but the weight may be singular exactly at the end.
      nodes[i] = std::clamp(c + r * std::cos(theta), inner_lo, inner_hi);
      logw[i] = base + std::log(std::sin(theta)) + std::log(2.0 * std::numbers::pi * sp * sp) + log_w(nodes[i]);
    }
  } else {
    // Gauss-Hermite for the standard normal density phi:
    //   int g dx = sum lambda_i g(x_i) / phi(x_i).
    const auto hermite = classical_recurrence(FamilyTag::varying_gaussian(1), grid);
    const auto gh = gauss_quadrature(hermite, grid);
    const double log_sqrt_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < grid; ++i) {
      nodes[i] = gh.nodes[i];
      const double lw = log_w(nodes[i]);
      logw[i] = (gh.weights[i] > 0.0 && lw > kNegInf)
                    ? std::log(gh.weights[i]) + 0.5 * nodes[i] * nodes[i] + log_sqrt_2pi + lw
                    : kNegInf;
    }
  }
  for (double& v : logw)
    if (std::isnan(v)) v = kNegInf;
  Discretization d;
  d.log_mass = log_sum_exp(logw);
  if (!std::isfinite(d.log_mass))
    throw DegenerateMeasureError("weight integrates to zero (or diverges) on the support");
  d.rule.nodes = std::move(nodes);
  d.rule.weights.resize(grid);
  for (std::size_t i = 0; i < grid; ++i) d.rule.weights[i] = std::exp(logw[i] - d.log_mass);
  // Ascending node order keeps inverse-CDF sampling simple.
  std::vector<std::size_t> order(grid);
  for (std::size_t i = 0; i < grid; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return d.rule.nodes[a] < d.rule.nodes[b]; });
  QuadratureRule sorted;
  for (std::size_t i : order) {
    sorted.nodes.push_back(d.rule.nodes[i]);
    sorted.weights.push_back(d.rule.weights[i]);
  }
  d.rule = std::move(sorted);
  return d;
}

RecurrenceCoefficients stieltjes_discrete(const QuadratureRule& rule, std::size_t depth) {
  const std::size_t m = rule.size();
  if (depth >= m)
    throw PreconditionError("Stieltjes depth must be smaller than the discretization size");
  std::vector<double> diag(depth), offdiag(depth);
  std::vector<double> prev(m, 0.0), cur(m, 1.0), next(m);
  double b_prev = 0.0;
  for (std::size_t k = 0; k < depth; ++k) {
    double a = 0.0;
    for (std::size_t i = 0; i < m; ++i) a += rule.weights[i] * rule.nodes[i] * cur[i] * cur[i];
    double b2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      next[i] = (rule.nodes[i] - a) * cur[i] - b_prev * prev[i];
      b2 += rule.weights[i] * next[i] * next[i];
    }
    if (!(b2 > 1e-300) || !std::isfinite(b2))
      throw InstabilityError("Stieltjes procedure lost positivity at b_" + std::to_string(k + 1),
                             k + 1);
    const double b = std::sqrt(b2);
    for (std::size_t i = 0; i < m; ++i) next[i] /= b;
    diag[k] = a;
    offdiag[k] = b;
    b_prev = b;
    std::swap(prev, cur);
    std::swap(cur, next);
  }
  return RecurrenceCoefficients(std::move(diag), std::move(offdiag));
}

std::map<std::string, WeightFunction>& registry() {
  static std::map<std::string, WeightFunction> reg = [] {
    std::map<std::string, WeightFunction> r;
    const Interval unit{-1.0, 1.0};
    auto inside = [](double x) { return x > -1.0 && x < 1.0; };
    r["chebyshev1"] = {"chebyshev1",
                       [inside](double x) {
                         return inside(x) ? -std::log(std::numbers::pi) -
                                                0.5 * std::log((1.0 - x) * (1.0 + x))
                                          : kNegInf;
                       },
                       unit};
    r["uniform"] = {"uniform", [](double x) { return (x >= -1.0 && x <= 1.0) ? 0.0 : kNegInf; },
                    unit};
    r["semicircle"] = {"semicircle",
                       [inside](double x) {
                         return inside(x) ? 0.5 * std::log((1.0 - x) * (1.0 + x)) : kNegInf;
                       },
                       unit};
    r["gaussian"] = {"gaussian", [](double x) { return -0.5 * x * x; }, Interval::line()};
    r["quartic"] = {"quartic", [](double x) { return -x * x * x * x; }, Interval::line()};
    return r;
  }();
  return reg;
}

double jacobi_log_norm(double a, double b) {
  return (a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
         std::lgamma(a + b + 2.0);
}

}  // namespace

RecurrenceCoefficients::RecurrenceCoefficients(std::vector<double> diag,
                                               std::vector<double> offdiag)
    : diag_(std::move(diag)), offdiag_(std::move(offdiag)) {
  if (diag_.empty()) throw PreconditionError("recurrence depth must be at least 1");
  if (diag_.size() != offdiag_.size())
    throw PreconditionError("diag and offdiag must both have length depth");
  for (std::size_t k = 0; k < offdiag_.size(); ++k)
    if (!(offdiag_[k] > 0.0) || !std::isfinite(offdiag_[k]))
      throw InstabilityError("off-diagonal coefficient b_" + std::to_string(k + 1) +
                                 " is not strictly positive",
                             k + 1);
}

RecurrenceCoefficients RecurrenceCoefficients::truncated(std::size_t depth) const {
  if (depth > diag_.size() || depth == 0) throw PreconditionError("invalid truncation depth");
  return RecurrenceCoefficients({diag_.begin(), diag_.begin() + static_cast<long>(depth)},
                                {offdiag_.begin(), offdiag_.begin() + static_cast<long>(depth)});
}

std::string family_name(Family f) {
  switch (f) {
    case Family::Chebyshev1st: return "chebyshev1";
    case Family::Legendre: return "legendre";
    case Family::Jacobi: return "jacobi";
    case Family::VaryingGaussian: return "varying_gaussian";
    case Family::Discretized: return "discretized";
  }
  return "unknown";
}

RecurrenceCoefficients classical_recurrence(const FamilyTag& family, std::size_t depth) {
  if (depth == 0) throw PreconditionError("depth must be at least 1");
  std::vector<double> a(depth, 0.0), b(depth, 0.0);
  switch (family.kind) {
    case Family::Chebyshev1st:
      for (std::size_t k = 1; k <= depth; ++k) b[k - 1] = k == 1 ? std::sqrt(0.5) : 0.5;
      break;
    case Family::Legendre:
      for (std::size_t k = 1; k <= depth; ++k) {
        const double kk = static_cast<double>(k);
        b[k - 1] = kk / std::sqrt(4.0 * kk * kk - 1.0);
      }
      break;
    case Family::Jacobi: {
      const double al = family.alpha, be = family.beta;
      if (!(al > -1.0) || !(be > -1.0))
        throw ConfigurationError("Jacobi exponents must exceed -1");
      const double s = al + be;
      for (std::size_t k = 0; k < depth; ++k) {
        const double kk = static_cast<double>(k);
        if (k == 0)
          a[k] = (be - al) / (s + 2.0);
        else
          a[k] = (be * be - al * al) / ((2.0 * kk + s) * (2.0 * kk + s + 2.0));
      }
      for (std::size_t k = 1; k <= depth; ++k) {
        const double kk = static_cast<double>(k);
        double b2;
        if (k == 1) {
          b2 = 4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + s) * (2.0 + s) * (3.0 + s));
        } else {
          const double t = 2.0 * kk + s;
          b2 = 4.0 * kk * (kk + al) * (kk + be) * (kk + s) / (t * t * (t + 1.0) * (t - 1.0));
        }
        b[k - 1] = std::sqrt(b2);
      }
      break;
    }
    case Family::VaryingGaussian: {
      if (family.scale == 0) throw ConfigurationError("VaryingGaussian scale must be positive");
      const double n = static_cast<double>(family.scale);
      for (std::size_t k = 1; k <= depth; ++k) b[k - 1] = std::sqrt(static_cast<double>(k) / n);
      break;
    }
    case Family::Discretized:
      throw ConfigurationError("Discretized measures have no closed-form recurrence");
  }
  return RecurrenceCoefficients(std::move(a), std::move(b));
}

RecurrenceCoefficients stieltjes_recurrence(const std::function<double(double)>& weight,
                                            Interval support, std::size_t depth,
                                            std::size_t grid) {
  if (depth == 0) throw PreconditionError("depth must be at least 1");
  if (grid < 50 * depth) throw PreconditionError("Stieltjes grid must be at least 50 * depth");
  auto log_w = [&weight, support](double x) {
    if (!support.contains(x)) return kNegInf;
    const double w = weight(x);
    if (w < 0.0 || std::isnan(w)) throw DomainError("weight evaluator returned a negative value");
    return w > 0.0 ? std::log(w) : kNegInf;
  };
  const auto d = discretize(log_w, support, grid);
  return stieltjes_discrete(d.rule, depth);
}

ScaledPrefix eval_orthonormal_prefix_scaled(const RecurrenceCoefficients& coeffs, std::size_t k,
                                            double x) {
  if (k >= coeffs.depth()) throw PreconditionError("polynomial index must be below depth");
  ScaledPrefix out;
  out.values.resize(k + 1);
  out.values[0] = 1.0;
  if (k == 0) return out;
  auto& v = out.values;
  v[1] = (x - coeffs.a(0)) / coeffs.b(1);
  for (std::size_t j = 1; j < k; ++j) {
    v[j + 1] = ((x - coeffs.a(j)) * v[j] - coeffs.b(j) * v[j - 1]) / coeffs.b(j + 1);
    if (std::abs(v[j + 1]) > kRescaleThreshold) {
      for (std::size_t i = 0; i <= j + 1; ++i) v[i] /= kRescaleThreshold;
      out.log_scale += std::log(kRescaleThreshold);
    }
  }
  return out;
}

std::vector<double> eval_orthonormal_prefix(const RecurrenceCoefficients& coeffs, std::size_t k,
                                            double x) {
  if (k >= coeffs.depth()) throw PreconditionError("polynomial index must be below depth");
  std::vector<double> v(k + 1);
  v[0] = 1.0;
  if (k == 0) return v;
  v[1] = (x - coeffs.a(0)) / coeffs.b(1);
  for (std::size_t j = 1; j < k; ++j)
    v[j + 1] = ((x - coeffs.a(j)) * v[j] - coeffs.b(j) * v[j - 1]) / coeffs.b(j + 1);
  return v;
}

double eval_orthonormal(const RecurrenceCoefficients& coeffs, std::size_t k, double x) {
  if (k >= coeffs.depth()) throw PreconditionError("polynomial index must be below depth");
  double prev = 0.0, cur = 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double next = ((x - coeffs.a(j)) * cur - coeffs.b(j) * prev) / coeffs.b(j + 1);
    prev = cur;
    cur = next;
  }
  return cur;
}

QuadratureRule gauss_quadrature(const RecurrenceCoefficients& coeffs, std::size_t m) {
  if (m == 0 || m > coeffs.depth())
    throw PreconditionError("quadrature size must be in [1, depth]");
  Eigen::VectorXd diag(m), sub(m > 1 ? m - 1 : 1);
  for (std::size_t k = 0; k < m; ++k) diag[static_cast<Eigen::Index>(k)] = coeffs.a(k);
  for (std::size_t k = 1; k < m; ++k) sub[static_cast<Eigen::Index>(k - 1)] = coeffs.b(k);
  QuadratureRule rule;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  if (m == 1) {
    rule.nodes[0] = coeffs.a(0);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub.head(static_cast<Eigen::Index>(m - 1)),
                                  Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
      throw NumericalError("tridiagonal eigen-solver did not converge");
    for (std::size_t i = 0; i < m; ++i)
      rule.nodes[i] = solver.eigenvalues()[static_cast<Eigen::Index>(i)];
  }
  // Christoffel numbers: lambda_i = 1 / sum_{j<m} p_j(x_i)^2.
  for (std::size_t i = 0; i < m; ++i) {
    const auto p = eval_orthonormal_prefix_scaled(coeffs, m - 1, rule.nodes[i]);
    double s = 0.0;
    for (double v : p.values) s += v * v;
    rule.weights[i] = std::exp(-2.0 * p.log_scale) / s;
  }
  return rule;
}

double leading_ratio(const RecurrenceCoefficients& coeffs, std::size_t n) {
  if (n == 0 || n > coeffs.depth()) throw PreconditionError("leading_ratio needs 1 <= n <= depth");
  return coeffs.b(n);
}

const WeightFunction& weight_registry(const std::string& key) {
  auto& reg = registry();
  auto it = reg.find(key);
  if (it == reg.end()) throw ConfigurationError("unknown weight registry key '" + key + "'");
  return it->second;
}

std::vector<std::string> weight_registry_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, v] : registry()) keys.push_back(k);
  return keys;
}

void register_weight(WeightFunction weight) {
  auto key = weight.key;
  registry()[key] = std::move(weight);
}

MeasurePtr Measure::from_tag(const FamilyTag& tag, std::size_t depth) {
  if (depth == 0) throw PreconditionError("depth must be at least 1");
  if (tag.kind == Family::Discretized)
    throw ConfigurationError("Discretized measures need a weight key; use Measure::discretized");
  std::shared_ptr<Measure> m(new Measure());
  m->tag_ = tag;
  m->depth_ = depth;
  switch (tag.kind) {
    case Family::Chebyshev1st:
    case Family::Legendre:
      m->support_ = {-1.0, 1.0};
      break;
    case Family::Jacobi:
      if (!(tag.alpha > -1.0) || !(tag.beta > -1.0))
        throw ConfigurationError("Jacobi exponents must exceed -1");
      m->support_ = {-1.0, 1.0};
      m->log_norm_ = jacobi_log_norm(tag.alpha, tag.beta);
      break;
    case Family::VaryingGaussian:
      if (tag.scale == 0) throw ConfigurationError("VaryingGaussian scale must be positive");
      m->support_ = Interval::line();
      break;
    case Family::Discretized:
      break;
  }
  return m;
}

MeasurePtr Measure::chebyshev1st(std::size_t depth) { return from_tag(FamilyTag::chebyshev1st(), depth); }
MeasurePtr Measure::legendre(std::size_t depth) { return from_tag(FamilyTag::legendre(), depth); }
MeasurePtr Measure::jacobi(double alpha, double beta, std::size_t depth) {
  return from_tag(FamilyTag::jacobi(alpha, beta), depth);
}
MeasurePtr Measure::varying_gaussian(std::size_t n, std::size_t depth) {
  return from_tag(FamilyTag::varying_gaussian(n), depth);
}

MeasurePtr Measure::discretized(const std::string& weight_key, Interval support, std::size_t grid,
                                std::size_t depth) {
  if (depth == 0) throw PreconditionError("depth must be at least 1");
  if (grid < 50 * depth) throw PreconditionError("Stieltjes grid must be at least 50 * depth");
  if (!(support.lo < support.hi)) throw ConfigurationError("support must be a nondegenerate interval");
  if (std::isfinite(support.lo) != std::isfinite(support.hi))
    throw ConfigurationError("half-line supports are not supported");
  const auto& wf = weight_registry(weight_key);
  std::shared_ptr<Measure> m(new Measure());
  m->tag_ = {Family::Discretized};
  m->support_ = support;
  m->depth_ = depth;
  m->weight_key_ = weight_key;
  m->grid_ = grid;
  auto raw = wf.log_weight;
  m->raw_log_weight_ = [raw, support](double x) {
    return support.contains(x) ? raw(x) : kNegInf;
  };
  auto d = discretize(m->raw_log_weight_, support, grid);
  m->log_norm_ = d.log_mass;
  m->grid_rule_ = std::move(d.rule);
  m->cache_[0] = std::make_shared<const RecurrenceCoefficients>(stieltjes_discrete(m->grid_rule_, depth));
  return m;
}

double Measure::log_weight(double x) const {
  if (!support_.contains(x)) return kNegInf;
  switch (tag_.kind) {
    case Family::Chebyshev1st:
      if (x <= -1.0 || x >= 1.0) return std::numeric_limits<double>::infinity();
      return -std::log(std::numbers::pi) - 0.5 * std::log((1.0 - x) * (1.0 + x));
    case Family::Legendre:
      return -std::log(2.0);
    case Family::Jacobi: {
      const double lw = (tag_.alpha != 0.0 ? tag_.alpha * std::log1p(-x) : 0.0) +
                        (tag_.beta != 0.0 ? tag_.beta * std::log1p(x) : 0.0);
      return lw - log_norm_;
    }
    case Family::VaryingGaussian: {
      const double n = static_cast<double>(tag_.scale);
      return 0.5 * std::log(n / (2.0 * std::numbers::pi)) - 0.5 * n * x * x;
    }
    case Family::Discretized:
      return raw_log_weight_(x) - log_norm_;
  }
  return kNegInf;
}

double Measure::log_weight_local(double x, double from_lo, double from_hi) const {
  if (!(from_lo >= 0.0) || !(from_hi >= 0.0)) return kNegInf;
  switch (tag_.kind) {
    case Family::Chebyshev1st:
      return -std::log(std::numbers::pi) - 0.5 * (std::log(from_lo) + std::log(from_hi));
    case Family::Jacobi:
      return (tag_.alpha != 0.0 ? tag_.alpha * std::log(from_hi) : 0.0) +
             (tag_.beta != 0.0 ? tag_.beta * std::log(from_lo) : 0.0) - log_norm_;
    default:
      return log_weight(x);
  }
}

double Measure::weight(double x) const { return std::exp(log_weight(x)); }

RecurrenceCoefficients Measure::recurrence(std::size_t depth) const {
  if (depth == 0) throw PreconditionError("depth must be at least 1");
  if (tag_.kind != Family::Discretized) return classical_recurrence(tag_, depth);
  std::size_t level = 0;
  while ((depth_ << level) < depth) ++level;
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto& slot = cache_[level];
  if (!slot) {
    const std::size_t target = depth_ << level;
    const std::size_t grid = std::max(grid_, 50 * target);
    if (grid == grid_) {
      slot = std::make_shared<const RecurrenceCoefficients>(stieltjes_discrete(grid_rule_, target));
    } else {
      const auto d = discretize(raw_log_weight_, support_, grid);
      slot = std::make_shared<const RecurrenceCoefficients>(stieltjes_discrete(d.rule, target));
    }
  }
  return slot->truncated(depth);
}

nlohmann::json Measure::to_json() const {
  nlohmann::json j;
  j["family"] = family_name(tag_.kind);
  nlohmann::json params = nlohmann::json::object();
  switch (tag_.kind) {
    case Family::Jacobi:
      params["alpha"] = tag_.alpha;
      params["beta"] = tag_.beta;
      break;
    case Family::VaryingGaussian:
      params["n"] = tag_.scale;
      break;
    case Family::Discretized:
      params["weight"] = weight_key_;
      if (support_.bounded())
        params["support"] = {support_.lo, support_.hi};
      else
        params["support"] = "line";
      params["grid"] = grid_;
      break;
    default:
      break;
  }
  j["params"] = params;
  j["depth"] = depth_;
  return j;
}

MeasurePtr Measure::from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ConfigurationError("measure must be a JSON object");
    const std::string family = j.at("family").get<std::string>();
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    const auto depth = j.value("depth", std::size_t{64});
    if (family == "chebyshev1") return chebyshev1st(depth);
    if (family == "legendre") return legendre(depth);
    if (family == "jacobi") return jacobi(params.at("alpha").get<double>(),
                                          params.at("beta").get<double>(), depth);
    if (family == "varying_gaussian") return varying_gaussian(params.at("n").get<std::size_t>(), depth);
    if (family == "discretized") {
      Interval support = Interval::line();
      const auto& s = params.at("support");
      if (s.is_array()) {
        if (s.size() != 2) throw ConfigurationError("support must be [lo, hi] or \"line\"");
        support = {s[0].get<double>(), s[1].get<double>()};
      } else if (!(s.is_string() && s.get<std::string>() == "line")) {
        throw ConfigurationError("support must be [lo, hi] or \"line\"");
      }
      return discretized(params.at("weight").get<std::string>(), support,
                         params.value("grid", 50 * depth), depth);
    }
    throw ConfigurationError("unsupported measure family '" + family + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("malformed measure JSON: ") + e.what());
  }
}

MeasurePtr varying_gaussian_measure(std::size_t n) {
  if (n == 0) throw PreconditionError("n must be at least 1");
  return Measure::varying_gaussian(n);
}

}  // namespace ope
