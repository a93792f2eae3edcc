#include "ope/quadrature.hpp"

#include <algorithm>
#include <numbers>

#include "ope/errors.hpp"

namespace ope {

namespace {

constexpr std::size_t kPanelOrder = 16;
constexpr double kGrading = 0.15;
constexpr int kGradingLevels = 12;

const QuadratureRule& gauss_legendre_panel() {
  static const QuadratureRule rule =
      gauss_quadrature(classical_recurrence(FamilyTag::legendre(), kPanelOrder), kPanelOrder);
  return rule;
}

}  // namespace

double Chart::u_of(double x) const {
  if (!angular) return std::clamp(x, lo, hi);
  return std::acos(std::clamp((x - c) / r, -1.0, 1.0));
}

Chart chart_for(const CDKernel& kern) {
  Chart ch;
  const Interval s = kern.measure().support();
  if (s.bounded()) {
    ch.angular = true;
    ch.c = s.center();
    ch.r = s.radius();
    ch.lo = 0.0;
    ch.hi = std::numbers::pi;
    return ch;
  }
  // Beyond the extreme zero of p_{n+1} the weighted kernel decays like the weight.
  const auto rule = gauss_quadrature(kern.coeffs(), kern.n() + 1);
  const double reach = std::max(std::abs(rule.nodes.front()), std::abs(rule.nodes.back()));
  const double center = kern.coeffs().a(0);
  const double L = reach + std::abs(center) + 10.0 * kern.coeffs().b(1);
  ch.lo = -L;
  ch.hi = L;
  return ch;
}

void KernelNodes::build(const CDKernel& kern, std::vector<double> u, std::vector<double> log_omega,
                        std::optional<Chart> chart) {
  kern_ = &kern;
  chart_ = chart;
  const std::size_t n = kern.n();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (log_omega[i] > -std::numeric_limits<double>::infinity() && std::isfinite(log_omega[i]))
      keep.push_back(i);
  const auto M = static_cast<Eigen::Index>(keep.size());
  phi_.resize(M, static_cast<Eigen::Index>(n + 1));
  diag_.resize(M);
  u_.resize(keep.size());
  x_.resize(keep.size());
  omega_.resize(keep.size());
  for (Eigen::Index r = 0; r < M; ++r) {
    const std::size_t i = keep[static_cast<std::size_t>(r)];
    u_[r] = u[i];
    x_[r] = chart ? chart->x(u[i]) : u[i];
    omega_[r] = std::exp(log_omega[i]);
    const auto p = kern.basis(x_[r]);
    const double lscale = p.log_scale + 0.5 * log_omega[i];
    for (std::size_t j = 0; j <= n; ++j) {
      const double v = p.values[j];
      phi_(r, static_cast<Eigen::Index>(j)) = v == 0.0 ? 0.0 : v * std::exp(lscale);
    }
    diag_[r] = phi_.row(r).head(static_cast<Eigen::Index>(n)).squaredNorm();
  }
}

KernelNodes KernelNodes::gauss(const CDKernel& kern, std::size_t m) {
  if (m < kern.n()) throw PreconditionError("quadrature size must be at least the kernel rank");
  const auto coeffs = kern.measure().recurrence(std::max(m, kern.n() + 1));
  auto rule = gauss_quadrature(coeffs, m);
  std::vector<double> logw(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i)
    logw[i] = rule.weights[i] > 0.0 ? std::log(rule.weights[i])
                                    : -std::numeric_limits<double>::infinity();
  KernelNodes k;
  k.build(kern, std::move(rule.nodes), std::move(logw), std::nullopt);
  return k;
}

KernelNodes KernelNodes::panels(const CDKernel& kern, std::size_t m,
                                const std::vector<double>& breakpoints,
                                std::optional<Interval> zoom) {
  const Chart ch = chart_for(kern);
  const double span = ch.hi - ch.lo;
  std::vector<double> cuts{ch.lo, ch.hi};
  for (double b : breakpoints) {
    if (!std::isfinite(b)) continue;
    const double u = ch.u_of(b);
    if (u > ch.lo && u < ch.hi) cuts.push_back(u);
  }
  double zlo = 0.0, zhi = 0.0;
  if (zoom) {
    double a = ch.u_of(std::isfinite(zoom->lo) ? zoom->lo : -1e300);
    double b = ch.u_of(std::isfinite(zoom->hi) ? zoom->hi : 1e300);
    zlo = std::min(a, b);
    zhi = std::max(a, b);
    if (zhi > zlo) {
      cuts.push_back(zlo);
      cuts.push_back(zhi);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> uniq;
  for (double c : cuts)
    if (uniq.empty() || c - uniq.back() > 1e-13 * span) uniq.push_back(c);
  uniq.back() = ch.hi;

  const double target = static_cast<double>(std::max<std::size_t>(2 * m, 4 * kPanelOrder));
  const double h = span * static_cast<double>(kPanelOrder) / target;
  std::vector<std::pair<double, double>> panels;
  for (std::size_t s = 0; s + 1 < uniq.size(); ++s) {
    const double a = uniq[s], b = uniq[s + 1];
    double hh = h;
    if (zhi > zlo && a >= zlo - 1e-15 && b <= zhi + 1e-15) {
      // The zoom window keeps at least 16 panels at the base level and doubles with m.
      const double base = static_cast<double>(2 * kern.n() + 64);
      const double k_min = std::ceil(16.0 * static_cast<double>(m) / base);
      hh = std::min(h, (zhi - zlo) / k_min);
    }
    const auto k = static_cast<std::size_t>(std::ceil((b - a) / hh - 1e-9));
    for (std::size_t j = 0; j < std::max<std::size_t>(k, 1); ++j) {
      const double p0 = a + (b - a) * static_cast<double>(j) / static_cast<double>(std::max<std::size_t>(k, 1));
      const double p1 = j + 1 == std::max<std::size_t>(k, 1)
                            ? b
                            : a + (b - a) * static_cast<double>(j + 1) / static_cast<double>(k);
      panels.emplace_back(p0, p1);
    }
  }
  if (ch.angular) {
    // Geometric grading toward both endpoints absorbs algebraic endpoint behavior
    // of the weight.
    std::vector<std::pair<double, double>> graded;
    auto grade = [&](double edge, double inner, bool at_lo) {
      const double len = inner - edge;
      std::vector<double> pts{edge};
      for (int l = kGradingLevels; l >= 1; --l) pts.push_back(edge + len * std::pow(kGrading, l));
      pts.push_back(inner);
      for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
        if (at_lo)
          graded.emplace_back(pts[j], pts[j + 1]);
        else
          graded.emplace_back(pts[j + 1], pts[j]);
      }
    };
    for (std::size_t i = 0; i < panels.size(); ++i) {
      const auto [a, b] = panels[i];
      if (i == 0)
        grade(a, b, true);
      else if (i + 1 == panels.size())
        grade(b, a, false);
      else
        graded.emplace_back(a, b);
    }
    panels = std::move(graded);
  }

  const auto& gl = gauss_legendre_panel();
  const Measure& mu = kern.measure();
  std::vector<double> u, logw;
  u.reserve(panels.size() * kPanelOrder);
  logw.reserve(panels.size() * kPanelOrder);
  for (const auto& [a, b] : panels) {
    const double lo = std::min(a, b), hi = std::max(a, b);
    if (!(hi > lo)) continue;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (std::size_t q = 0; q < gl.size(); ++q) {
      const double uu = mid + half * gl.nodes[q];
      const double lw = ch.log_weight(mu, uu);
      const double jac = ch.jacobian(uu);
      u.push_back(uu);
      logw.push_back(jac > 0.0 ? lw + std::log(jac) + std::log((hi - lo) * gl.weights[q])
                               : -std::numeric_limits<double>::infinity());
    }
  }
  KernelNodes k;
  k.build(kern, std::move(u), std::move(logw), ch);
  return k;
}

Eigen::VectorXd KernelNodes::sample(const std::function<double(double)>& f) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x_.size()));
  for (std::size_t i = 0; i < x_.size(); ++i) v[static_cast<Eigen::Index>(i)] = f(x_[i]);
  return v;
}

Eigen::VectorXd KernelNodes::normalized_section(double x) const {
  const auto n = static_cast<Eigen::Index>(kern_->n());
  const auto p = kern_->basis(x);
  Eigen::Map<const Eigen::VectorXd> u(p.values.data(), n);
  return phi_.leftCols(n) * u / u.norm();
}

double KernelNodes::symmetric_variance(const Eigen::VectorXd& f) const {
  const auto n = static_cast<Eigen::Index>(kern_->n());
  const double bn = kern_->b_n();
  const auto M = static_cast<Eigen::Index>(x_.size());
  const auto pn = phi_.col(n);
  const auto pm = phi_.col(n - 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < M; ++i) {
    double row = 0.0;
    for (Eigen::Index k = i + 1; k < M; ++k) {
      const double df = f[i] - f[k];
      if (df == 0.0) continue;
      const double dx = chart_ ? chart_->difference(u_[i], u_[k]) : x_[i] - x_[k];
      double g;
      if (std::abs(dx) < 1e-4 * (1.0 + std::abs(x_[i]) + std::abs(x_[k])))
        g = phi_.row(i).head(n).dot(phi_.row(k).head(n));
      else
        g = bn * (pn[i] * pm[k] - pn[k] * pm[i]) / dx;
      row += df * df * g * g;
    }
    total += row;
  }
  return total;
}

double KernelNodes::two_term_variance(const Eigen::VectorXd& f) const {
  const auto n = static_cast<Eigen::Index>(kern_->n());
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (f[i] != 0.0) rows.push_back(i);
  Eigen::MatrixXd P(static_cast<Eigen::Index>(rows.size()), n);
  Eigen::MatrixXd FP(static_cast<Eigen::Index>(rows.size()), n);
  double s = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    P.row(static_cast<Eigen::Index>(r)) = phi_.row(i).head(n);
    FP.row(static_cast<Eigen::Index>(r)) = f[i] * phi_.row(i).head(n);
    s += f[i] * f[i] * diag_[i];
  }
  const Eigen::MatrixXd B = P.transpose() * FP;
  return s - B.squaredNorm();
}

std::pair<double, int> KernelNodes::log_det(const Eigen::VectorXd& g) const {
  const auto n = static_cast<Eigen::Index>(kern_->n());
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (g[i] != 0.0) rows.push_back(i);
  Eigen::MatrixXd P(static_cast<Eigen::Index>(rows.size()), n);
  Eigen::MatrixXd GP(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    P.row(static_cast<Eigen::Index>(r)) = phi_.row(i).head(n);
    GP.row(static_cast<Eigen::Index>(r)) = g[i] * phi_.row(i).head(n);
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) + P.transpose() * GP;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const Eigen::MatrixXd& U = lu.matrixLU();
  double logabs = 0.0;
  int sign = static_cast<int>(lu.permutationP().determinant());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = U(i, i);
    if (d == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
    if (d < 0.0) sign = -sign;
    logabs += std::log(std::abs(d));
  }
  return {logabs, sign};
}

std::vector<double> converge(
    const CDKernel& kern, const NodePlan& plan,
    const std::function<std::vector<double>(const KernelNodes&, double& scale)>& eval,
    double rtol) {
  const std::size_t n = kern.n();
  const std::size_t m0 = plan.m == 0 ? 2 * n + 64 : plan.m;
  double scale = 0.0;
  if (plan.gauss) return eval(KernelNodes::gauss(kern, std::max(m0, n)), scale);
  const std::size_t cap = std::max(16 * n + 1024, 2 * m0);
  std::size_t m = m0;
  auto prev = eval(KernelNodes::panels(kern, m, plan.breakpoints, plan.zoom), scale);
  for (;;) {
    if (2 * m > cap)
      throw ResolutionError("quadrature refinement did not converge below m = " +
                            std::to_string(cap));
    m *= 2;
    double s2 = 0.0;
    auto cur = eval(KernelNodes::panels(kern, m, plan.breakpoints, plan.zoom), s2);
    bool ok = true;
    for (std::size_t i = 0; i < cur.size(); ++i)
      if (!(std::abs(cur[i] - prev[i]) <= rtol * std::max(scale, s2))) ok = false;
    if (ok) return cur;
    prev = std::move(cur);
    scale = s2;
  }
}

}  // namespace ope
