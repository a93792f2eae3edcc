#include "ope/kernel.hpp"

#include "ope/errors.hpp"

namespace ope {

namespace {

double dot_prefix(const ScaledPrefix& u, const ScaledPrefix& v, std::size_t n) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += u.values[j] * v.values[j];
  return s;
}

// Scale factor exp(ls) applied to a product; zero products stay exactly zero.
double rescale(double s, double log_scale) { return s == 0.0 ? 0.0 : s * std::exp(log_scale); }

}  // namespace

CDKernel::CDKernel(MeasurePtr measure, std::size_t n)
    : measure_(std::move(measure)),
      n_(n),
      coeffs_(measure_ ? measure_->recurrence(std::max(n + 1, measure_->depth()))
                       : throw PreconditionError("kernel needs a measure")) {
  if (n == 0) throw PreconditionError("kernel rank must be at least 1");
}

double kernel_sum(const CDKernel& kern, double x, double y) {
  const auto px = kern.basis(x);
  if (x == y) return rescale(dot_prefix(px, px, kern.n()), 2.0 * px.log_scale);
  const auto py = kern.basis(y);
  return rescale(dot_prefix(px, py, kern.n()), px.log_scale + py.log_scale);
}

double kernel_diag(const CDKernel& kern, double x) { return kernel_sum(kern, x, x); }

double kernel_cd(const CDKernel& kern, double x, double y) {
  if (cd_near_diagonal(x, y)) return kernel_sum(kern, x, y);
  const std::size_t n = kern.n();
  const auto px = kern.basis(x);
  const auto py = kern.basis(y);
  const double num = px.values[n] * py.values[n - 1] - py.values[n] * px.values[n - 1];
  return rescale(kern.b_n() * num / (x - y), px.log_scale + py.log_scale);
}

double kernel_tilde(const CDKernel& kern, double x, double y) {
  const double lx = kern.measure().log_weight(x);
  const double ly = x == y ? lx : kern.measure().log_weight(y);
  if (!std::isfinite(lx) || !std::isfinite(ly))
    throw DomainError("weight is zero or singular at a kernel argument");
  const auto px = kern.basis(x);
  const auto py = x == y ? px : kern.basis(y);
  const double s = dot_prefix(px, py, kern.n());
  return rescale(s, px.log_scale + py.log_scale + 0.5 * (lx + ly));
}

double scaled_kernel(const CDKernel& kern, double x, double a, double b) {
  const double d = kernel_tilde(kern, x, x);
  const double u = x + a / d, v = x + b / d;
  const Interval s = kern.measure().support();
  auto interior = [&s](double z) { return z > s.lo && z < s.hi; };
  if (!interior(u) || !interior(v))
    throw DomainError("rescaled kernel argument leaves the support");
  return kernel_tilde(kern, u, v) / d;
}

double reproducing_residual(const CDKernel& kern, double x, double y, std::size_t m) {
  const std::size_t n = kern.n();
  if (m < n) throw PreconditionError("reproducing check needs at least n quadrature nodes");
  const auto coeffs = kern.measure().recurrence(std::max(m, n + 1));
  const auto rule = gauss_quadrature(coeffs, m);
  const auto px = kern.basis(x);
  const auto py = kern.basis(y);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const auto pz = kern.basis(rule.nodes[i]);
    const double kxz = rescale(dot_prefix(px, pz, n), px.log_scale + pz.log_scale);
    const double kzy = rescale(dot_prefix(pz, py, n), pz.log_scale + py.log_scale);
    acc += rule.weights[i] * kxz * kzy;
  }
  return std::abs(acc - rescale(dot_prefix(px, py, n), px.log_scale + py.log_scale));
}

}  // namespace ope
