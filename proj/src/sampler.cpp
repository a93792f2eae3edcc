#include "ope/sampler.hpp"

#include <algorithm>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "ope/errors.hpp"
#include "ope/statistics.hpp"

namespace ope {

namespace {

constexpr double kEnvelopeSafety = 1.25;
constexpr int kEnvelopeProbes = 9;

}  // namespace

std::string method_name(SampleMethod m) {
  return m == SampleMethod::Hkpv ? "hkpv" : "tridiagonal";
}

SampleMethod parse_method(const std::string& s) {
  if (s == "hkpv") return SampleMethod::Hkpv;
  if (s == "tridiagonal") return SampleMethod::Tridiagonal;
  throw ConfigurationError("unknown sampling method '" + s + "'");
}

OpeSampler::OpeSampler(const CDKernel& kern, std::size_t iteration_cap)
    : kern_(kern), cap_(iteration_cap), chart_(chart_for(kern)) {
  const auto& fam = kern.measure().family();
  if (fam.kind == Family::Jacobi && (fam.alpha < -0.5 || fam.beta < -0.5))
    throw PreconditionError("sampler needs Jacobi exponents >= -1/2 (bounded envelope)");
  const std::size_t cells = 64 * kern.n() + 200;
  edges_.resize(cells + 1);
  for (std::size_t c = 0; c <= cells; ++c)
    edges_[c] = chart_.lo + (chart_.hi - chart_.lo) * static_cast<double>(c) / static_cast<double>(cells);
  edges_.back() = chart_.hi;
  bound_.assign(cells, 0.0);
  cumulative_.assign(cells + 1, 0.0);
  std::vector<double> unit;
  for (std::size_t c = 0; c < cells; ++c) {
    double peak = 0.0;
    for (int j = 0; j < kEnvelopeProbes; ++j) {
      const double u = edges_[c] + (edges_[c + 1] - edges_[c]) * (j + 0.5) / kEnvelopeProbes;
      const double ld = log_density(u, unit);
      if (std::isnan(ld) || ld == std::numeric_limits<double>::infinity())
        throw NumericalError("sampler envelope is unbounded");
      peak = std::max(peak, std::exp(ld));
    }
    bound_[c] = kEnvelopeSafety * peak;
    cumulative_[c + 1] = cumulative_[c] + bound_[c] * (edges_[c + 1] - edges_[c]);
  }
  if (!(cumulative_.back() > 0.0)) throw NumericalError("sampler envelope has zero mass");
}

double OpeSampler::log_density(double u, std::vector<double>& unit) const {
  const double x = chart_.x(u);
  const double lw = chart_.log_weight(kern_.measure(), u);
  const double jac = chart_.jacobian(u);
  const auto p = kern_.basis(x);
  const std::size_t n = kern_.n();
  unit.assign(p.values.begin(), p.values.begin() + static_cast<long>(n));
  double s = 0.0;
  for (double v : unit) s += v * v;
  const double norm = std::sqrt(s);
  for (double& v : unit) v /= norm;
  if (!(jac > 0.0) || lw == -std::numeric_limits<double>::infinity())
    return -std::numeric_limits<double>::infinity();
  return std::log(s) + 2.0 * p.log_scale + lw + std::log(jac);
}

OpeSampler::Proposal OpeSampler::propose(RngStream& rng) const {
  const double target = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  std::size_t c = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  c = std::clamp<std::size_t>(c, 1, bound_.size()) - 1;
  while (bound_[c] == 0.0 && c + 1 < bound_.size()) ++c;
  const double u = edges_[c] + rng.uniform() * (edges_[c + 1] - edges_[c]);
  return {u, bound_[c]};
}

SampleConfiguration OpeSampler::sample(RngStream& rng) const {
  const std::size_t n = kern_.n();
  SampleConfiguration out;
  out.seed = rng.seed();
  out.stream_index = rng.stream_index();
  out.method = SampleMethod::Hkpv;
  out.n = n;
  std::vector<std::vector<double>> basis;  // orthonormal span of accepted sections
  std::vector<double> unit, resid(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool accepted = false;
    for (std::size_t it = 0; it < cap_; ++it) {
      const auto prop = propose(rng);
      const double g = std::exp(log_density(prop.u, unit));
      if (g > prop.bound)
        throw NumericalError("sampler envelope violated at x = " +
                             format_double(chart_.x(prop.u)));
      resid = unit;
      for (const auto& e : basis) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d += e[j] * unit[j];
        for (std::size_t j = 0; j < n; ++j) resid[j] -= d * e[j];
      }
      double r2 = 0.0;
      for (double v : resid) r2 += v * v;
      if (rng.uniform() * prop.bound >= g * r2) continue;
      // Second Gram-Schmidt pass against drift.
      for (const auto& e : basis) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d += e[j] * resid[j];
        for (std::size_t j = 0; j < n; ++j) resid[j] -= d * e[j];
      }
      double norm = 0.0;
      for (double v : resid) norm += v * v;
      norm = std::sqrt(norm);
      for (double& v : resid) v /= norm;
      basis.push_back(resid);
      out.points.push_back(chart_.x(prop.u));
      accepted = true;
      break;
    }
    if (!accepted)
      throw SamplingStallError("rejection sampler exceeded " + std::to_string(cap_) +
                               " proposals at point " + std::to_string(i + 1) + " of " +
                               std::to_string(n));
  }
  std::sort(out.points.begin(), out.points.end());
  return out;
}

SampleConfiguration sample_ope(const CDKernel& kern, RngStream& rng) {
  return OpeSampler(kern).sample(rng);
}

double sample_reference(const Measure& measure, RngStream& rng) {
  const auto& fam = measure.family();
  switch (fam.kind) {
    case Family::Chebyshev1st:
      return std::cos(std::numbers::pi * rng.uniform());
    case Family::Legendre:
      return 2.0 * rng.uniform() - 1.0;
    case Family::Jacobi: {
      const double g1 = rng.gamma(fam.beta + 1.0), g2 = rng.gamma(fam.alpha + 1.0);
      return 2.0 * g1 / (g1 + g2) - 1.0;
    }
    case Family::VaryingGaussian:
      return rng.normal() / std::sqrt(static_cast<double>(fam.scale));
    case Family::Discretized: {
      // Piecewise-linear inverse of the grid CDF through node midpoints.
      const auto& rule = measure.discretization();
      const double u = rng.uniform();
      double acc = 0.0, prev_c = 0.0, prev_x = rule.nodes.front();
      for (std::size_t i = 0; i < rule.size(); ++i) {
        const double c = acc + 0.5 * rule.weights[i];
        if (u <= c) {
          if (i == 0) return rule.nodes.front();
          return prev_x + (rule.nodes[i] - prev_x) * (u - prev_c) / (c - prev_c);
        }
        acc += rule.weights[i];
        prev_c = c;
        prev_x = rule.nodes[i];
      }
      return rule.nodes.back();
    }
  }
  throw ConfigurationError("unsupported family for direct sampling");
}

SampleConfiguration sample_gue_tridiagonal(std::size_t n, RngStream& rng) {
  if (n == 0) throw PreconditionError("n must be at least 1");
  SampleConfiguration out;
  out.seed = rng.seed();
  out.stream_index = rng.stream_index();
  out.method = SampleMethod::Tridiagonal;
  out.n = n;
  Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(std::max<std::size_t>(n, 2) - 1));
  for (std::size_t k = 0; k < n; ++k) diag[static_cast<Eigen::Index>(k)] = rng.normal();
  for (std::size_t k = 1; k < n; ++k)
    sub[static_cast<Eigen::Index>(k - 1)] =
        kTridiagonalOffScale * rng.chi(2.0 * static_cast<double>(n - k));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  if (n == 1) {
    out.points = {diag[0] * scale};
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub.head(static_cast<Eigen::Index>(n - 1)),
                                Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("tridiagonal eigen-solver did not converge");
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i)
    out.points.push_back(solver.eigenvalues()[i] * scale);
  std::sort(out.points.begin(), out.points.end());
  return out;
}

void write_samples_csv(std::ostream& out, const std::vector<SampleConfiguration>& samples,
                       const nlohmann::json& measure) {
  out << "# measure: " << measure.dump() << '\n';
  if (!samples.empty()) {
    out << "# n: " << samples.front().n << '\n';
    out << "# seed: " << samples.front().seed << '\n';
    out << "# method: " << method_name(samples.front().method) << '\n';
  }
  out << "replicate_id,point_index,value\n";
  for (std::size_t r = 0; r < samples.size(); ++r)
    for (std::size_t i = 0; i < samples[r].points.size(); ++i)
      out << r << ',' << i << ',' << format_double(samples[r].points[i]) << '\n';
}

}  // namespace ope
