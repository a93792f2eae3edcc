#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ope/kernel.hpp"
#include "ope/quadrature.hpp"
#include "ope/rng.hpp"

namespace ope {

enum class SampleMethod { Hkpv, Tridiagonal };

std::string method_name(SampleMethod m);
SampleMethod parse_method(const std::string& s);

/// One draw (lambda_1 <= ... <= lambda_n) of the ensemble.
struct SampleConfiguration {
  std::vector<double> points;
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;
  SampleMethod method = SampleMethod::Hkpv;
  std::size_t n = 0;
};

/// Exact sequential-conditional sampler for the rank-n projection process with
/// kernel K_n against the measure. Each point is proposed from a piecewise
/// constant envelope of K_n(x,x) w(x) in the chart coordinate and accepted with
/// the residual-to-full diagonal ratio after projecting out earlier points.
/// The envelope is built once; sample() is const and thread safe.
class OpeSampler {
 public:
  explicit OpeSampler(const CDKernel& kern, std::size_t iteration_cap = 1000000);

  SampleConfiguration sample(RngStream& rng) const;
  const CDKernel& kernel() const noexcept { return kern_; }

 private:
  struct Proposal {
    double u;
    double bound;
  };
  Proposal propose(RngStream& rng) const;
  // log(K_n(x,x) w(x) J(u)) and the normalized basis vector at x.
  double log_density(double u, std::vector<double>& unit) const;

  CDKernel kern_;
  std::size_t cap_;
  Chart chart_;
  std::vector<double> edges_;
  std::vector<double> bound_;
  std::vector<double> cumulative_;
};

SampleConfiguration sample_ope(const CDKernel& kern, RngStream& rng);

/// One draw from the reference measure itself.
double sample_reference(const Measure& measure, RngStream& rng);

/// Off-diagonal scale of the beta = 2 tridiagonal model: entries chi_{2(n-k)} * scale.
/// Calibrated so that n^{-1} E sum lambda_j^2 matches the exact second moment.
inline constexpr double kTridiagonalOffScale = 0.70710678118654752440;

/// Eigenvalues of the beta = 2 tridiagonal Gaussian model rescaled by 1/sqrt(n),
/// which is the ensemble of the varying Gaussian weight with N = n.
SampleConfiguration sample_gue_tridiagonal(std::size_t n, RngStream& rng);

/// Rows `replicate_id,point_index,value` after '#' metadata lines.
void write_samples_csv(std::ostream& out, const std::vector<SampleConfiguration>& samples,
                       const nlohmann::json& measure);

}  // namespace ope
