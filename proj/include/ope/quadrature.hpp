#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ope/kernel.hpp"

namespace ope {

/// Integration coordinate for a kernel's measure. Compact supports use the
/// angle u = theta with x = c + r cos(theta); the line uses x itself,
/// truncated to [-L, L] where the weighted kernel is negligible.
struct Chart {
  bool angular = false;
  double c = 0.0, r = 1.0;  // angular chart
  double lo = 0.0, hi = 0.0;  // u range

  double x(double u) const { return angular ? c + r * std::cos(u) : u; }
  double u_of(double x) const;
  /// dx/du in absolute value.
  double jacobian(double u) const { return angular ? r * std::sin(u) : 1.0; }
  /// Measure log-weight at x(u), endpoint-accurate in the angular chart.
  double log_weight(const Measure& mu, double u) const {
    if (!angular) return mu.log_weight(u);
    const double sh = std::sin(0.5 * u), ch = std::cos(0.5 * u);
    return mu.log_weight_local(x(u), 2.0 * r * ch * ch, 2.0 * r * sh * sh);
  }
  /// x(u1) - x(u2) without cancellation for nearby angles.
  double difference(double u1, double u2) const {
    return angular ? -2.0 * r * std::sin(0.5 * (u1 + u2)) * std::sin(0.5 * (u1 - u2)) : u1 - u2;
  }
};

Chart chart_for(const CDKernel& kern);

/// Node set (x_i, omega_i) integrating against the measure, with the weighted
/// basis Phi_ij = sqrt(omega_i) p_j(x_i) for j = 0..n.
class KernelNodes {
 public:
  /// m-point Gauss rule of the measure.
  static KernelNodes gauss(const CDKernel& kern, std::size_t m);
  /// Composite Gauss-Legendre panels in the chart coordinate with about 2m nodes,
  /// split at `breakpoints` and refined inside `zoom`.
  static KernelNodes panels(const CDKernel& kern, std::size_t m,
                            const std::vector<double>& breakpoints,
                            std::optional<Interval> zoom = std::nullopt);

  const CDKernel& kernel() const noexcept { return *kern_; }
  std::size_t size() const noexcept { return x_.size(); }
  const std::vector<double>& x() const noexcept { return x_; }
  const std::vector<double>& omega() const noexcept { return omega_; }
  /// M x (n+1).
  const Eigen::MatrixXd& phi() const noexcept { return phi_; }
  /// omega_i K_n(x_i, x_i).
  const Eigen::VectorXd& diagonal() const noexcept { return diag_; }

  /// f evaluated at the nodes.
  Eigen::VectorXd sample(const std::function<double(double)>& f) const;

  /// sqrt(omega_i) K_n(x_i, x) / sqrt(K_n(x, x)) for every node. The squares sum
  /// to one up to quadrature error (reproducing property).
  Eigen::VectorXd normalized_section(double x) const;

  /// 1/2 sum_{i,k} (f_i - f_k)^2 G_ik^2 with G_ik = sqrt(omega_i omega_k) K_n(x_i, x_k),
  /// off-diagonal entries by the Christoffel-Darboux formula.
  double symmetric_variance(const Eigen::VectorXd& f) const;

  /// sum f_i^2 d_i - ||Phi_n^T diag(f) Phi_n||_F^2.
  double two_term_variance(const Eigen::VectorXd& f) const;

  /// log det(I + Phi_n^T diag(g) Phi_n) and the sign of the determinant.
  std::pair<double, int> log_det(const Eigen::VectorXd& g) const;

 private:
  KernelNodes() = default;
  void build(const CDKernel& kern, std::vector<double> u, std::vector<double> log_omega,
             std::optional<Chart> chart);

  const CDKernel* kern_ = nullptr;
  std::optional<Chart> chart_;
  std::vector<double> u_, x_, omega_;
  Eigen::MatrixXd phi_;
  Eigen::VectorXd diag_;
};

/// How a family of quadrature-backed quantities is resolved.
struct NodePlan {
  std::size_t m = 0;
  bool gauss = false;  // single exact pass with the measure's Gauss rule
  std::vector<double> breakpoints;
  std::optional<Interval> zoom;
};

/// Evaluates `eval` on successively doubled node sets until two successive
/// results agree within rtol * scale (componentwise, scale reported by eval).
/// Gauss plans run once. Throws ResolutionError past m = 16n + 1024.
std::vector<double> converge(
    const CDKernel& kern, const NodePlan& plan,
    const std::function<std::vector<double>(const KernelNodes&, double& scale)>& eval,
    double rtol = 1e-9);

}  // namespace ope
