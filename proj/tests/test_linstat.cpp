#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "ope/errors.hpp"
#include "ope/linstat.hpp"
#include "random_functions.hpp"

using namespace ope;

namespace {

// For polynomial f the statistic's mean and variance are read off the
// truncated Jacobi matrix: mean = tr(P f(J)), var = sum_{j<n<=k} f(J)_{jk}^2.
std::pair<double, double> jacobi_matrix_oracle(const Measure& mu, std::size_t n, const std::vector<double>& c) {
  const std::size_t deg = c.size() - 1;
  const std::size_t D = n + deg + 2;
  const auto rc = mu.recurrence(D + 1);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(D, D);
  for (std::size_t k = 0; k < D; ++k) {
    J(k, k) = rc.a(k);
    if (k + 1 < D) J(k, k + 1) = J(k + 1, k) = rc.b(k + 1);
  }
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(D, D), P = Eigen::MatrixXd::Identity(D, D);
  for (double ck : c) {
    F += ck * P;
    P = P * J;
  }
  double mean = 0.0, var = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    mean += F(j, j);
    for (std::size_t k = n; k < D; ++k) var += F(j, k) * F(j, k);
  }
  return {mean, var};
}

}  // namespace

TEST(Linstat, MeanAndVarianceMatchJacobiMatrixOracle) {
  const std::vector<std::vector<double>> polys{{0, 1}, {0, 0, 1}, {0.3, -1, 0.5, 2}, {1, 0, -2, 0, 1}};
  for (const auto& mu : {Measure::chebyshev1st(), Measure::legendre(), Measure::jacobi(0.7, -0.2),
                         Measure::varying_gaussian(9)}) {
    for (std::size_t n : {1, 3, 9, 30}) {
      const CDKernel kern(mu, n);
      for (const auto& c : polys) {
        const auto f = polynomial_function(c);
        const auto [m, v] = jacobi_matrix_oracle(*mu, n, c);
        EXPECT_NEAR(exact_mean(kern, f), m, 1e-10 * (1 + std::abs(m)));
        EXPECT_NEAR(exact_variance(kern, f), v, 1e-10 * (1 + v));
      }
    }
  }
}

TEST(Linstat, KnownValues) {
  const auto sq = make_test_function("square");
  EXPECT_NEAR(exact_mean(CDKernel(Measure::chebyshev1st(), 20), sq), 10.25, 1e-10);
  EXPECT_NEAR(exact_variance(CDKernel(Measure::chebyshev1st(), 20), make_test_function("identity")), 0.25, 1e-12);
  EXPECT_NEAR(exact_variance(CDKernel(Measure::legendre(), 2), make_test_function("identity")), 4.0 / 15.0, 1e-12);
}

TEST(Linstat, VarianceProperties) {
  RngStream rng(3, 0);
  const CDKernel kern(Measure::legendre(), 14);
  for (int i = 0; i < 10; ++i) {
    const auto f = testfns::random_bounded_function(rng);
    const double v = exact_variance(kern, f);
    EXPECT_GE(v, -1e-12);
    TestFunction g = f;
    g.evaluator = [e = f.evaluator](double x) { return 3.0 * e(x) - 7.0; };
    EXPECT_NEAR(exact_variance(kern, g), 9.0 * v, 1e-9 * (1 + v));
    EXPECT_NEAR(commutator_hs_norm_sq(kern, f), 2.0 * v, 1e-9 * (1 + v));
  }
  EXPECT_NEAR(exact_variance(kern, make_test_function("constant", {{"c", 4.0}})), 0.0, 1e-12);
}

TEST(Linstat, DiscontinuousFunctionResolves) {
  const CDKernel kern(Measure::chebyshev1st(), 40);
  const auto step = make_test_function("step", {{"at", 0.2}});
  const double v = exact_variance(kern, step);
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 2.0 * 40);
  // Exchanging lo and hi leaves the variance unchanged.
  EXPECT_NEAR(exact_variance(kern, make_test_function("step", {{"at", 0.2}, {"lo", 1.0}, {"hi", 0.0}})), v, 1e-9);
}

TEST(Linstat, MgfBasics) {
  const CDKernel kern(Measure::legendre(), 8);
  const auto c = make_test_function("constant", {{"c", 0.5}});
  EXPECT_NEAR(mgf(kern, c, 0.3).log_mgf, 0.3 * 0.5 * 8, 1e-10);
  EXPECT_EQ(mgf(kern, c, 0.0).mgf, 1.0);
  const auto id = make_test_function("identity");
  // Jensen: log E e^{tX} >= t E X.
  for (double t : {-1.0, 0.4, 2.0}) EXPECT_GE(mgf(kern, id, t).log_mgf, t * exact_mean(kern, id) - 1e-12);
  const auto series = log_mgf_series(kern, id, {0.4, -1.0});
  EXPECT_NEAR(series[0], mgf(kern, id, 0.4).log_mgf, 1e-9);
}

TEST(TestFunctions, LipschitzConstantsDominateSlopes) {
  RngStream rng(4, 0);
  for (int i = 0; i < 40; ++i) {
    const auto f = testfns::random_bounded_function(rng, true);
    ASSERT_TRUE(f.lipschitz.has_value());
    double slope = 0.0;
    for (double x = -3; x < 3; x += 1e-3) slope = std::max(slope, std::abs(f(x + 1e-3) - f(x)) / 1e-3);
    EXPECT_LE(slope, *f.lipschitz * (1 + 1e-6) + 1e-9) << f.spec.dump();
    double sup = 0.0;
    for (double x = -3; x < 3; x += 1e-3) sup = std::max(sup, std::abs(f(x)));
    EXPECT_LE(sup, f.sup_norm * (1 + 1e-12)) << f.spec.dump();
  }
  const auto b = make_test_function("bump", {{"width", 2.0}, {"height", 3.0}});
  EXPECT_NEAR(*b.lipschitz, 2.1704 * 3.0 / 2.0, 1e-3);
}

TEST(TestFunctions, Breakpoints) {
  const auto s = make_test_function("step", {{"at", 0.3}});
  EXPECT_EQ(s.discontinuities, std::vector<double>{0.3});
  const auto t = make_test_function("tent", {{"center", 0.1}, {"width", 0.4}});
  EXPECT_EQ(t.kinks.size(), 3u);
  const auto cp = make_test_function("clipped_polynomial", {{"coeffs", {0, 0, 1}}, {"sup_norm", 0.25}});
  ASSERT_EQ(cp.kinks.size(), 2u);
  EXPECT_NEAR(std::abs(cp.kinks[0]), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(cp(2.0), 0.25);
}

TEST(ScaledStatistic, AtRankRescales) {
  ScaledStatistic s = ScaledStatistic::from_json(
      {{"f", {{"key", "tent"}, {"params", {{"center", 0.0}, {"width", 1.0}}}}}, {"alpha", 0.5}, {"xstar", 0.2}});
  const auto g = s.at_rank(16);
  EXPECT_DOUBLE_EQ(g(0.2 + 0.5 / 4.0), s.f(0.5));
  EXPECT_NEAR(*g.lipschitz, 4.0 * *s.f.lipschitz, 1e-12);
  EXPECT_NEAR(g.kinks[1], 0.2, 1e-15);
}

TEST(ScaledStatistic, JsonValidation) {
  EXPECT_THROW(ScaledStatistic::from_json({{"f", "identity"}, {"alpha", 1.0}}), ConfigurationError);
  EXPECT_THROW(ScaledStatistic::from_json({{"f", "nope"}}), ConfigurationError);
  EXPECT_THROW(ScaledStatistic::from_json({{"f", "bump"}, {"sup_norm", 0.1}}), ConfigurationError);
  EXPECT_THROW(ScaledStatistic::from_json({{"f", "bump"}, {"lipschitz", 0.1}}), ConfigurationError);
  const auto poly = ScaledStatistic::from_json({{"f", {1.0, 2.0}}});
  EXPECT_TRUE(std::isinf(poly.f.sup_norm));
  const auto clipped = ScaledStatistic::from_json({{"f", "square"}, {"sup_norm", 0.5}});
  EXPECT_DOUBLE_EQ(clipped.f.sup_norm, 0.5);
  const auto back = ScaledStatistic::from_json(clipped.to_json());
  EXPECT_DOUBLE_EQ(back.f(3.0), 0.5);
}
