#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "ope/errors.hpp"
#include "ope/measures.hpp"
#include "ope/rng.hpp"

using namespace ope;

namespace {

// Independent Stieltjes oracle: a Gauss-Legendre rule from the textbook
// Legendre recurrence, reweighted by a polynomial weight, then the discrete
// Stieltjes procedure run directly on the node set.
std::pair<std::vector<double>, std::vector<double>> stieltjes_oracle(
    const std::function<double(double)>& w, std::size_t depth, int m = 200) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int k = 1; k < m; ++k) J(k, k - 1) = J(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<double> x(m), lam(m);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    x[i] = es.eigenvalues()(i);
    lam[i] = 2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i) * w(x[i]);
    total += lam[i];
  }
  for (double& l : lam) l /= total;
  std::vector<double> a, b;
  std::vector<double> prev(m, 0.0), cur(m, 1.0);
  double bk = 0.0;
  for (std::size_t k = 0; k < depth; ++k) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < m; ++i) {
      num += lam[i] * x[i] * cur[i] * cur[i];
      den += lam[i] * cur[i] * cur[i];
    }
    const double ak = num / den;
    std::vector<double> next(m);
    for (int i = 0; i < m; ++i) next[i] = (x[i] - ak) * cur[i] - bk * prev[i];
    double nn = 0.0;
    for (int i = 0; i < m; ++i) nn += lam[i] * next[i] * next[i];
    const double bnext = std::sqrt(nn);
    for (int i = 0; i < m; ++i) next[i] /= bnext;
    a.push_back(ak);
    b.push_back(bnext);
    prev = cur;
    cur = next;
    bk = bnext;
  }
  return {a, b};
}

}  // namespace

TEST(Recurrence, ChebyshevClosedForm) {
  const auto c = classical_recurrence(FamilyTag::chebyshev1st(), 40);
  EXPECT_NEAR(c.b(1), std::sqrt(0.5), 1e-15);
  for (std::size_t k = 0; k < 40; ++k) EXPECT_NEAR(c.a(k), 0.0, 1e-15);
  for (std::size_t k = 2; k <= 40; ++k) EXPECT_NEAR(c.b(k), 0.5, 1e-15);
}

TEST(Recurrence, LegendreClosedForm) {
  const auto c = classical_recurrence(FamilyTag::legendre(), 50);
  for (std::size_t k = 1; k <= 50; ++k) {
    const double kk = static_cast<double>(k);
    EXPECT_NEAR(c.b(k), kk / std::sqrt(4 * kk * kk - 1), 1e-15);
  }
}

TEST(Recurrence, JacobiHalfIsSecondKindChebyshev) {
  const auto c = classical_recurrence(FamilyTag::jacobi(0.5, 0.5), 30);
  for (std::size_t k = 1; k <= 30; ++k) EXPECT_NEAR(c.b(k), 0.5, 1e-14);
}

TEST(Recurrence, JacobiMatchesIndependentStieltjes) {
  // (1 - x)^1 (1 + x)^2 is a cubic, so the 200-node oracle is exact up to roundoff.
  const auto c = classical_recurrence(FamilyTag::jacobi(1.0, 2.0), 30);
  const auto [a, b] = stieltjes_oracle([](double x) { return (1 - x) * (1 + x) * (1 + x); }, 30);
  for (std::size_t k = 0; k < 30; ++k) {
    EXPECT_NEAR(c.a(k), a[k], 1e-12) << k;
    EXPECT_NEAR(c.b(k + 1), b[k], 1e-12) << k;
  }
}

TEST(Recurrence, VaryingGaussian) {
  const auto c = classical_recurrence(FamilyTag::varying_gaussian(8), 20);
  for (std::size_t k = 1; k <= 20; ++k) EXPECT_NEAR(c.b(k), std::sqrt(k / 8.0), 1e-15);
}

TEST(Recurrence, DiscretizedUniformMatchesLegendre) {
  const auto mu = Measure::discretized("uniform", {-1, 1}, 2000, 40);
  const auto ref = classical_recurrence(FamilyTag::legendre(), 40);
  const auto got = mu->recurrence(40);
  for (std::size_t k = 1; k <= 40; ++k) EXPECT_NEAR(got.b(k), ref.b(k), 1e-10) << k;
}

TEST(Recurrence, DiscretizedGaussianOnLineMatchesHermite) {
  const auto mu = Measure::discretized("gaussian", Interval::line(), 1500, 30);
  const auto got = mu->recurrence(30);
  for (std::size_t k = 1; k <= 30; ++k) EXPECT_NEAR(got.b(k), std::sqrt(static_cast<double>(k)), 1e-9) << k;
}

TEST(Recurrence, SmallGridExamples) {
  const auto leg = stieltjes_recurrence([](double) { return 0.5; }, {-1, 1}, 5, 250);
  for (std::size_t k = 1; k <= 5; ++k) EXPECT_NEAR(leg.b(k), k / std::sqrt(4.0 * k * k - 1), 1e-8);
  const auto cheb = stieltjes_recurrence(
      [](double x) { return 1.0 / (std::numbers::pi * std::sqrt(1 - x * x)); }, {-1, 1}, 10, 500);
  const auto ref = classical_recurrence(FamilyTag::chebyshev1st(), 10);
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_NEAR(cheb.a(k), 0.0, 1e-12);
    EXPECT_NEAR(cheb.b(k + 1), ref.b(k + 1), 1e-8);
  }
  EXPECT_THROW(stieltjes_recurrence([](double) { return 1.0; }, {-1, 1}, 10, 100), PreconditionError);
  EXPECT_THROW(stieltjes_recurrence([](double) { return 0.0; }, {-1, 1}, 2, 100), DegenerateMeasureError);
}

TEST(Recurrence, GridDoublingDoesNotIncreaseError) {
  // Jacobi(0.3, -0.4) has genuine algebraic endpoint behaviour.
  const auto ref = classical_recurrence(FamilyTag::jacobi(0.3, -0.4), 8);
  auto w = [](double x) { return std::pow(1 - x, 0.3) * std::pow(1 + x, -0.4); };
  double prev = 1.0;
  for (std::size_t grid : {400, 800, 1600, 3200}) {
    const auto c = stieltjes_recurrence(w, {-1, 1}, 8, grid);
    double err = 0.0;
    for (std::size_t k = 1; k <= 8; ++k) err = std::max(err, std::abs(c.b(k) - ref.b(k)));
    // Halves or better until the roundoff floor.
    EXPECT_LE(err, std::max(0.5 * prev, 5e-11)) << grid;
    prev = err;
  }
}

TEST(Recurrence, SemicircleWeightMatchesJacobiHalf) {
  const auto mu = Measure::discretized("semicircle", {-1, 1}, 2000, 30);
  const auto got = mu->recurrence(30);
  for (std::size_t k = 1; k <= 30; ++k) EXPECT_NEAR(got.b(k), 0.5, 1e-9) << k;
}

TEST(Recurrence, LazyExtensionIsConsistent) {
  const auto mu = Measure::discretized("quartic", Interval::line(), 1000, 20);
  const auto short_c = mu->recurrence(20);
  const auto long_c = mu->recurrence(60);
  ASSERT_GE(long_c.depth(), 60u);
  for (std::size_t k = 1; k <= 20; ++k) EXPECT_NEAR(short_c.b(k), long_c.b(k), 1e-10);
}

TEST(Recurrence, ExtensionIndependentOfRequestOrder) {
  const auto fresh = Measure::discretized("quartic", Interval::line(), 1000, 20);
  const auto warmed = Measure::discretized("quartic", Interval::line(), 1000, 20);
  (void)warmed->recurrence(70);
  (void)warmed->recurrence(35);
  const auto a = fresh->recurrence(30), b = warmed->recurrence(30);
  for (std::size_t k = 0; k < 30; ++k) {
    EXPECT_EQ(a.a(k), b.a(k));
    EXPECT_EQ(a.b(k + 1), b.b(k + 1));
  }
}

TEST(Orthonormal, ChebyshevIsCosine) {
  const auto c = classical_recurrence(FamilyTag::chebyshev1st(), 40);
  for (double x : {-0.93, -0.2, 0.0, 0.41, 0.999}) {
    const double th = std::acos(x);
    EXPECT_NEAR(eval_orthonormal(c, 0, x), 1.0, 1e-15);
    for (std::size_t k = 1; k < 40; ++k)
      EXPECT_NEAR(eval_orthonormal(c, k, x), std::sqrt(2.0) * std::cos(k * th), 1e-12);
  }
}

TEST(Orthonormal, ScaledPrefixSurvivesOverflow) {
  const auto c = classical_recurrence(FamilyTag::legendre(), 801);
  const auto p = eval_orthonormal_prefix_scaled(c, 800, 50.0);
  ASSERT_EQ(p.values.size(), 801u);
  for (double v : p.values) ASSERT_TRUE(std::isfinite(v));
  EXPECT_GT(p.log_scale, 0.0);
  // Ratio recurrence r_j = p_j / p_{j-1} gives log p_800 without overflow.
  double log_p = 0.0, r = (50.0 - c.a(0)) / c.b(1);
  log_p += std::log(std::abs(r));
  for (std::size_t j = 1; j < 800; ++j) {
    r = ((50.0 - c.a(j)) - c.b(j) / r) / c.b(j + 1);
    log_p += std::log(std::abs(r));
  }
  EXPECT_NEAR(std::log(std::abs(p.values[800])) + p.log_scale, log_p, 1e-9 * log_p);
}

TEST(Gauss, ExactForLowMoments) {
  const auto c = classical_recurrence(FamilyTag::chebyshev1st(), 20);
  const auto rule = gauss_quadrature(c, 10);
  double m0 = 0, m2 = 0, m4 = 0, m19 = 0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double x = rule.nodes[i], w = rule.weights[i];
    m0 += w;
    m2 += w * x * x;
    m4 += w * std::pow(x, 4);
    m19 += w * std::pow(x, 19);
  }
  EXPECT_NEAR(m0, 1.0, 1e-14);
  EXPECT_NEAR(m2, 0.5, 1e-14);
  EXPECT_NEAR(m4, 3.0 / 8.0, 1e-14);
  EXPECT_NEAR(m19, 0.0, 1e-14);
}

TEST(Gauss, LeadingRatioIsOffDiagonal) {
  const auto c = classical_recurrence(FamilyTag::legendre(), 20);
  EXPECT_DOUBLE_EQ(leading_ratio(c, 7), c.b(7));
}

TEST(MeasureApi, WeightsAndSupport) {
  const auto cheb = Measure::chebyshev1st();
  EXPECT_NEAR(cheb->weight(0.0), 1.0 / std::numbers::pi, 1e-15);
  EXPECT_EQ(cheb->weight(1.5), 0.0);
  EXPECT_TRUE(std::isinf(cheb->log_weight(-2.0)));
  const auto g = Measure::varying_gaussian(4);
  EXPECT_NEAR(g->weight(0.5), std::sqrt(4 / (2 * std::numbers::pi)) * std::exp(-0.5), 1e-14);
  EXPECT_FALSE(g->support().bounded());
}

TEST(MeasureApi, LocalLogWeightAtEndpoints) {
  const auto cheb = Measure::chebyshev1st();
  // x rounds to 1 but the distance to the endpoint is known exactly.
  const double d = 1e-20;
  const double lw = cheb->log_weight_local(1.0, 2.0, d);
  EXPECT_NEAR(lw, -std::log(std::numbers::pi) - 0.5 * std::log(2.0 * d), 1e-12);
}

TEST(MeasureApi, JsonRoundTrip) {
  for (const auto& mu : {Measure::chebyshev1st(), Measure::legendre(), Measure::jacobi(0.3, -0.2),
                         Measure::varying_gaussian(12), Measure::discretized("quartic", Interval::line(), 3200)}) {
    const auto back = Measure::from_json(mu->to_json());
    EXPECT_EQ(back->to_json(), mu->to_json());
    EXPECT_NEAR(back->recurrence(10).b(10), mu->recurrence(10).b(10), 1e-14);
  }
}

TEST(MeasureApi, RejectsBadInput) {
  EXPECT_THROW(Measure::from_json({{"family", "hermite_plus"}}), ConfigurationError);
  EXPECT_THROW(Measure::from_json({{"family", "discretized"}, {"params", {{"weight", "nope"}}}}),
               ConfigurationError);
  EXPECT_THROW(Measure::jacobi(-1.5, 0.0), Error);
  EXPECT_THROW(weight_registry("missing"), ConfigurationError);
}

TEST(Properties, OrthonormalityAndRecurrenceConsistency) {
  RngStream rng(8, 0);
  for (const auto& mu : {Measure::chebyshev1st(), Measure::legendre(), Measure::jacobi(0.25, 1.5),
                         Measure::varying_gaussian(5), Measure::discretized("quartic", Interval::line(), 3200)}) {
    const auto c = mu->recurrence(30);
    const auto rule = gauss_quadrature(c, 11);
    for (std::size_t i = 0; i <= 10; ++i) {
      for (std::size_t j = 0; j <= 10; ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
          s += rule.weights[q] * eval_orthonormal(c, i, rule.nodes[q]) * eval_orthonormal(c, j, rule.nodes[q]);
        EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-10) << i << "," << j;
      }
    }
    const Interval s = mu->support();
    for (int t = 0; t < 100; ++t) {
      const double x = s.bounded() ? s.lo + s.length() * rng.uniform() : 4.0 * rng.uniform() - 2.0;
      const auto p = eval_orthonormal_prefix(c, 20, x);
      for (std::size_t k = 1; k < 20; ++k) {
        const double res = x * p[k] - c.a(k) * p[k] - c.b(k) * p[k - 1] - c.b(k + 1) * p[k + 1];
        const double scale = std::abs(x * p[k]) + std::abs(c.b(k) * p[k - 1]) + std::abs(c.b(k + 1) * p[k + 1]) + 1.0;
        EXPECT_LT(std::abs(res), 1e-10 * scale);
      }
    }
  }
}

TEST(Properties, EvenWeightHasZeroDiagonal) {
  for (const auto& mu : {Measure::discretized("quartic", Interval::line(), 3200),
                         Measure::discretized("semicircle", {-1, 1}, 3200), Measure::jacobi(0.7, 0.7)}) {
    const auto c = mu->recurrence(40);
    for (std::size_t k = 0; k < 40; ++k) EXPECT_NEAR(c.a(k), 0.0, 1e-12) << k;
  }
}
