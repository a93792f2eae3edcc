#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ope/bounds.hpp"
#include "ope/errors.hpp"

using namespace ope;

TEST(ConstantA, IndependentSeriesOracle) {
  // Summed independently in long double to far past double precision.
  long double s = 0.0L;
  const long double q = std::numbers::e_v<long double> / 3.0L;
  for (int m = 0; m < 2000; ++m) s += std::pow(q, m) * std::pow(m + 2.0L, 1.5L);
  const double oracle = static_cast<double>(2.0L * std::exp(2.0L) * s);
  const auto& A = constant_A();
  EXPECT_NEAR(A.value, 7818.976554834875, 1e-8);
  EXPECT_NEAR(A.value, oracle, 1e-9 * oracle);
  EXPECT_LT(A.tail_bound, 1e-8);
  EXPECT_GT(A.terms_used, 100u);
  EXPECT_NEAR(2.0 * std::exp(2.0) * std::pow(2.0, 1.5), 41.79881339297344, 1e-12);
}

TEST(Bounds, GlobalClosedForm) {
  const double A = constant_A().value;
  const auto r = bound_global(100, 1.0, 0.5);
  EXPECT_EQ(r.regime, Regime::Gaussian);
  EXPECT_NEAR(r.log_rhs, std::log(2.0) - 100 * 0.25 / (8 * A), 1e-14);
  EXPECT_NEAR(r.rhs, 2.0 * std::exp(-25.0 / (8 * A)), 1e-14);
}

TEST(Bounds, RegimeSwitch) {
  const double A = constant_A().value;
  // Gaussian rate eps/(4A var) against exponential rate 1/(6 sup): switch at eps = 2A var / (3 sup).
  const double var = 0.25, sup = 1.0, cut = 4.0 * A * var / (6.0 * sup);
  EXPECT_EQ(bound_general(var, sup, 0.9 * cut).regime, Regime::Gaussian);
  EXPECT_EQ(bound_general(var, sup, 1.1 * cut).regime, Regime::Exponential);
  const auto far = bound_general(var, sup, 100 * A);
  EXPECT_EQ(far.rhs, 0.0);
  EXPECT_NEAR(far.log_rhs, std::log(2.0) - 100 * A / 6.0, 1e-9 * A);
}

TEST(Bounds, MonotoneAndInRange) {
  double prev = 3.0;
  for (double eps = 0.01; eps < 50; eps *= 1.7) {
    const auto r = bound_global(40, 2.0, eps);
    EXPECT_LE(r.rhs, 2.0);
    EXPECT_GE(r.rhs, 0.0);
    EXPECT_LT(r.rhs, prev);
    prev = r.rhs;
  }
  EXPECT_LT(bound_global(200, 1.0, 0.5).rhs, bound_global(100, 1.0, 0.5).rhs);
  // The rank bound weakens as the rank grows.
  EXPECT_GT(bound_rank(200, 1.0, 0.5).log_rhs, bound_rank(100, 1.0, 0.5).log_rhs);
}

TEST(Bounds, MesoscopicVariants) {
  const auto plain = bound_meso(100, 0.5, 1.0, 1.0);
  EXPECT_FALSE(plain.asymptotic_only);
  const auto lip = bound_meso(100, 0.5, 1.0, 1.0, 2.0, 0.5);
  EXPECT_TRUE(lip.asymptotic_only);
  EXPECT_TRUE(bound_local(100, 0.5, 1.0, 1.0).asymptotic_only);
  EXPECT_THROW(bound_meso(100, 1.0, 1.0, 1.0), PreconditionError);
  const auto j = lip.to_json();
  EXPECT_TRUE(j.contains("log_rhs"));
  EXPECT_TRUE(j.contains("regime"));
}

TEST(Bounds, Preconditions) {
  EXPECT_THROW(bound_global(0, 1.0, 0.1), PreconditionError);
  EXPECT_THROW(bound_global(10, 0.0, 0.1), PreconditionError);
  EXPECT_THROW(bound_global(10, 1.0, -0.1), PreconditionError);
  EXPECT_THROW(bound_lipschitz(0.0, 1.0, 0.1), PreconditionError);
}

TEST(Bounds, RecurrenceRatio) {
  const auto c = classical_recurrence(FamilyTag::chebyshev1st(), 30);
  EXPECT_DOUBLE_EQ(recurrence_ratio_bound(c, 20), 0.5);
  const auto g = classical_recurrence(FamilyTag::varying_gaussian(10), 30);
  EXPECT_NEAR(recurrence_ratio_bound(g, 10), 1.0, 1e-15);
}

TEST(MgfInequality, HoldsAndGuardsRange) {
  const CDKernel kern(Measure::legendre(), 12);
  const auto f = make_test_function("cosine", {{"freq", 2.0}});
  for (double t : {-1.0 / 3, -0.1, 0.05, 1.0 / 3}) {
    const auto r = mgf_inequality_check(kern, f, t);
    EXPECT_TRUE(r.holds);
    EXPECT_GE(r.lhs, 0.0);
  }
  EXPECT_THROW(mgf_inequality_check(kern, f, 0.5), PreconditionError);
}

TEST(TailEstimate, DominatedBySmallRun) {
  const CDKernel kern(Measure::chebyshev1st(), 10);
  const auto f = make_test_function("square", {{"sup_norm", 1.0}});
  const auto t = tail_probability_mc(kern, f, 0.05, 1000, RngStream(5, 0), 10.0, 2);
  EXPECT_EQ(t.replicas, 1000u);
  EXPECT_LE(t.interval.lo, t.empirical);
  EXPECT_GE(t.interval.hi, t.empirical);
  EXPECT_TRUE(t.dominated);
  EXPECT_THROW(tail_probability_mc(kern, f, 0.05, 999, RngStream(5, 0), 10.0), PreconditionError);
}
