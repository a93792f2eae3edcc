#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "ope/errors.hpp"
#include "ope/linstat.hpp"
#include "ope/sampler.hpp"
#include "ope/statistics.hpp"

using namespace ope;

TEST(Rng, DeterministicStreams) {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  for (int i = 0; i < 10; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_NE(RngStream(42, 3).next_u64(), c.next_u64());
  EXPECT_EQ(a.substream(7).next_u64(), RngStream(42, 3).substream(7).next_u64());
  EXPECT_NE(a.substream(7).next_u64(), a.substream(8).next_u64());
}

TEST(Rng, ChiMoments) {
  RngStream r(1, 0);
  double s = 0.0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const double c = r.chi(6.0);
    s += c * c;
  }
  EXPECT_NEAR(s / N, 6.0, 0.05);
}

TEST(Sampler, ShapeAndDeterminism) {
  const CDKernel kern(Measure::legendre(), 15);
  const OpeSampler sampler(kern);
  RngStream a(9, 1), b(9, 1);
  const auto s1 = sampler.sample(a);
  const auto s2 = sampler.sample(b);
  ASSERT_EQ(s1.points.size(), 15u);
  EXPECT_EQ(s1.points, s2.points);
  for (double x : s1.points) {
    EXPECT_GE(x, -1.0);
    EXPECT_LE(x, 1.0);
  }
  EXPECT_EQ(s1.seed, 9u);
  EXPECT_EQ(s1.method, SampleMethod::Hkpv);
}

TEST(Sampler, RankOneIsReferenceMeasure) {
  // One point of the ensemble is distributed as mu itself (arcsine law here).
  const CDKernel kern(Measure::chebyshev1st(), 1);
  const OpeSampler sampler(kern);
  std::vector<double> xs;
  RngStream rng(77, 0);
  for (int i = 0; i < 4000; ++i) xs.push_back(sampler.sample(rng).points[0]);
  const double ks = ks_statistic(xs, [](double x) { return 0.5 + std::asin(x) / std::numbers::pi; });
  EXPECT_LT(ks, 1.63 / std::sqrt(4000.0));
}

TEST(Sampler, ReferenceSamplerMatchesCdf) {
  std::vector<double> xs;
  RngStream rng(78, 0);
  const auto mu = Measure::jacobi(1.0, 0.0);  // density (1 - x) / 2
  for (int i = 0; i < 4000; ++i) xs.push_back(sample_reference(*mu, rng));
  const double ks = ks_statistic(xs, [](double x) { return 1.0 - (1 - x) * (1 - x) / 4.0; });
  EXPECT_LT(ks, 1.63 / std::sqrt(4000.0));
}

TEST(Sampler, MeanOfSecondMomentMatchesQuadrature) {
  const std::size_t n = 4;
  const CDKernel kern(Measure::chebyshev1st(), n);
  const auto f = make_test_function("square");
  const OpeSampler sampler(kern);
  std::vector<double> v;
  RngStream base(31, 0);
  for (int i = 0; i < 4000; ++i) {
    RngStream r = base.substream(i);
    v.push_back(eval_statistic(sampler.sample(r), f));
  }
  EXPECT_LT(std::abs(sample_mean(v) - exact_mean(kern, f)), 4 * standard_error(v));
}

class TridiagonalCalibration : public ::testing::TestWithParam<std::size_t> {};

TEST_P(TridiagonalCalibration, SecondMomentMatchesQuadrature) {
  const std::size_t n = GetParam();
  const CDKernel kern(Measure::varying_gaussian(n), n);
  const auto f = make_test_function("square");
  std::vector<double> v;
  RngStream base(123, n);
  for (int i = 0; i < 20000; ++i) {
    RngStream r = base.substream(i);
    v.push_back(eval_statistic(sample_gue_tridiagonal(n, r), f));
  }
  const double exact = exact_mean(kern, f);
  EXPECT_NEAR(exact, static_cast<double>(n), 1e-9);
  EXPECT_LT(std::abs(sample_mean(v) - exact), 4 * standard_error(v));
}

INSTANTIATE_TEST_SUITE_P(Ranks, TridiagonalCalibration, ::testing::Values(2, 5));

TEST(Sampler, Preconditions) {
  EXPECT_THROW(OpeSampler(CDKernel(Measure::jacobi(-0.7, 0.0), 3)), PreconditionError);
  EXPECT_THROW(parse_method("gibbs"), ConfigurationError);
  EXPECT_EQ(parse_method(method_name(SampleMethod::Tridiagonal)), SampleMethod::Tridiagonal);
}

TEST(Sampler, CsvLayout) {
  RngStream r(1, 2);
  std::vector<SampleConfiguration> s{sample_gue_tridiagonal(3, r), sample_gue_tridiagonal(3, r)};
  std::ostringstream os;
  write_samples_csv(os, s, Measure::varying_gaussian(3)->to_json());
  std::istringstream in(os.str());
  std::string line;
  int data = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.starts_with("#")) continue;
    if (!header) {
      EXPECT_EQ(line, "replicate_id,point_index,value");
      header = true;
      continue;
    }
    ++data;
  }
  EXPECT_EQ(data, 6);
}
