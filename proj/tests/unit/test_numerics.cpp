#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "pdlab/errors.hpp"
#include "pdlab/numerics.hpp"

using namespace pdlab::numerics;

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  for (std::size_t n : {1u, 2u, 5u, 12u, 20u}) {
    const auto& rule = gauss_legendre(n);
    ASSERT_EQ(rule.nodes.size(), n);
    for (std::size_t deg = 0; deg < 2 * n; ++deg) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], static_cast<double>(deg));
      const double exact = deg % 2 == 1 ? 0.0 : 2.0 / static_cast<double>(deg + 1);
      EXPECT_NEAR(s, exact, 1e-14) << "n=" << n << " deg=" << deg;
    }
  }
}

TEST(Integrate, MatchesTanhSinhOracle) {
  boost::math::quadrature::tanh_sinh<double> oracle;
  auto f = [](double x) { return std::exp(-x) * std::sqrt(x) / (1.0 + x * x); };
  const double expected = oracle.integrate(f, 0.0, 5.0);
  const auto r = integrate(f, 0.0, 5.0, {0.0, 1e-12, 4000});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, expected, 1e-11);
}

TEST(Integrate, BreakpointsHandleKinks) {
  auto f = [](double x) { return std::abs(x - 0.3) + (x > 0.7 ? 1.0 : 0.0); };
  const double breaks[] = {0.0, 0.3, 0.7, 1.0};
  const auto r = integrate_with_breaks(f, breaks);
  // 0.045 + 0.245 + 0.3
  EXPECT_NEAR(r.value, 0.59, 1e-13);
}

TEST(Bisect, FindsRootAndRejectsMissingSignChange) {
  const auto r = bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0);
  EXPECT_NEAR(r.root, std::numbers::sqrt2, 1e-15);
  EXPECT_THROW(bisect([](double x) { return x * x + 1.0; }, 0.0, 2.0), pdlab::NumericError);
}

TEST(GoldenSection, MaximizesConcaveFunction) {
  const auto r = golden_section_max([](double x) { return -(x - 0.37) * (x - 0.37); }, 0.0, 1.0);
  EXPECT_NEAR(r.argmax, 0.37, 1e-8);
}

TEST(Reductions, LogSumExpIsOverflowFree) {
  const std::vector<double> xs{1000.0, 1000.0};
  EXPECT_NEAR(log_sum_exp(xs), 1000.0 + std::log(2.0), 1e-12);
  EXPECT_EQ(log_add_exp(-INFINITY, 3.0), 3.0);
  EXPECT_TRUE(std::isinf(log_sum_exp(std::vector<double>{})));
}

TEST(Reductions, PairwiseSumAndMoments) {
  std::vector<double> xs(1000, 0.1);
  EXPECT_NEAR(pairwise_sum(xs), 100.0, 1e-12);
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(mean(v), 2.5);
  EXPECT_DOUBLE_EQ(sample_variance(v), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(median(v), 2.5);
}

TEST(KolmogorovSmirnov, DistanceOfUniformGrid) {
  std::vector<double> xs;
  for (int i = 0; i < 10; ++i) xs.push_back((i + 0.5) / 10.0);
  EXPECT_NEAR(ks_distance(xs, [](double x) { return x; }), 0.05, 1e-15);
  EXPECT_NEAR(ks_critical_01(10000), 0.0163, 1e-12);
}

TEST(NormalCdf, KnownValues) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(normal_cdf(2.0, 0.0, 2.0), normal_cdf(1.0), 1e-16);
}

TEST(ChebyshevPanel, InterpolatesAndDifferentiates) {
  const auto xs = ChebyshevPanel::nodes(0.5, 2.0, 16);
  ASSERT_DOUBLE_EQ(xs.front(), 2.0);
  ASSERT_DOUBLE_EQ(xs.back(), 0.5);
  // exp is entire, so 16 nodes reach rounding level.
  std::vector<double> vals;
  for (double x : xs) vals.push_back(std::exp(x));
  const ChebyshevPanel panel(0.5, 2.0, vals);
  for (double x : {0.5, 0.61, 1.0, 1.77, 2.0}) {
    EXPECT_NEAR(panel(x), std::exp(x), 1e-13);
    EXPECT_NEAR(panel.derivative(x), std::exp(x), 1e-10);
  }
  EXPECT_NEAR(panel.derivative(xs[3]), std::exp(xs[3]), 1e-11);
}

TEST(ChebyshevPanel, GeometricConvergenceNearSingularity) {
  // log has a branch point at 0: the error on [0.5, 2] shrinks roughly like 3^-n.
  double prev = INFINITY;
  for (std::size_t n : {8u, 16u, 32u}) {
    const auto xs = ChebyshevPanel::nodes(0.5, 2.0, n);
    std::vector<double> vals;
    for (double x : xs) vals.push_back(std::log(x));
    const ChebyshevPanel panel(0.5, 2.0, vals);
    double err = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double x = 0.5 + 1.5 * i / 100.0;
      err = std::max(err, std::abs(panel(x) - std::log(x)));
    }
    EXPECT_LT(err, prev / 100.0);
    prev = err;
  }
  EXPECT_LT(prev, 1e-13);
}
