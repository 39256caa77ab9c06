#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "pdlab/errors.hpp"
#include "pdlab/exact_laws.hpp"
#include "pdlab/numerics.hpp"
#include "pdlab/sampling.hpp"

using namespace pdlab::exact;
namespace bq = boost::math::quadrature;

namespace {

// Independent evaluation of the moment integral with Boost's E1 and
// exp-sinh quadrature.
double moment_oracle(int k, int n, double theta) {
  auto f = [&](double u) {
    if (!(u > 0.0)) return 0.0;
    const double j = boost::math::expint(1, u);
    if (!(j > 0.0)) return 0.0;
    return std::exp((n - 1) * std::log(u) + (k - 1) * std::log(j) - std::lgamma(static_cast<double>(k)) - u -
                    theta * j);
  };
  bq::exp_sinh<double> integrator;
  const double integral = integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-13);
  return std::exp(k * std::log(theta) + std::lgamma(theta) - std::lgamma(theta + n)) * integral;
}

// Integral of the grid density over (bottom, 1), band by band.
double density_integral(const DensityGrid& g) {
  bq::tanh_sinh<double> ts;
  double total = 0.0;
  for (int k = 1; k <= g.band_count(); ++k) {
    const double lo = 1.0 / (k + 1.0), hi = 1.0 / k;
    total += ts.integrate([&](double p) { return g.density(p); }, lo, hi, 1e-13);
  }
  return total;
}

}  // namespace

TEST(ExpIntegralJ, MatchesBoostE1) {
  for (double u : {1e-8, 1e-3, 0.2, 0.999, 1.0, 1.001, 3.0, 17.0, 80.0}) {
    EXPECT_NEAR(exp_integral_J(u), boost::math::expint(1, u), 1e-10 * boost::math::expint(1, u)) << u;
  }
  EXPECT_NEAR(exp_integral_J(1.0), 0.2193839, 1e-7);
}

TEST(ExpIntegralJ, BoundsAndDivergence) {
  for (double u : {1e-3, 0.5, 1.0, 5.0, 40.0}) EXPECT_LE(exp_integral_J(u), std::exp(-u) / u);
  EXPECT_GT(exp_integral_J(1e-6), 12.0);
  EXPECT_THROW(exp_integral_J(0.0), pdlab::DomainError);
  EXPECT_THROW(exp_integral_J(-1.0), pdlab::DomainError);
}

TEST(ExpIntegralJ, DerivativeRelation) {
  for (double u : {0.5, 1.0, 5.0}) {
    const double h = 1e-5;
    const double fd = (exp_integral_J(u + h) - exp_integral_J(u - h)) / (2 * h);
    EXPECT_NEAR(fd, -std::exp(-u) / u, 1e-6);
  }
}

TEST(ExpIntegralJ, LogFormHasNoUnderflow) {
  EXPECT_NEAR(log_exp_integral_J(50.0), std::log(boost::math::expint(1, 50.0)), 1e-12);
  // Asymptotically J(u) ~ e^{-u}/u.
  EXPECT_NEAR(log_exp_integral_J(2000.0), -2000.0 - std::log(2000.0) + std::log1p(-1.0 / 2000.0), 1e-6);
}

TEST(MomentPk, MatchesIndependentOracle) {
  for (auto [k, n, theta] : {std::tuple{1, 1, 1.0}, {1, 2, 3.0}, {2, 1, 5.0}, {3, 2, 0.7}, {1, 1, 50.0}}) {
    const double v = moment_pk({k, n, theta});
    EXPECT_NEAR(v, moment_oracle(k, n, theta), 1e-8 * v) << k << " " << n << " " << theta;
  }
  // E[P_1] at theta = 1 is the Golomb-Dickman constant.
  EXPECT_NEAR(moment_pk({1, 1, 1.0}), 0.62432998854355087, 1e-9);
}

TEST(MomentPk, PartialSumsApproachOne) {
  // The K largest frequencies carry at least the first K GEM frequencies, so
  // E[sum_{k>K} P_k] <= E[W_K] = (theta/(theta+1))^K.
  const double theta = 5.0;
  const int K = static_cast<int>(std::ceil(std::log(1e-4) / std::log(theta / (theta + 1.0))));
  double s = 0.0;
  for (int k = 1; k <= K; ++k) s += moment_pk({k, 1, theta});
  EXPECT_GE(s, 0.999);
  EXPECT_LE(s, 1.0 + 1e-8);
}

TEST(MomentPk, StrictlyDecreasingInRank) {
  for (double theta : {0.5, 4.0, 30.0}) {
    double prev = 1.0;
    for (int k = 1; k <= 8; ++k) {
      const double v = moment_pk({k, 1, theta});
      EXPECT_LT(v, prev);
      prev = v;
    }
  }
}

TEST(MomentPk, MeanAsymptoticsTrend) {
  // theta E[P_1] / log theta approaches 1 from below, slowly. The sequence
  // dips between 50 and 100 and increases from 100 on.
  std::vector<double> dist;
  for (double theta : {100.0, 200.0, 400.0, 1000.0, 10000.0}) {
    dist.push_back(std::abs(1.0 - theta * moment_pk({1, 1, theta}) / std::log(theta)));
  }
  for (std::size_t i = 1; i < dist.size(); ++i) EXPECT_LT(dist[i], dist[i - 1]);
  EXPECT_LE(std::abs(1.0 - 400.0 * moment_pk({1, 1, 400.0}) / std::log(400.0)), 0.25);
  EXPECT_GT(50.0 * moment_pk({1, 1, 50.0}) / std::log(50.0), 100.0 * moment_pk({1, 1, 100.0}) / std::log(100.0));
}

TEST(MomentPk, MatchesMonteCarloAtTheta10) {
  constexpr std::size_t kN = 100000;
  const auto batch = pdlab::sampling::summarize_batch(10.0, pdlab::sampling::ResidualTarget{}, 10, 0, kN, 1, {});
  std::vector<double> p1(kN);
  for (std::size_t i = 0; i < kN; ++i) p1[i] = batch[i].top[0];
  const double se = std::sqrt(pdlab::numerics::sample_variance(p1) / kN);
  EXPECT_NEAR(pdlab::numerics::mean(p1), moment_pk({1, 1, 10.0}), 3.0 * se);
}

TEST(MomentPk, RejectsInvalidQueries) {
  EXPECT_THROW(moment_pk({0, 1, 1.0}), pdlab::DomainError);
  EXPECT_THROW(moment_pk({1, 0, 1.0}), pdlab::DomainError);
  EXPECT_THROW(moment_pk({1, 1, -2.0}), pdlab::DomainError);
}

TEST(HomozygosityMoment, ClosedFormAndLimits) {
  for (double theta : {0.0, 0.5, 5.0, 100.0}) EXPECT_DOUBLE_EQ(homozygosity_moment(2, theta), 1.0 / (1.0 + theta));
  EXPECT_DOUBLE_EQ(homozygosity_moment(2, 0.0), 1.0);
  EXPECT_NEAR(homozygosity_moment(3, 2.0), 2.0 / (3.0 * 4.0), 1e-15);
  double prev = 0.0;
  for (double theta : {10.0, 100.0, 1000.0}) {
    const double r = theta * theta * homozygosity_moment(3, theta) / 2.0;
    EXPECT_GT(r, prev);
    EXPECT_LT(r, 1.0);
    prev = r;
  }
  EXPECT_THROW(homozygosity_moment(1, 1.0), pdlab::DomainError);
}

TEST(HomozygosityMoment, MatchesMonteCarloAtTheta5) {
  constexpr std::size_t kN = 100000;
  const std::vector<int> powers{2};
  const auto batch = pdlab::sampling::summarize_batch(5.0, pdlab::sampling::ResidualTarget{}, 55, 0, kN, 0, powers);
  std::vector<double> h(kN);
  for (std::size_t i = 0; i < kN; ++i) h[i] = batch[i].power_sums[0];
  const double se = std::sqrt(pdlab::numerics::sample_variance(h) / kN);
  EXPECT_NEAR(pdlab::numerics::mean(h), 1.0 / 6.0, 3.0 * se);
}

TEST(DensityGrid, TopBandClosedForm) {
  const auto g = g1_density(1.0);
  for (double p : {0.5, 0.6, 0.75, 0.99}) EXPECT_NEAR(g.density(p), 1.0 / p, 1e-14);
  EXPECT_NEAR(tail_p1(g, 0.6), std::log(1.0 / 0.6), 1e-8);
  const auto g3 = g1_density(3.0);
  for (double p : {0.55, 0.8}) EXPECT_NEAR(g3.density(p), 3.0 * std::pow(1.0 - p, 2.0) / p, 1e-13);
}

TEST(DensityGrid, NormalizationAcrossTheta) {
  for (double theta : {0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
    const auto g = g1_density(theta);
    EXPECT_LT(g.unresolved_mass(), 1e-8);
    EXPECT_NEAR(density_integral(g), 1.0, 1e-6) << theta;
    for (const auto& node : g.nodes()) ASSERT_GE(node.g1, 0.0);
  }
}

TEST(DensityGrid, TailEndpoints) {
  const auto g = g1_density(2.0);
  EXPECT_EQ(tail_p1(g, 0.0), 1.0);
  EXPECT_EQ(tail_p1(g, 1.0), 0.0);
  EXPECT_NEAR(g.cdf(0.3) + g.tail(0.3), 1.0, 1e-15);
}

TEST(DensityGrid, TopBandSandwich) {
  for (double theta : {2.0, 10.0, 100.0, 1000.0}) {
    const auto g = g1_density(theta);
    for (double x : {0.5, 0.6, 0.9}) {
      const double lt = g.log_tail(x);
      EXPECT_GE(lt, theta * std::log1p(-x) - 1e-12);
      EXPECT_LE(lt, theta * std::log1p(-x) - std::log(x) + 1e-12);
    }
  }
  const auto g = g1_density(100.0);
  EXPECT_NEAR(-g.log_tail(0.6) / 100.0, std::log(1.0 / 0.4), 0.01 * std::log(1.0 / 0.4));
}

TEST(DensityGrid, FunctionalEquationResidual) {
  std::mt19937_64 gen(3);
  for (double theta : {1.0, 2.0, 5.0}) {
    const auto g = g1_density(theta);
    for (int k = 2; k <= std::min(6, g.band_count()); ++k) {
      std::uniform_real_distribution<double> unif(1.0 / (k + 1.0), 1.0 / k);
      for (int i = 0; i < 200; ++i) {
        const double p = unif(gen);
        const double lhs = g.density_from_tail(p) * p * std::pow(1.0 - p, 1.0 - theta);
        const double rhs = theta * g.cdf(std::min(p / (1.0 - p), 1.0));
        ASSERT_NEAR(lhs, rhs, 1e-6 * theta) << "theta=" << theta << " p=" << p;
      }
    }
  }
}

TEST(DensityGrid, ResolutionRefinementAgrees) {
  const auto a = g1_density(5.0, 32);
  const auto b = g1_density(5.0, 128);
  for (double x : {0.05, 0.12, 0.2, 0.3, 0.45}) EXPECT_NEAR(a.log_tail(x), b.log_tail(x), 1e-9);
  EXPECT_THROW(g1_density(5.0, 8), pdlab::DomainError);
  EXPECT_THROW(g1_density(0.0), pdlab::DomainError);
}

TEST(DensityGrid, CsvExport) {
  const auto g = g1_density(1.0, 16);
  std::ostringstream os;
  write_grid_csv(os, g);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\r')), "band_k,p,g1,tail");
  EXPECT_GT(std::count(s.begin(), s.end(), '\n'), 16);
}

TEST(GnDensity, ReducesToG1AtNodes) {
  const auto g = g1_density(2.0);
  for (const auto& node : g.nodes()) {
    if (node.p <= g.bottom() || node.p >= 1.0) continue;
    const double p[] = {node.p};
    EXPECT_NEAR(gn_density(2.0, p, g), g.density(node.p), 1e-8 * g.density(node.p));
  }
}

TEST(GnDensity, SupportAndErrors) {
  const auto g = g1_density(1.0);
  const double bad_order[] = {0.2, 0.3};
  const double too_much[] = {0.6, 0.5};
  const double negative[] = {0.3, -0.1};
  const double ok[] = {0.3, 0.2};
  EXPECT_EQ(gn_density(1.0, bad_order, g), 0.0);
  EXPECT_EQ(gn_density(1.0, too_much, g), 0.0);
  EXPECT_EQ(gn_density(1.0, negative, g), 0.0);
  EXPECT_GT(gn_density(1.0, ok, g), 0.0);
  EXPECT_THROW(gn_density(1.0, std::span<const double>{}, g), pdlab::DomainError);
  EXPECT_THROW(gn_density(2.0, ok, g), pdlab::DomainError);
}

TEST(GnDensity, TwoDimensionalNormalization) {
  const auto g = g1_density(1.0);
  bq::tanh_sinh<double> ts;
  auto inner = [&](double p1) {
    const double hi = std::min(p1, 1.0 - p1);
    return ts.integrate(
        [&](double p2) {
          const double p[] = {p1, p2};
          return gn_density(1.0, p, g);
        },
        0.0, hi, 1e-10);
  };
  const double total = ts.integrate(inner, 0.0, 0.5, 1e-9) + ts.integrate(inner, 0.5, 1.0, 1e-9);
  EXPECT_NEAR(total, 1.0, 1e-4);
}

TEST(MarginalPk, NormalizationAndSupport) {
  const auto g = g1_density(2.0);
  bq::gauss_kronrod<double, 15> gk;
  auto m2 = [&](double x) { return marginal_pk(2.0, 2, x, g); };
  const double total = gk.integrate(m2, 0.0, 1.0 / 3.0, 12, 1e-9) + gk.integrate(m2, 1.0 / 3.0, 0.5, 12, 1e-9);
  EXPECT_NEAR(total, 1.0, 1e-4);
  EXPECT_EQ(marginal_pk(2.0, 2, 0.55, g), 0.0);
  EXPECT_EQ(marginal_pk(2.0, 3, 0.34, g), 0.0);
  EXPECT_THROW(marginal_pk(2.0, 4, 0.1, g), pdlab::UnsupportedError);
  EXPECT_NEAR(rank_tail(g, 2, 0.0), 1.0, 1e-4);
}

TEST(MarginalPk, RankTwoDecayAtTheta50) {
  const auto g = g1_density(50.0);
  const double stat = -std::log(rank_tail(g, 2, 0.3)) / 50.0;
  EXPECT_NEAR(stat, std::log(1.0 / 0.4), 0.25 * std::log(1.0 / 0.4));
}

TEST(MarginalPk, RankTailsAreOrdered) {
  const auto g = g1_density(3.0);
  for (double x : {0.1, 0.2, 0.3}) {
    EXPECT_GE(rank_tail(g, 1, x), rank_tail(g, 2, x));
    if (x < 1.0 / 3.0) EXPECT_GE(rank_tail(g, 2, x), rank_tail(g, 3, x));
  }
}
