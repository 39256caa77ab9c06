#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "pdlab/errors.hpp"
#include "pdlab/rate_functions.hpp"

using namespace pdlab::rates;
using pdlab::ExtendedReal;

namespace {

const double kLog2 = std::log(2.0);

// Brute-force grid maximum of c s^m + log(1 - s) on [0, 1).
double grid_sup(double c, int m, int n = 200000) {
  double best = 0.0;
  for (int i = 1; i < n; ++i) {
    const double s = static_cast<double>(i) / n;
    best = std::max(best, c * std::pow(s, m) + std::log1p(-s));
  }
  return best;
}

}  // namespace

TEST(RateI, Values) {
  EXPECT_EQ(rate_I(0.0), ExtendedReal(0.0));
  EXPECT_NEAR(rate_I(0.5).value(), 0.693147180559945, 1e-15);
  EXPECT_TRUE(rate_I(1.0).is_pos_inf());
  EXPECT_TRUE(rate_I(1.5).is_pos_inf());
  EXPECT_TRUE(rate_I(-0.1).is_pos_inf());
}

TEST(RateI, MidpointConvexity) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> unif(0.0, 0.99);
  for (int i = 0; i < 1000; ++i) {
    const double a = unif(gen), b = unif(gen);
    EXPECT_LE(rate_I(0.5 * (a + b)).value(), 0.5 * (rate_I(a).value() + rate_I(b).value()) + 1e-15);
  }
}

TEST(CgfLambda, Values) {
  EXPECT_EQ(cgf_Lambda(1.0), 0.0);
  EXPECT_NEAR(cgf_Lambda(2.0), 0.306852819440055, 1e-15);
  EXPECT_EQ(cgf_Lambda(-5.0), 0.0);
  EXPECT_EQ(cgf_Lambda(0.3), 0.0);
}

TEST(LegendreTransform, Duality) {
  EXPECT_EQ(legendre_transform(0.0), 0.0);
  EXPECT_NEAR(legendre_transform(0.5), kLog2, 1e-9);
  EXPECT_NEAR(legendre_transform(0.9), 2.302585092994046, 1e-9);
  for (int i = 1; i <= 99; ++i) {
    const double x = 0.99 * i / 100.0;
    EXPECT_NEAR(legendre_transform(x), rate_I(x).value(), 1e-9) << x;
  }
  EXPECT_THROW(legendre_transform(1.0), pdlab::DomainError);
  EXPECT_THROW(legendre_transform(-0.5), pdlab::DomainError);
}

TEST(RateIk, Values) {
  for (int i = 0; i < 100; ++i) {
    const double x = i / 100.0;
    EXPECT_EQ(rate_Ik(1, x), rate_I(x));
  }
  EXPECT_NEAR(rate_Ik(2, 0.25).value(), kLog2, 1e-15);
  EXPECT_TRUE(rate_Ik(2, 0.6).is_pos_inf());
  EXPECT_TRUE(rate_Ik(2, 0.5).is_pos_inf());
  EXPECT_THROW(rate_Ik(0, 0.1), pdlab::DomainError);
}

TEST(RateIk, ContractionThroughEqualCoordinates) {
  // min {S_k(p) : p in the ordered simplex, p_k = x} is attained at
  // p_1 = ... = p_k = x and equals I_k(x).
  for (int k : {2, 3}) {
    for (double x : {0.05, 0.1, 0.2, 0.3}) {
      if (x >= 1.0 / k) continue;
      double best = INFINITY;
      constexpr double kStep = 1e-3;
      for (double a = x; a < 1.0; a += kStep) {
        std::vector<double> p(k, x);
        p[0] = a;
        const auto v = rate_Sn(p);
        if (v.is_finite()) best = std::min(best, v.value());
      }
      EXPECT_NEAR(best, rate_Ik(k, x).value(), 1e-12);
    }
  }
}

TEST(RateSn, Values) {
  const std::vector<double> zeros(4, 0.0);
  const std::vector<double> a{0.3, 0.2};
  const std::vector<double> b{0.5, 0.5};
  const std::vector<double> unordered{0.2, 0.3};
  EXPECT_EQ(rate_Sn(zeros), ExtendedReal(0.0));
  EXPECT_NEAR(rate_Sn(a).value(), kLog2, 1e-15);
  EXPECT_TRUE(rate_Sn(b).is_pos_inf());
  EXPECT_TRUE(rate_Sn(unordered).is_pos_inf());
}

TEST(RateSn, MonotoneExtension) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(3);
    for (double& x : p) x = unif(gen) / 4.0;
    std::sort(p.begin(), p.end(), std::greater<>());
    const double q = unif(gen) * p.back();
    auto ext = p;
    ext.push_back(q);
    EXPECT_LE(rate_Sn(p), rate_Sn(ext));
  }
}

TEST(RateS, IntervalSemantics) {
  std::vector<double> geometric;
  for (int k = 1; k <= 30; ++k) geometric.push_back(std::ldexp(1.0, -k));
  const auto g = rate_S(geometric, std::ldexp(1.0, -30), TailKind::exact);
  EXPECT_TRUE(g.is_point());
  EXPECT_TRUE(g.point().is_pos_inf());

  const std::vector<double> zeros(3, 0.0);
  EXPECT_EQ(rate_S(zeros, 0.0, TailKind::exact).point(), ExtendedReal(0.0));

  const std::vector<double> a{0.3, 0.2};
  EXPECT_NEAR(rate_S(a, 0.0, TailKind::exact).point().value(), kLog2, 1e-15);
  EXPECT_NEAR(rate_S_finite(a).value(), kLog2, 1e-15);

  const auto tight = rate_S(a, 1e-12, TailKind::upper_bound);
  EXPECT_TRUE(tight.is_point());
  const auto wide = rate_S(a, 0.1, TailKind::upper_bound);
  EXPECT_FALSE(wide.is_point());
  EXPECT_NEAR(wide.lower.value(), kLog2, 1e-15);
  EXPECT_NEAR(wide.upper.value(), std::log(1.0 / 0.4), 1e-15);

  const auto amb = rate_S(a, 0.6, TailKind::upper_bound);
  EXPECT_TRUE(amb.ambiguous);
  EXPECT_TRUE(amb.upper.is_pos_inf());
  EXPECT_FALSE(amb.is_point());
  EXPECT_THROW(rate_S(a, -1.0), pdlab::DomainError);
}

TEST(RateHomozygosity, ValuesAndContraction) {
  EXPECT_EQ(rate_homozygosity(2, 0.0), ExtendedReal(0.0));
  EXPECT_NEAR(rate_homozygosity(2, 0.25).value(), kLog2, 1e-15);
  EXPECT_TRUE(rate_homozygosity(2, 1.5).is_pos_inf());
  for (int m : {2, 3}) {
    for (double y : {0.1, 0.25, 0.5}) {
      const auto r = homozygosity_contraction_min(m, y);
      EXPECT_NEAR(r.value, rate_homozygosity(m, y).value(), 1e-4);
      EXPECT_EQ(r.equal_atoms, 0);
      EXPECT_NEAR(r.lead_atom, std::pow(y, 1.0 / m), 1e-12);
    }
  }
}

TEST(SelectionSup, MinusPhiIsEmptyConfiguration) {
  for (double c : {0.1, 1.0, 10.0}) {
    const auto s = selection_sup(c, HFunctional::minus_phi(2));
    EXPECT_EQ(s.sup_value, 0.0);
    EXPECT_EQ(s.shape, VariationalSolution::Shape::empty);
    // Oracle: grid over (total mass s, number of equal atoms j).
    double best = -INFINITY;
    for (int j = 1; j <= 20; ++j) {
      for (int i = 0; i < 1000; ++i) {
        const double s_tot = i / 1000.0;
        best = std::max(best, -c * s_tot * s_tot / j + std::log1p(-s_tot));
      }
    }
    EXPECT_NEAR(best, 0.0, 1e-15);
  }
}

TEST(SelectionSup, PlusPhi2) {
  const auto at2 = selection_sup(2.0, HFunctional::plus_phi(2));
  EXPECT_EQ(at2.sup_value, 0.0);
  EXPECT_NEAR(grid_sup(2.0, 2), 0.0, 1e-15);

  const auto s = selection_sup(2.5, HFunctional::plus_phi(2));
  EXPECT_EQ(s.shape, VariationalSolution::Shape::single_atom);
  EXPECT_NEAR(s.s_star, (1.0 + std::sqrt(1.0 - 2.0 / 2.5)) / 2.0, 1e-12);
  EXPECT_NEAR(s.s_star, 0.7236, 1e-4);
  EXPECT_NEAR(s.sup_value, 0.0230862131, 1e-9);
  EXPECT_NEAR(s.sup_value, grid_sup(2.5, 2), 1e-8);
}

TEST(SelectionSup, PlusPhiHigherOrderMatchesGrid) {
  for (double c : {3.0, 5.0, 9.0}) {
    const auto s = selection_sup(c, HFunctional::plus_phi(3));
    EXPECT_NEAR(s.sup_value, grid_sup(c, 3), 1e-8);
  }
}

TEST(SelectionSup, CustomHeuristic) {
  auto h = HFunctional::make_custom([](std::span<const double> q) { return phi(2, q); }, "phi2");
  const auto s = selection_sup(3.0, h);
  EXPECT_TRUE(s.approximate);
  EXPECT_NEAR(s.sup_value, selection_sup(3.0, HFunctional::plus_phi(2)).sup_value, 1e-6);
  EXPECT_THROW(selection_sup(0.0, HFunctional::plus_phi(2)), pdlab::DomainError);
}

TEST(C0, RootAndBracket) {
  const auto r = solve_c0();
  EXPECT_GT(r.c0, 2.0);
  EXPECT_GT(r.c0, 2.2);
  EXPECT_LT(r.c0, 2.5);
  EXPECT_LE(std::abs(c0_equation(r.c0)), 1e-12);
  EXPECT_LT(r.f_lo, 0.0);
  EXPECT_GT(r.f_hi, 0.0);
  EXPECT_NEAR(r.f_lo, -kLog2 + 0.5, 1e-15);
  EXPECT_LT(c0_equation(2.2), 0.0);
  EXPECT_GT(c0_equation(2.5), 0.0);
}

TEST(C0, BranchAgreesWithVariationalSolver) {
  for (double c : {2.5, 3.0, 5.0}) {
    const auto branch = plus_phi2_sup_branch(c);
    EXPECT_TRUE(branch.above_c0);
    EXPECT_NEAR(branch.value, selection_sup(c, HFunctional::plus_phi(2)).sup_value, 1e-9);
    EXPECT_NEAR(branch.value, plus_phi2_constant(c), 1e-15);
  }
  for (double c : {1.0, 2.0, 2.4}) {
    EXPECT_EQ(plus_phi2_sup_branch(c).value, 0.0);
    EXPECT_EQ(selection_sup(c, HFunctional::plus_phi(2)).sup_value, 0.0);
  }
  const double c0 = solve_c0().c0;
  const auto at = plus_phi2_sup_branch(c0);
  EXPECT_LE(at.boundary_gap, 1e-9);
  EXPECT_NEAR(selection_sup(c0, HFunctional::plus_phi(2)).sup_value, 0.0, 1e-9);
}

TEST(RateSelection, Branches) {
  const std::vector<double> p{0.3, 0.2};
  const std::vector<double> zero{};

  SelectionRegime sub;
  sub.growth = GrowthClass::sublinear;
  EXPECT_EQ(rate_selection(p, sub), rate_S_finite(p));
  EXPECT_NEAR(rate_selection(p, sub).value(), kLog2, 1e-15);

  SelectionRegime lin;
  lin.growth = GrowthClass::linear;
  lin.c = 1.7;
  lin.h = HFunctional::minus_phi(2);
  EXPECT_NEAR(rate_selection(p, lin).value(), 1.7 * (0.09 + 0.04) + kLog2, 1e-14);
  EXPECT_EQ(rate_selection(zero, lin), ExtendedReal(0.0));

  SelectionRegime sup;
  sup.growth = GrowthClass::superlinear;
  sup.h = HFunctional::minus_phi(2);
  EXPECT_TRUE(rate_selection(p, sup).is_pos_inf());
  EXPECT_EQ(rate_selection(zero, sup), ExtendedReal(0.0));
  sup.h = HFunctional::plus_phi(2);
  const std::vector<double> atom{1.0};
  EXPECT_EQ(rate_selection(atom, sup), ExtendedReal(0.0));
  EXPECT_TRUE(rate_selection(p, sup).is_pos_inf());

  sup.h = HFunctional::make_custom([](std::span<const double>) { return 0.0; });
  EXPECT_THROW(rate_selection(p, sup), pdlab::UnsupportedError);
  sup.maximizer = std::vector<double>{0.5};
  const std::vector<double> half{0.5, 0.0};
  EXPECT_EQ(rate_selection(half, sup), ExtendedReal(0.0));

  lin.c = -1.0;
  EXPECT_THROW(rate_selection(p, lin), pdlab::DomainError);
}

TEST(RateSelection, LinearPlusPhi2IsNonNegativeAndZeroAtOptimizer) {
  for (double c : {1.5, 2.0, 3.0, 5.0}) {
    SelectionRegime lin;
    lin.growth = GrowthClass::linear;
    lin.c = c;
    lin.h = HFunctional::plus_phi(2);
    const auto sol = selection_sup(c, lin.h);
    const std::vector<double> opt = sol.optimizer;
    EXPECT_NEAR(rate_selection(opt, lin).value(), 0.0, 1e-12) << c;
    std::mt19937_64 gen(static_cast<std::uint64_t>(c * 10));
    std::uniform_real_distribution<double> unif(0.0, 0.5);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> p{unif(gen), unif(gen), unif(gen) / 2.0};
      std::sort(p.begin(), p.end(), std::greater<>());
      EXPECT_GE(rate_selection(p, lin).value(), 0.0);
    }
  }
}

TEST(RateTable, Csv) {
  std::ostringstream os;
  const auto xs = rate_table_grid(4);
  write_rate_table_csv(os, xs);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "x,I,I2,I3,S2_diag\r");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 4);
  EXPECT_NE(os.str().find("0.5,0.69314718055994529,inf,inf,inf"), std::string::npos);
}
