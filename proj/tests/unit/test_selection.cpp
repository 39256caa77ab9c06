#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "pdlab/errors.hpp"
#include "pdlab/rate_functions.hpp"
#include "pdlab/selection.hpp"

using namespace pdlab::selection;
using pdlab::rates::GrowthClass;
using pdlab::rates::HFunctional;

namespace {

double phi2_of(const pdlab::sampling::RankedFrequencies& r) { return pdlab::rates::phi(2, r.p); }

TiltConfig base_config(double theta, double gamma, std::size_t n = 2000) {
  TiltConfig cfg;
  cfg.theta = theta;
  cfg.h = HFunctional::minus_phi(2);
  cfg.alpha = {1.0, gamma};
  cfg.n_samples = n;
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST(Alpha, Form) {
  EXPECT_DOUBLE_EQ((AlphaForm{2.0, 0.5})(16.0), 8.0);
  EXPECT_DOUBLE_EQ((AlphaForm{3.0, 0.0})(123.0), 3.0);
}

TEST(TiltWeights, ZeroAlphaIsUniform) {
  const auto e = tilt_weights_from_values({0.1, 0.7, 0.3, 0.9}, 0.0);
  EXPECT_TRUE(e.uniform);
  for (double w : e.normalized_weights) EXPECT_EQ(w, 0.25);
  EXPECT_EQ(e.ess, 4.0);
}

TEST(TiltWeights, ConstantHIsUniform) {
  const auto e = tilt_weights_from_values(std::vector<double>(10, -0.3), 50.0);
  EXPECT_TRUE(e.uniform);
  for (double w : e.normalized_weights) EXPECT_EQ(w, 0.1);
}

TEST(TiltWeights, NormalizationAndExtremes) {
  const auto e = tilt_weights_from_values({-0.1, -0.5, -0.2}, 1000.0);
  double s = 0.0;
  for (double w : e.normalized_weights) s += w;
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_NEAR(e.normalized_weights[0], 1.0, 1e-15);
  EXPECT_TRUE(e.degenerate);
  const auto moderate = tilt_weights_from_values({0.0, std::log(3.0)}, 1.0);
  EXPECT_NEAR(moderate.normalized_weights[0], 0.25, 1e-15);
  EXPECT_NEAR(moderate.normalized_weights[1], 0.75, 1e-15);
  EXPECT_NEAR(moderate.ess, 1.0 / (0.0625 + 0.5625), 1e-12);
  EXPECT_THROW(tilt_weights_from_values({}, 1.0), pdlab::DomainError);
}

TEST(TiltedEnsemble, TopWeightHasSmallestPhi2) {
  auto cfg = base_config(5.0, 1.0, 500);
  const auto e = sample_tilted_ensemble(cfg);
  const auto top = std::max_element(e.normalized_weights.begin(), e.normalized_weights.end()) -
                   e.normalized_weights.begin();
  const auto min_phi = std::max_element(e.h_values.begin(), e.h_values.end()) - e.h_values.begin();
  EXPECT_EQ(top, min_phi);
}

TEST(TiltedEnsemble, ConstantFunctionHasUnitExpectation) {
  const auto e = sample_tilted_ensemble(base_config(5.0, 1.0, 500));
  const auto est = tilted_expectation(e, [](const auto&) { return 1.0; });
  EXPECT_NEAR(est.value, 1.0, 1e-14);
  EXPECT_NEAR(est.se, 0.0, 1e-14);
}

TEST(TiltedEnsemble, NeutralPhi2Mean) {
  auto cfg = base_config(5.0, 0.0, 4000);
  cfg.alpha = {1e-300, 0.0};
  const auto e = sample_tilted_ensemble(cfg);
  const auto est = tilted_expectation(e, phi2_of);
  EXPECT_NEAR(est.value, 1.0 / 6.0, 3.0 * est.se);
}

TEST(TiltedEnsemble, ZeroAlphaReproducesNeutralMean) {
  const auto drawn = sample_tilted_ensemble(base_config(5.0, 0.0, 400));
  const auto neutral = tilt_weights_from_values(drawn.h_values, 0.0);
  EXPECT_TRUE(neutral.uniform);
  std::vector<double> phi2(drawn.h_values.size());
  double s = 0.0;
  for (std::size_t i = 0; i < phi2.size(); ++i) {
    phi2[i] = -drawn.h_values[i];
    s += phi2[i];
  }
  EXPECT_NEAR(tilted_expectation(neutral, phi2).value, s / 400.0, 1e-14);
}

TEST(TiltedEnsemble, StrongerSelectionLowersPhi2) {
  double prev = INFINITY;
  const auto neutral = tilted_expectation(sample_tilted_ensemble(base_config(5.0, -50.0)), phi2_of);
  for (double gamma : {0.0, 1.0, 2.0}) {
    const auto est = tilted_expectation(sample_tilted_ensemble(base_config(5.0, gamma)), phi2_of);
    EXPECT_LT(est.value, prev) << gamma;
    EXPECT_LE(est.value, neutral.value + 3.0 * neutral.se);
    prev = est.value;
  }
}

TEST(TiltedEnsemble, DeterministicAndValidated) {
  const auto a = sample_tilted_ensemble(base_config(3.0, 1.0, 200));
  const auto b = sample_tilted_ensemble(base_config(3.0, 1.0, 200));
  EXPECT_EQ(a.log_weights, b.log_weights);
  std::ostringstream os;
  write_ensemble_csv(os, a);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "sample_id,h,log_weight,weight\r");
  auto bad = base_config(3.0, 1.0, 10);
  EXPECT_THROW(sample_tilted_ensemble(bad), pdlab::DomainError);
  bad = base_config(-1.0, 1.0);
  EXPECT_THROW(sample_tilted_ensemble(bad), pdlab::DomainError);
}

TEST(Phase, Table) {
  const auto minus = HFunctional::minus_phi(2);
  const auto plus = HFunctional::plus_phi(2);

  const auto sub = phase_classify(regime_from_alpha(1.0, 0.5, minus));
  EXPECT_EQ(to_string(sub.label), "neutral-rate");
  EXPECT_EQ(to_string(sub.branch), "n/a");

  const auto lin = phase_classify(regime_from_alpha(1.0, 1.0, minus));
  EXPECT_EQ(to_string(lin.label), "tilted-rate");
  EXPECT_EQ(lin.constant, 0.0);

  const auto deg = phase_classify(regime_from_alpha(1.0, 1.5, minus));
  EXPECT_EQ(to_string(deg.label), "degenerate-rate");
  const std::vector<double> zero{};
  const std::vector<double> p{0.3, 0.2};
  EXPECT_EQ(deg.rate(zero), pdlab::ExtendedReal(0.0));
  EXPECT_TRUE(deg.rate(p).is_pos_inf());

  const auto below = phase_classify(regime_from_alpha(2.0, 1.0, plus));
  EXPECT_EQ(below.branch, C0Branch::below_c0);
  EXPECT_EQ(below.constant, 0.0);
  const auto above = phase_classify(regime_from_alpha(3.0, 1.0, plus));
  EXPECT_EQ(to_string(above.branch), "above-c0");
  EXPECT_NEAR(above.constant, pdlab::rates::plus_phi2_constant(3.0), 1e-15);
  EXPECT_GT(above.constant, 0.0);
  const auto at = phase_classify(regime_from_alpha(pdlab::rates::solve_c0().c0, 1.0, plus));
  EXPECT_EQ(at.branch, C0Branch::at_c0);
  EXPECT_NEAR(at.constant, 0.0, 1e-9);

  EXPECT_THROW(regime_from_alpha(0.0, 1.0, plus), pdlab::DomainError);
}

TEST(Phase, RegimeFromAlphaGrowth) {
  const auto h = HFunctional::minus_phi(2);
  EXPECT_EQ(regime_from_alpha(1.0, -2.0, h).growth, GrowthClass::sublinear);
  EXPECT_EQ(regime_from_alpha(1.0, 0.999, h).growth, GrowthClass::sublinear);
  EXPECT_EQ(regime_from_alpha(1.0, 1.0, h).growth, GrowthClass::linear);
  EXPECT_EQ(regime_from_alpha(1.0, 1.001, h).growth, GrowthClass::superlinear);
}

TEST(Gillespie, SmallRunShape) {
  GillespieConfig cfg;
  cfg.cases = {{-0.5, {20.0, 40.0}}, {0.0, {40.0}}};
  cfg.n_samples = 400;
  cfg.seed = 9;
  const auto r = verify_gillespie(cfg);
  EXPECT_EQ(r.rows.size(), 3u);
  for (const auto& row : r.rows) {
    EXPECT_GT(row.alpha, 0.0);
    EXPECT_GE(row.var_r, 0.0);
  }
  const auto has = [&](const std::string& name) {
    return std::any_of(r.checks.begin(), r.checks.end(), [&](const auto& c) { return c.name == name; });
  };
  EXPECT_TRUE(has("var_r_decreasing"));
  EXPECT_TRUE(has("mean_log_r"));
  std::ostringstream js;
  write_gillespie_json(js, r);
  EXPECT_TRUE(nlohmann::json::parse(js.str()).is_object());
  const auto again = verify_gillespie(cfg);
  std::ostringstream a, b;
  write_gillespie_csv(a, r);
  write_gillespie_csv(b, again);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Gillespie, Validation) {
  GillespieConfig cfg;
  cfg.cases = {{-0.5, {20.0}}};
  EXPECT_THROW(verify_gillespie(cfg), pdlab::DomainError);
  cfg.cases = {};
  EXPECT_THROW(verify_gillespie(cfg), pdlab::DomainError);
}
