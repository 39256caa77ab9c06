#pragma once

// Selection-tilted PD(theta) represented by self-normalized importance
// weights over neutral samples, the density-ratio check across the three
// growth regimes of alpha(theta) = c theta^{3/2 + gamma}, and phase labels.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pdlab/extended_real.hpp"
#include "pdlab/rate_functions.hpp"
#include "pdlab/sampling.hpp"

namespace pdlab::selection {

/// alpha(theta) = c theta^gamma.
struct AlphaForm {
  double c = 1.0;
  double gamma = 0.0;
  double operator()(double theta) const;
};

struct TiltConfig {
  double theta = 1.0;
  rates::HFunctional h = rates::HFunctional::minus_phi(2);
  AlphaForm alpha;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  sampling::Truncation truncation = sampling::ResidualTarget{};
  /// Ranked entries kept per stored sample; H itself sees the full vector.
  std::size_t keep_top = 32;

  /// Throws DomainError listing every violated constraint
  /// (theta > 0, c > 0, n_samples >= 100, finite gamma).
  void validate() const;
};

struct TiltedEnsemble {
  std::vector<sampling::RankedFrequencies> samples;  ///< may be empty when built from values
  std::vector<double> h_values;
  std::vector<double> log_weights;         ///< normalized: log-sum-exp is 0
  std::vector<double> normalized_weights;  ///< sum to 1
  double ess = 0.0;
  bool uniform = false;     ///< all log weights equal; weights are exactly 1/n
  bool degenerate = false;  ///< ESS indistinguishable from 1

  std::size_t size() const { return h_values.size(); }
};

/// Weights proportional to exp(alpha * h_i), normalized via log-sum-exp.
TiltedEnsemble tilt_weights_from_values(std::vector<double> h_values, double alpha);

/// Evaluates H on each sample's ranked frequencies (residual contributes
/// nothing) and weights by exp(alpha H).
TiltedEnsemble tilt_weights(std::vector<sampling::RankedFrequencies> samples, const rates::HFunctional& h,
                            double alpha);

/// Draws config.n_samples neutral samples (stream i for sample i), evaluates H
/// on the full truncated vector and tilts by alpha(theta).
TiltedEnsemble sample_tilted_ensemble(const TiltConfig& config);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  bool unreliable = false;  ///< ESS below 1% of the sample count
};

/// Self-normalized estimate sum w_i f_i with delta-method standard error
/// sqrt(sum w_i^2 (f_i - estimate)^2). With uniform weights this is the plain
/// sample mean, computed by the same reduction as numerics::mean.
Estimate tilted_expectation(const TiltedEnsemble& ensemble, std::span<const double> f_values);
Estimate tilted_expectation(const TiltedEnsemble& ensemble,
                            const std::function<double(const sampling::RankedFrequencies&)>& f);

/// CSV columns: sample_id, h, log_weight, weight.
void write_ensemble_csv(std::ostream& os, const TiltedEnsemble& ensemble);

struct GillespieCase {
  double gamma = 0.0;
  std::vector<double> thetas;
};

struct GillespieConfig {
  double c = 0.5;
  std::vector<GillespieCase> cases;
  std::size_t n_samples = 10000;
  std::uint64_t seed = 0;
  sampling::Truncation truncation = sampling::ResidualTarget{};
  double mean_tol = 0.1;         ///< |mean log R + c^2|
  double variance_rel_tol = 0.25;  ///< |var log R - 2c^2| / 2c^2
  double ks_threshold = 0.05;    ///< log R versus N(-c^2, 2c^2)
  double median_threshold = 0.01;
  double denominator_rel_se = 0.1;

  /// The three regimes at the default calibration: gamma = 0 and 0.5 at
  /// theta = 200, gamma = -0.5 over {50, 200, 800}.
  static std::vector<GillespieCase> default_cases();
  void validate() const;
};

struct GillespieRow {
  double gamma = 0.0;
  double theta = 0.0;
  double alpha = 0.0;
  double mean_log_r = 0.0;
  double var_log_r = 0.0;
  double var_r = 0.0;
  double median_r = 0.0;
  double ks_log_r = 0.0;
  double denominator_rel_se = 0.0;
  bool denominator_unstable = false;
};

struct GillespieCheck {
  std::string name;
  double gamma = 0.0;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};

struct GillespieReport {
  double c = 0.0;
  std::size_t n_samples = 0;
  std::vector<GillespieRow> rows;
  std::vector<GillespieCheck> checks;
  bool pass() const;
};

/// R = exp(alpha H(p)) / E[exp(alpha H)] with H = -phi_2 and
/// alpha = c theta^{3/2 + gamma}. The denominator is a Monte Carlo mean over
/// an independent batch of equal size. Checks per regime:
///   gamma < 0: Var(R) strictly decreasing along the sweep
///   gamma = 0: log R close to N(-c^2, 2c^2) at the largest theta
///   gamma > 0: median R below the threshold at the largest theta
GillespieReport verify_gillespie(const GillespieConfig& config);

/// CSV of the report rows.
void write_gillespie_csv(std::ostream& os, const GillespieReport& report);
void write_gillespie_json(std::ostream& os, const GillespieReport& report);

enum class PhaseLabel { neutral_rate, tilted_rate, degenerate_rate };
enum class C0Branch { not_applicable, below_c0, at_c0, above_c0 };

std::string to_string(PhaseLabel label);
std::string to_string(C0Branch branch);

struct PhaseResult {
  PhaseLabel label = PhaseLabel::neutral_rate;
  C0Branch branch = C0Branch::not_applicable;
  double constant = 0.0;  ///< sup_q{cH(q) - S(q)} in the linear class
  std::function<ExtendedReal(std::span<const double>)> rate;
};

/// Label and bound rate evaluator for a selection regime.
PhaseResult phase_classify(const rates::SelectionRegime& regime);

/// Growth class of alpha = c theta^gamma: gamma < 1 sublinear, gamma = 1
/// linear with constant c, gamma > 1 superlinear.
rates::SelectionRegime regime_from_alpha(double c, double gamma, const rates::HFunctional& h);

}  // namespace pdlab::selection
