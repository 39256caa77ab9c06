#pragma once

// Numerical checks of the theta -> infinity limit theorems: LDP decay rates
// from exact tails, the rank-k Gumbel-type scaling limit, the Gaussian limit
// of homozygosity, and the speed bound for homozygosity deviations.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdlab/sampling.hpp"

namespace pdlab::asymptotics {

struct ThetaSweep {
  std::vector<double> thetas;
  std::size_t samples_per_theta = 10000;
  std::uint64_t seed = 0;
  sampling::Truncation truncation = sampling::ResidualTarget{};

  /// Thetas positive and strictly ascending; at least `min_size` entries.
  void validate(std::size_t min_size = 2) const;
};

struct ConvergenceRow {
  std::string quantity;
  double theta = 0.0;
  double statistic = 0.0;
  double target = 0.0;
  double gap = 0.0;
  double err = 0.0;     ///< standard error (mc) or resolution difference (exact)
  std::string method;   ///< "exact" or "mc"
};

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ConvergenceReport {
  std::string name;
  std::vector<ConvergenceRow> rows;
  std::vector<Check> checks;
  /// Gaps of the primary quantity strictly decrease along the sweep.
  bool monotone = false;
  /// Gap of the primary quantity at the largest theta.
  double final_gap = 0.0;
  std::string label;  ///< e.g. "converging", "out of support"

  bool pass() const;
  std::vector<ConvergenceRow> rows_for(const std::string& quantity) const;
};

/// CSV columns: quantity, theta, statistic, target, gap, err, method.
void write_report_csv(std::ostream& os, const ConvergenceReport& report);
/// JSON verdict summary (name, label, pass, monotone, final_gap, checks).
void write_report_json(std::ostream& os, const ConvergenceReport& report);

/// -(1/theta) log P{P_1 >= x} from the exact density grid versus I(x).
/// err is the difference between resolutions R and 2R.
ConvergenceReport verify_ldp_p1(const ThetaSweep& sweep, double x, int resolution = 64);

struct RatioWindow {
  double p = -1.0;  ///< centre for P_1; negative selects k * x
  double delta = 0.05;
};

/// -(1/theta) log P{P_k >= x} versus I_k(x), plus the window comparison
///   (1/theta)[log P{|P_1 - p| <= delta} - log P{|P_k - p/k| <= delta/k}]
/// which tends to 0. For x >= 1/k the tail is zero and the report is labelled
/// "out of support".
ConvergenceReport verify_ldp_pk(const ThetaSweep& sweep, int k, double x, RatioWindow window = {},
                                int resolution = 64);

/// beta(theta) = log theta - log log theta. Requires theta > e.
double gumbel_centering(double theta);

/// Limit law of theta P_k - beta(theta), density exp(-k y - e^{-y}) / (k-1)!.
/// The CDF is tabulated once by Gauss-Legendre panels on [-8, 48].
class GumbelRankLaw {
 public:
  explicit GumbelRankLaw(int k);

  int k() const { return k_; }
  double density(double y) const;
  double cdf(double y) const;
  /// Integral of the density over the tabulated range.
  double total_mass() const { return cum_.back(); }
  double mean() const { return mean_; }

 private:
  double panel_integral(double a, double b) const;

  int k_;
  double lo_ = -8.0;
  double width_ = 0.25;
  std::vector<double> cum_;
  double mean_ = 0.0;
};

struct GumbelOptions {
  double ks_threshold = 0.05;
};

/// Simulates theta P_k - beta(theta) and measures the KS distance to the
/// limit law for every rank; also reports the sample mean against the limit
/// mean. Passes when every KS distance at the largest theta is below the
/// threshold. Throws DomainError for theta <= e.
ConvergenceReport verify_gumbel(const ThetaSweep& sweep, const std::vector<int>& ranks,
                                GumbelOptions opts = {});

/// Gamma(2m)/Gamma(m)^2 - m^2.
double gaussian_hm_variance(int m);

struct GaussianOptions {
  double variance_rel_tol = 0.15;
  double ks_threshold = 0.05;
};

/// Simulates sqrt(theta) (theta^{m-1} H_m / Gamma(m) - 1) and compares its
/// variance and distribution with N(0, gaussian_hm_variance(m)).
ConvergenceReport verify_gaussian_hm(const ThetaSweep& sweep, int m, GaussianOptions opts = {});

/// Exact P{X_1 >= q} = (1 - q)^theta with q = (Gamma(m)(1+c)/theta^{m-1})^{1/m}.
double speed_bound_rhs(double theta, int m, double c);

struct SpeedBoundReport {
  double theta = 0.0;
  int m = 2;
  double c = 0.0;
  std::size_t n_samples = 0;
  double threshold = 0.0;  ///< q
  double rhs = 0.0;
  double lhs = 0.0;        ///< MC estimate of P{theta^{m-1} H_m / Gamma(m) >= 1 + c}
  double lhs_se = 0.0;
  std::size_t hits = 0;
  bool pass = false;       ///< lhs >= rhs - 3 lhs_se
};

/// Throws DomainError unless theta^{m-1} >= Gamma(m)(1+c).
SpeedBoundReport verify_speed_bound(double theta, int m, double c, std::size_t n_samples,
                                    std::uint64_t seed,
                                    const sampling::Truncation& truncation = sampling::ResidualTarget{});

void write_speed_bound_json(std::ostream& os, const SpeedBoundReport& r);

}  // namespace pdlab::asymptotics
