#pragma once

// Quadrature-grade laws of PD(theta): the exponential integral J, moments of
// the ranked frequencies, the density of P_1 built band by band from its
// functional equation, the joint density of (P_1, ..., P_n), and rank-k
// marginals obtained by integrating the joint density.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "pdlab/numerics.hpp"

namespace pdlab::exact {

/// J(u) = int_u^inf e^{-x}/x dx (the exponential integral E1). Power series
/// below u = 1, Lentz continued fraction above. Throws DomainError for u <= 0.
double exp_integral_J(double u);

/// log J(u); finite for every u > 0 (no underflow at large u).
double log_exp_integral_J(double u);

struct MomentQuery {
  int k = 1;  ///< rank, >= 1
  int n = 1;  ///< moment order, >= 1
  double theta = 1.0;
};

struct MomentResult {
  double value = 0.0;
  double rel_error = 0.0;
};

/// E[P_k(theta)^n] by integrating the Griffiths representation
///   theta^k Gamma(theta)/Gamma(theta+n) int_0^inf u^{n-1} J^{k-1}/(k-1)! e^{-u-theta J} du
/// in log space over s = log u. Throws NumericError if the target relative
/// error 1e-8 is not reached.
MomentResult moment_pk_detailed(const MomentQuery& q);
double moment_pk(const MomentQuery& q);

/// E[H_m(theta)] = Gamma(m) / ((theta+1)(theta+2)...(theta+m-1)), m >= 2, theta >= 0.
double homozygosity_moment(int m, double theta);

/// One exported grid point.
struct GridNode {
  int band_k = 1;
  double p = 0.0;
  double g1 = 0.0;
  double tail = 0.0;
};

/// Numerical law of P_1(theta) on bands (1/(k+1), 1/k].
///
/// The top band (1/2, 1) is closed form: g(p) = theta (1-p)^{theta-1} / p and
/// T(p) = (1-p)^theta int_0^inf e^{-v} / (1 - (1-p) e^{-v/theta}) dv.
/// Each lower band k evaluates g(p) = theta (1-p)^{theta-1}/p * F(p/(1-p)),
/// where p/(1-p) lies in band k-1, already built. On every band the tail is
/// stored as h(t) = log T + t over t = -theta log(1-p), split into panels of
/// equal t-width and interpolated at Chebyshev-Lobatto points. Immutable once
/// built; safe to share between threads.
class DensityGrid {
 public:
  /// Builds the grid. `resolution` is the minimum number of interpolation
  /// nodes per band and also scales the panel width (doubling it halves the
  /// panels). Bands are added until the mass below 1/(K+1) is < 1e-8.
  static DensityGrid build(double theta, int resolution = 64);

  double theta() const { return theta_; }
  int resolution() const { return resolution_; }
  /// Deepest band K; the grid resolves (1/(K+1), 1).
  int band_count() const { return static_cast<int>(bands_.size()); }
  double bottom() const { return 1.0 / (band_count() + 1.0); }
  /// Integral of g over the resolved bands, T(1/(K+1)).
  double resolved_mass() const;
  /// 1 - resolved_mass(); spread flat over (0, 1/(K+1)).
  double unresolved_mass() const;

  /// log P{P_1 >= x}; 0 for x <= 0 and -inf for x >= 1.
  double log_tail(double x) const;
  double tail(double x) const;
  /// P{P_1 < x} = -expm1(log_tail(x)); exact to absolute precision.
  double cdf(double x) const;
  double log_cdf(double x) const;

  /// g_1 evaluated through the functional equation.
  double log_density(double p) const;
  double density(double p) const;
  /// -dT/dp from the stored tail interpolant. Independent of log_density on
  /// bands k >= 2, so the two can be compared.
  double density_from_tail(double p) const;

  std::vector<GridNode> nodes() const;

 private:
  struct Panel {
    double t_lo = 0.0;
    double t_hi = 0.0;
    numerics::ChebyshevPanel h;
  };
  struct Band {
    int k = 1;
    double p_lo = 0.0;
    double p_hi = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double panel_width = 0.0;
    double log_tail_bottom = 0.0;
    std::vector<Panel> panels;
  };

  DensityGrid(double theta, int resolution) : theta_(theta), resolution_(resolution) {}

  double t_of(double p) const;
  double p_of(double t) const;
  double top_band_log_tail(double p) const;
  int band_of(double y) const;
  void build_band(int k);

  double theta_;
  int resolution_;
  std::vector<Band> bands_;
};

/// DensityGrid::build(theta, resolution).
DensityGrid g1_density(double theta, int resolution = 64);

/// P{P_1(theta) >= x} by interpolated cumulative lookup.
double tail_p1(const DensityGrid& grid, double x);

/// Watterson joint density of (P_1, ..., P_n) at p, through the grid's P_1
/// law. Zero outside the open ordered simplex. Throws DomainError on an
/// empty vector or on theta != grid.theta().
double gn_density(double theta, std::span<const double> p, const DensityGrid& grid);
double log_gn_density(double theta, std::span<const double> p, const DensityGrid& grid);

/// Density of P_k at x for k in {2, 3}, by (k-1)-dimensional adaptive
/// quadrature of gn_density. Zero for x outside (0, 1/k). Throws
/// UnsupportedError for other k.
double marginal_pk(double theta, int k, double x, const DensityGrid& grid);

/// P{lo <= P_k <= hi} for k in {1, 2, 3}.
double rank_interval_probability(const DensityGrid& grid, int k, double lo, double hi);

/// P{P_k >= x} for k in {1, 2, 3}.
double rank_tail(const DensityGrid& grid, int k, double x);

/// CSV with header band_k,p,g1,tail at 17 significant digits.
void write_grid_csv(std::ostream& os, const DensityGrid& grid);

}  // namespace pdlab::exact
