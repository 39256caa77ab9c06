#pragma once

// Large-deviation rate functions of PD(theta) as theta -> infinity, the
// Legendre transform behind the single-coordinate rate, the variational
// constant for selection-tilted measures, and the critical constant c0.

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdlab/extended_real.hpp"

namespace pdlab::rates {

/// I(x) = log(1/(1-x)) on [0, 1); +inf elsewhere.
ExtendedReal rate_I(double x);

/// Lambda(l) = l - 1 - log l for l > 1, else 0.
double cgf_Lambda(double lambda);

/// sup_l { l x - Lambda(l) } computed numerically (derivative bisection on a
/// bracket grown from [1, 2]). Throws DomainError outside [0, 1) and
/// NumericError if the bracket cannot be established.
double legendre_transform(double x);

/// I_k(x) = log(1/(1-kx)) on [0, 1/k); +inf elsewhere (including x = 1/k).
ExtendedReal rate_Ik(int k, double x);

/// S_n(p) = log(1/(1 - sum p)) for p in the ordered simplex with sum < 1.
ExtendedReal rate_Sn(std::span<const double> p);

enum class TailKind {
  exact,        ///< tail_sum is the exact mass beyond the prefix
  upper_bound,  ///< only an upper bound on the tail mass is known
};

/// Interval-valued S for a finite prefix plus information about the tail.
struct RateInterval {
  ExtendedReal lower;
  ExtendedReal upper;
  /// Upper end is +inf only because of the tail bound (prefix sum < 1).
  bool ambiguous = false;

  bool is_point() const;
  /// Midpoint when is_point(); otherwise the lower end.
  ExtendedReal point() const;
};

/// S(p) = log(1/(1 - sum_k p_k)) on the closed infinite simplex.
/// Interval width below 1e-9 is reported as a point.
RateInterval rate_S(std::span<const double> prefix, double tail_sum,
                    TailKind kind = TailKind::upper_bound);

/// Convenience for finitely supported points (tail exactly zero).
ExtendedReal rate_S_finite(std::span<const double> p);

/// I(y^{1/m}) for y in [0, 1]; +inf outside.
ExtendedReal rate_homozygosity(int m, double y);

struct ContractionMin {
  double value = 0.0;
  double lead_atom = 0.0;  ///< argmin: largest atom
  int equal_atoms = 0;     ///< argmin: number of smaller equal atoms
  double small_atom = 0.0;
};

/// Minimizes S over configurations (a, b, ..., b) (one atom plus j equal
/// atoms, j <= max_equal_atoms) subject to sum of m-th powers = y, with
/// a scanned on a grid of the given step. Used to confirm the contraction
/// identity inf{S(p) : phi_m(p) = y} = I(y^{1/m}).
ContractionMin homozygosity_contraction_min(int m, double y, double grid_step = 1e-4,
                                            int max_equal_atoms = 8);

/// phi_m(p) = sum p_k^m.
double phi(int m, std::span<const double> p);

/// Fitness functional H used by the selection tilt.
struct HFunctional {
  enum class Kind { minus_phi, plus_phi, custom };
  Kind kind = Kind::minus_phi;
  int m = 2;
  std::function<double(std::span<const double>)> custom;
  std::string name = "minus_phi_2";

  static HFunctional minus_phi(int m = 2);
  static HFunctional plus_phi(int m = 2);
  static HFunctional make_custom(std::function<double(std::span<const double>)> fn,
                                 std::string name = "custom");

  double operator()(std::span<const double> p) const;
};

struct VariationalSolution {
  enum class Shape { empty, single_atom, custom_vector };
  double s_star = 0.0;  ///< total mass of the optimizer
  double sup_value = 0.0;
  Shape shape = Shape::empty;
  std::vector<double> optimizer;  ///< the maximizing point (empty for Shape::empty)
  bool approximate = false;       ///< heuristic search for custom H
};

/// sup_q { c H(q) - S(q) } over the closed infinite simplex.
/// For H = +phi_m the problem reduces to sup_s { c s^m + log(1 - s) } with a
/// single atom; the interior stationary point is found by derivative bisection
/// on [(m-1)/m, 1). For H = -phi_m the supremum is 0 at the empty
/// configuration. Custom H uses a projected coordinate search over the first
/// 16 coordinates with restarts, flagged approximate.
VariationalSolution selection_sup(double c, const HFunctional& h);

/// The closed-form constant for H = +phi_2 and c >= 2:
/// log((1 - sqrt(1 - 2/c))/2) + c ((1 + sqrt(1 - 2/c))/2)^2.
double plus_phi2_constant(double c);

enum class GrowthClass { sublinear, linear, superlinear };

struct SelectionRegime {
  GrowthClass growth = GrowthClass::sublinear;
  double c = 0.0;  ///< only meaningful for linear growth
  HFunctional h = HFunctional::minus_phi(2);
  /// Unique maximizer of H; required for a custom H in the superlinear class.
  std::optional<std::vector<double>> maximizer;

  /// Throws DomainError (c <= 0 in the linear class, m < 2).
  void validate() const;
};

/// Rate of the selection-tilted family at a finitely supported point p:
///   sublinear   -> S(p)
///   linear      -> sup_q{cH(q) - S(q)} - (cH(p) - S(p))
///   superlinear -> 0 at the maximizer of H, +inf elsewhere.
/// Throws UnsupportedError for a custom H in the superlinear class without a
/// declared maximizer.
ExtendedReal rate_selection(std::span<const double> p, const SelectionRegime& regime);

struct PlusPhi2Constant {
  double value = 0.0;
  bool above_c0 = false;
  /// At c == c0 both branches are evaluated; this is their absolute gap.
  double boundary_gap = 0.0;
};

/// Branch form of sup_q{c phi_2(q) - S(q)}: 0 below c0, plus_phi2_constant(c)
/// above. Throws NumericError if the two branches disagree by more than
/// 1e-9 at c == c0.
PlusPhi2Constant plus_phi2_sup_branch(double c);

/// F(c) whose root > 2 is c0.
double c0_equation(double c);

struct C0Result {
  double c0 = 0.0;
  double residual = 0.0;
  double f_lo = 0.0;  ///< F(2), negative
  double f_hi = 0.0;  ///< F(10), positive
};

/// Bisection root of c0_equation on (2, 10].
C0Result solve_c0();

/// Table with columns x, I, I2, I3, S2_diag at the given points. S2_diag is
/// S_2(x, x). Infinite entries are written as inf.
void write_rate_table_csv(std::ostream& os, std::span<const double> xs);

/// n equally spaced points i/n, i = 0..n-1.
std::vector<double> rate_table_grid(int n);

}  // namespace pdlab::rates
