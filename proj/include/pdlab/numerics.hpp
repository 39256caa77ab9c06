#pragma once

// Small numerical kernels shared by the modules: Gauss rules, adaptive
// quadrature, bracketing root finders, stable reductions and the
// Kolmogorov-Smirnov distance.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pdlab::numerics {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached n-point Gauss-Legendre rule. Thread safe.
const GaussRule& gauss_legendre(std::size_t n);

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

struct QuadOptions {
  double abs_tol = 0.0;
  double rel_tol = 1e-10;
  std::size_t max_intervals = 2000;
};

/// Globally adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.
/// Splits the interval with the largest error estimate until the total
/// estimate meets max(abs_tol, rel_tol * |I|).
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadOptions& opts = {});

/// As integrate(), but the interval is pre-split at the given interior points.
QuadResult integrate_with_breaks(const std::function<double(double)>& f,
                                 std::span<const double> breaks, const QuadOptions& opts = {});

/// Fixed composite Gauss-Legendre on [a, b] with `panels` equal panels.
double composite_gauss(const std::function<double(double)>& f, double a, double b,
                       std::size_t panels, std::size_t order);

struct RootResult {
  double root = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
};

/// Bisection on [lo, hi]; requires f(lo) and f(hi) of opposite sign (throws
/// NumericError otherwise). Runs until the bracket stops shrinking in floating
/// point or `x_tol` is met.
RootResult bisect(const std::function<double(double)>& f, double lo, double hi,
                  double x_tol = 0.0, std::size_t max_iter = 400);

struct MaxResult {
  double argmax = 0.0;
  double value = 0.0;
};

/// Golden-section maximization of a unimodal function on [lo, hi].
MaxResult golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                             double x_tol = 1e-12);

/// log(exp(a) + exp(b)) without overflow; accepts -inf.
double log_add_exp(double a, double b);

/// log(sum exp(x_i)); returns -inf for an empty range or all -inf entries.
double log_sum_exp(std::span<const double> xs);

/// Pairwise (cascade) summation. Result depends only on the input order.
double pairwise_sum(std::span<const double> xs);

double mean(std::span<const double> xs);
/// Unbiased sample variance (n - 1 denominator). Requires n >= 2.
double sample_variance(std::span<const double> xs);
double median(std::vector<double> xs);

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

/// One-sample Kolmogorov-Smirnov distance sup |F_n - F|.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

/// 1.63 / sqrt(n): the asymptotic alpha ~ 0.01 critical value.
inline double ks_critical_01(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

/// Polynomial interpolant through Chebyshev-Lobatto points on [a, b],
/// evaluated with the barycentric formula.
class ChebyshevPanel {
 public:
  ChebyshevPanel() = default;
  ChebyshevPanel(double a, double b, std::vector<double> values);

  /// Lobatto nodes x_j = mid + half * cos(pi j / (n - 1)), j = 0..n-1,
  /// ordered from b down to a.
  static std::vector<double> nodes(double a, double b, std::size_t n);

  double lo() const { return a_; }
  double hi() const { return b_; }
  std::span<const double> values() const { return values_; }
  double operator()(double x) const;
  double derivative(double x) const;

 private:
  double a_ = 0.0;
  double b_ = 0.0;
  std::vector<double> x_;
  std::vector<double> w_;
  std::vector<double> values_;
};

}  // namespace pdlab::numerics
