#include "pdlab/rate_functions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "pdlab/errors.hpp"
#include "pdlab/numerics.hpp"
#include "pdlab/report_io.hpp"

namespace pdlab::rates {

namespace {

// -log(1 - s) for s in [0, 1); +inf at and beyond 1.
ExtendedReal log_inv_one_minus(double s) {
  if (!(s < 1.0)) return ExtendedReal::infinity();
  return ExtendedReal(-std::log1p(-s));
}

bool in_ordered_simplex(std::span<const double> p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !std::isfinite(p[i])) return false;
    if (i > 0 && p[i] > p[i - 1]) return false;
  }
  return true;
}

double total_mass(std::span<const double> p) { return numerics::pairwise_sum(p); }

// Drops trailing zeros so that (0.3, 0.2) and (0.3, 0.2, 0) compare equal.
std::span<const double> trim_zeros(std::span<const double> p) {
  std::size_t n = p.size();
  while (n > 0 && p[n - 1] == 0.0) --n;
  return p.first(n);
}

// c s^m + log(1 - s).
double single_atom_objective(double c, int m, double s) { return c * std::pow(s, m) + std::log1p(-s); }

VariationalSolution plus_phi_sup(double c, int m) {
  VariationalSolution sol;
  sol.shape = VariationalSolution::Shape::empty;
  sol.sup_value = 0.0;
  sol.s_star = 0.0;

  // Stationarity c m s^{m-1} (1 - s) = 1. The left side peaks at (m-1)/m and
  // decreases to 0 at s = 1, so the local maximum of the objective is the
  // unique root on [(m-1)/m, 1) when one exists.
  const double s_peak = static_cast<double>(m - 1) / m;
  auto q = [&](double s) { return c * m * std::pow(s, m - 1) * (1.0 - s) - 1.0; };
  if (q(s_peak) > 0.0) {
    const auto root = numerics::bisect(q, s_peak, 1.0);
    const double value = single_atom_objective(c, m, root.root);
    if (value > 0.0) {
      sol.shape = VariationalSolution::Shape::single_atom;
      sol.s_star = root.root;
      sol.sup_value = value;
      sol.optimizer = {root.root};
    }
  }

  // Cross-check on a uniform grid of [0, 1).
  constexpr int kGrid = 10000;
  double grid_best = 0.0;
  for (int i = 1; i < kGrid; ++i) {
    grid_best = std::max(grid_best, single_atom_objective(c, m, static_cast<double>(i) / kGrid));
  }
  if (grid_best > sol.sup_value + 1e-9) {
    std::ostringstream os;
    os << "selection_sup: grid value " << grid_best << " exceeds stationary value " << sol.sup_value
       << " at c=" << c;
    throw NumericError(os.str());
  }
  return sol;
}

// Projection onto {q : q_1 >= q_2 >= ... >= 0, sum q < 1}.
void project(std::vector<double>& q) {
  for (double& x : q) x = std::clamp(x, 0.0, 1.0);
  std::sort(q.begin(), q.end(), std::greater<>());
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  constexpr double kMaxMass = 1.0 - 1e-12;
  if (total > kMaxMass) {
    for (double& x : q) x *= kMaxMass / total;
  }
}

VariationalSolution custom_sup(double c, const HFunctional& h) {
  constexpr std::size_t kDim = 16;
  auto objective = [&](const std::vector<double>& q) {
    const double s = std::accumulate(q.begin(), q.end(), 0.0);
    return c * h(q) + std::log1p(-s);
  };

  std::vector<std::vector<double>> starts;
  starts.emplace_back(kDim, 0.0);
  starts.push_back(std::vector<double>(kDim, 0.0));
  starts.back()[0] = 0.5;
  starts.emplace_back(kDim, 1.0 / (2.0 * kDim));
  std::mt19937_64 gen(0x5eed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int r = 0; r < 5; ++r) {
    std::vector<double> q(kDim);
    for (double& x : q) x = unif(gen) / kDim;
    starts.push_back(std::move(q));
  }

  std::vector<double> best_q;
  double best = -std::numeric_limits<double>::infinity();
  for (auto q : starts) {
    project(q);
    double f = objective(q);
    for (double step = 0.1; step > 1e-10; step *= 0.5) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (std::size_t i = 0; i < kDim; ++i) {
          for (double dir : {1.0, -1.0}) {
            auto trial = q;
            trial[i] += dir * step;
            project(trial);
            const double ft = objective(trial);
            if (ft > f + 1e-15) {
              q = std::move(trial);
              f = ft;
              improved = true;
            }
          }
        }
      }
    }
    if (f > best) {
      best = f;
      best_q = q;
    }
  }

  VariationalSolution sol;
  sol.approximate = true;
  sol.sup_value = best;
  sol.s_star = std::accumulate(best_q.begin(), best_q.end(), 0.0);
  const auto trimmed = trim_zeros(best_q);
  sol.optimizer.assign(trimmed.begin(), trimmed.end());
  sol.shape = sol.optimizer.empty() ? VariationalSolution::Shape::empty
                                    : VariationalSolution::Shape::custom_vector;
  return sol;
}

}  // namespace

ExtendedReal rate_I(double x) {
  if (!(x >= 0.0)) return ExtendedReal::infinity();
  return log_inv_one_minus(x);
}

double cgf_Lambda(double lambda) {
  if (lambda > 1.0) return lambda - 1.0 - std::log(lambda);
  return 0.0;
}

double legendre_transform(double x) {
  if (!(x >= 0.0 && x < 1.0)) throw DomainError("legendre_transform: x must lie in [0, 1)");
  // On l <= 1 the objective is l x, maximized at l = 1. On l > 1 it is concave
  // with derivative x - 1 + 1/l.
  auto deriv = [x](double l) { return x - 1.0 + 1.0 / l; };
  double best = x;
  if (deriv(1.0) > 0.0) {
    double hi = 2.0;
    int grow = 0;
    while (deriv(hi) > 0.0) {
      hi *= 2.0;
      if (++grow > 200) throw NumericError("legendre_transform: bracket did not close");
    }
    const auto root = numerics::bisect(deriv, 1.0, hi);
    best = std::max(best, root.root * x - cgf_Lambda(root.root));
  }
  return best;
}

ExtendedReal rate_Ik(int k, double x) {
  if (k < 1) throw DomainError("rate_Ik: k must be positive");
  if (!(x >= 0.0)) return ExtendedReal::infinity();
  return log_inv_one_minus(k * x);
}

ExtendedReal rate_Sn(std::span<const double> p) {
  if (!in_ordered_simplex(p)) return ExtendedReal::infinity();
  return log_inv_one_minus(total_mass(p));
}

bool RateInterval::is_point() const {
  if (lower.is_pos_inf() && upper.is_pos_inf()) return true;
  if (!lower.is_finite() || !upper.is_finite()) return false;
  return upper.value() - lower.value() < 1e-9;
}

ExtendedReal RateInterval::point() const {
  if (is_point() && lower.is_finite()) return ExtendedReal(0.5 * (lower.value() + upper.value()));
  return lower;
}

RateInterval rate_S(std::span<const double> prefix, double tail_sum, TailKind kind) {
  if (!(tail_sum >= 0.0)) throw DomainError("rate_S: tail sum must be non-negative");
  RateInterval r;
  if (!in_ordered_simplex(prefix)) {
    r.lower = r.upper = ExtendedReal::infinity();
    return r;
  }
  const double s = total_mass(prefix);
  if (kind == TailKind::exact) {
    r.lower = r.upper = log_inv_one_minus(s + tail_sum);
    return r;
  }
  r.lower = log_inv_one_minus(s);
  r.upper = log_inv_one_minus(s + tail_sum);
  r.ambiguous = r.lower.is_finite() && r.upper.is_pos_inf();
  return r;
}

ExtendedReal rate_S_finite(std::span<const double> p) { return rate_S(p, 0.0, TailKind::exact).point(); }

ExtendedReal rate_homozygosity(int m, double y) {
  if (m < 2) throw DomainError("rate_homozygosity: m must be at least 2");
  if (!(y >= 0.0 && y <= 1.0)) return ExtendedReal::infinity();
  return rate_I(std::pow(y, 1.0 / m));
}

ContractionMin homozygosity_contraction_min(int m, double y, double grid_step, int max_equal_atoms) {
  if (m < 2) throw DomainError("contraction: m must be at least 2");
  if (!(y >= 0.0 && y <= 1.0)) throw DomainError("contraction: y must lie in [0, 1]");
  if (!(grid_step > 0.0)) throw DomainError("contraction: grid step must be positive");
  ContractionMin best;
  best.value = std::numeric_limits<double>::infinity();
  const double a_max = std::pow(y, 1.0 / m);
  const auto steps = static_cast<long>(std::floor(a_max / grid_step));
  auto consider = [&](double a) {
    const double rest = std::max(0.0, y - std::pow(a, m));
    for (int j = 0; j <= max_equal_atoms; ++j) {
      double b = 0.0;
      if (j == 0) {
        if (rest > 1e-14) continue;
      } else {
        b = std::pow(rest / j, 1.0 / m);
        if (b > a) continue;
      }
      const double s = a + j * b;
      if (!(s < 1.0)) continue;
      const double v = -std::log1p(-s);
      if (v < best.value) best = {v, a, j, b};
    }
  };
  for (long i = 0; i <= steps; ++i) consider(static_cast<double>(i) * grid_step);
  consider(a_max);
  return best;
}

double phi(int m, std::span<const double> p) {
  double s = 0.0;
  for (double x : p) s += std::pow(x, m);
  return s;
}

HFunctional HFunctional::minus_phi(int m) {
  if (m < 2) throw DomainError("H: m must be at least 2");
  HFunctional h;
  h.kind = Kind::minus_phi;
  h.m = m;
  h.name = "minus_phi_" + std::to_string(m);
  return h;
}

HFunctional HFunctional::plus_phi(int m) {
  if (m < 2) throw DomainError("H: m must be at least 2");
  HFunctional h;
  h.kind = Kind::plus_phi;
  h.m = m;
  h.name = "plus_phi_" + std::to_string(m);
  return h;
}

HFunctional HFunctional::make_custom(std::function<double(std::span<const double>)> fn, std::string name) {
  if (!fn) throw DomainError("H: custom functional is empty");
  HFunctional h;
  h.kind = Kind::custom;
  h.custom = std::move(fn);
  h.name = std::move(name);
  return h;
}

double HFunctional::operator()(std::span<const double> p) const {
  switch (kind) {
    case Kind::minus_phi: return -phi(m, p);
    case Kind::plus_phi: return phi(m, p);
    case Kind::custom: return custom(p);
  }
  return 0.0;
}

VariationalSolution selection_sup(double c, const HFunctional& h) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("selection_sup: c must be positive");
  switch (h.kind) {
    case HFunctional::Kind::minus_phi: return VariationalSolution{};
    case HFunctional::Kind::plus_phi: return plus_phi_sup(c, h.m);
    case HFunctional::Kind::custom: return custom_sup(c, h);
  }
  return VariationalSolution{};
}

double plus_phi2_constant(double c) {
  if (!(c >= 2.0)) throw DomainError("plus_phi2_constant: requires c >= 2");
  const double r = std::sqrt(1.0 - 2.0 / c);
  const double s = 0.5 * (1.0 + r);
  return std::log(0.5 * (1.0 - r)) + c * s * s;
}

double c0_equation(double c) { return plus_phi2_constant(c); }

C0Result solve_c0() {
  static const C0Result cached = [] {
    C0Result r;
    r.f_lo = c0_equation(2.0);
    r.f_hi = c0_equation(10.0);
    const auto root = numerics::bisect(c0_equation, 2.0, 10.0);
    r.c0 = root.root;
    r.residual = root.residual;
    return r;
  }();
  return cached;
}

PlusPhi2Constant plus_phi2_sup_branch(double c) {
  if (!(c > 0.0)) throw DomainError("plus_phi2_sup_branch: c must be positive");
  const double c0 = solve_c0().c0;
  PlusPhi2Constant out;
  if (c < c0) return out;
  out.above_c0 = c > c0;
  out.value = plus_phi2_constant(c);
  if (c == c0) {
    out.boundary_gap = std::abs(out.value);
    if (out.boundary_gap > 1e-9) throw NumericError("plus_phi2_sup_branch: branches disagree at c0");
    out.value = 0.0;
  }
  return out;
}

void SelectionRegime::validate() const {
  if (growth == GrowthClass::linear && !(c > 0.0 && std::isfinite(c))) {
    throw DomainError("selection regime: c must be positive in the linear class");
  }
  if (h.kind != HFunctional::Kind::custom && h.m < 2) throw DomainError("selection regime: m must be >= 2");
  if (h.kind == HFunctional::Kind::custom && !h.custom) throw DomainError("selection regime: empty custom H");
}

ExtendedReal rate_selection(std::span<const double> p, const SelectionRegime& regime) {
  regime.validate();
  switch (regime.growth) {
    case GrowthClass::sublinear: return rate_S_finite(p);

    case GrowthClass::linear: {
      const ExtendedReal s = rate_S_finite(p);
      if (!s.is_finite()) return ExtendedReal::infinity();
      const auto sol = selection_sup(regime.c, regime.h);
      if (regime.h.kind == HFunctional::Kind::plus_phi && regime.h.m == 2) {
        const auto branch = plus_phi2_sup_branch(regime.c);
        if (std::abs(branch.value - sol.sup_value) > 1e-9) {
          throw NumericError("rate_selection: closed-form constant disagrees with the variational solver");
        }
      }
      const double v = sol.sup_value - regime.c * regime.h(p) + s.value();
      // Rounding can push the value at the optimizer slightly below zero.
      return ExtendedReal(v < 0.0 && v > -1e-12 ? 0.0 : v);
    }

    case GrowthClass::superlinear: {
      std::vector<double> p0;
      switch (regime.h.kind) {
        case HFunctional::Kind::minus_phi: break;
        case HFunctional::Kind::plus_phi: p0 = {1.0}; break;
        case HFunctional::Kind::custom:
          if (!regime.maximizer) {
            throw UnsupportedError("rate_selection: custom H in the superlinear class needs a declared maximizer");
          }
          p0 = *regime.maximizer;
          break;
      }
      const auto a = trim_zeros(p);
      const auto b = trim_zeros(p0);
      if (a.size() != b.size()) return ExtendedReal::infinity();
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) > 1e-12) return ExtendedReal::infinity();
      }
      return ExtendedReal(0.0);
    }
  }
  return ExtendedReal::infinity();
}

std::vector<double> rate_table_grid(int n) {
  if (n < 2) throw DomainError("rate table: need at least 2 points");
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = static_cast<double>(i) / n;
  return xs;
}

void write_rate_table_csv(std::ostream& os, std::span<const double> xs) {
  io::CsvWriter csv(os, {"x", "I", "I2", "I3", "S2_diag"});
  for (double x : xs) {
    const std::array<double, 2> diag{x, x};
    csv.field(x).field(rate_I(x)).field(rate_Ik(2, x)).field(rate_Ik(3, x)).field(rate_Sn(diag));
    csv.end_row();
  }
}

}  // namespace pdlab::rates
