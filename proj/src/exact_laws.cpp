#include "pdlab/exact_laws.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "pdlab/errors.hpp"
#include "pdlab/report_io.hpp"

namespace pdlab::exact {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kPanelOrder = 16;      // Lobatto points per panel
constexpr int kSubOrder = 12;        // Gauss points between neighbouring Lobatto points
constexpr double kUnresolvedTarget = 1e-8;
constexpr int kMaxBands = 100000;

void require_positive_theta(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    std::ostringstream os;
    os << "theta must be positive and finite (got " << theta << ")";
    throw DomainError(os.str());
  }
}

double log_one_minus_exp(double log_x) {
  // log(1 - e^{log_x}) for log_x <= 0.
  if (log_x >= 0.0) return kNegInf;
  if (log_x > -std::numbers::ln2) return std::log(-std::expm1(log_x));
  return std::log1p(-std::exp(log_x));
}

}  // namespace

double exp_integral_J(double u) {
  if (!(u > 0.0)) throw DomainError("J(u) requires u > 0");
  return std::exp(log_exp_integral_J(u));
}

double log_exp_integral_J(double u) {
  if (!(u > 0.0)) throw DomainError("J(u) requires u > 0");
  constexpr double eps = 1e-16;
  if (u < 1.0) {
    double sum = -std::log(u) - numerics::kEulerGamma;
    double fact = 1.0;
    for (int i = 1; i < 200; ++i) {
      fact *= -u / i;
      const double term = -fact / i;
      sum += term;
      if (std::abs(term) < std::abs(sum) * eps) break;
    }
    return std::log(sum);
  }
  // Modified Lentz on the continued fraction E1(u) = e^{-u} / (u + 1 - 1^2/(u + 3 - 2^2/(u + 5 - ...)))
  constexpr double tiny = 1e-300;
  double b = u + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < eps) return std::log(h) - u;
  }
  throw NumericError("J(u): continued fraction did not converge");
}

MomentResult moment_pk_detailed(const MomentQuery& q) {
  if (q.k < 1) throw DomainError("moment_pk: rank k must be >= 1");
  if (q.n < 1) throw DomainError("moment_pk: order n must be >= 1");
  require_positive_theta(q.theta);
  const double theta = q.theta;
  const double log_prefactor = q.k * std::log(theta) + std::lgamma(theta) -
                               std::lgamma(theta + q.n) - std::lgamma(static_cast<double>(q.k));
  auto log_integrand = [&](double s) {
    const double u = std::exp(s);
    const double log_j = log_exp_integral_J(u);
    const double j = std::exp(log_j);
    double v = q.n * s - u - theta * j;
    if (q.k > 1) v += (q.k - 1) * log_j;
    return v;
  };

  // Locate the mode in s = log u, then keep the range within 60 e-folds of it.
  double best = kNegInf;
  double best_s = 0.0;
  const double step = 0.02;
  for (double s = -60.0; s <= 12.0; s += step) {
    const double v = log_integrand(s);
    if (v > best) {
      best = v;
      best_s = s;
    }
  }
  if (!std::isfinite(best)) throw NumericError("moment_pk: integrand has no finite mode");
  double lo = best_s;
  while (lo > -700.0 && log_integrand(lo) > best - 60.0) lo -= 0.5;
  double hi = best_s;
  while (hi < 12.0 && log_integrand(hi) > best - 60.0) hi += 0.5;

  numerics::QuadOptions opts;
  opts.rel_tol = 1e-11;
  opts.max_intervals = 4000;
  const std::array<double, 3> breaks{lo, best_s, hi};
  const auto r = numerics::integrate_with_breaks(
      [&](double s) { return std::exp(log_integrand(s) - best); }, breaks, opts);
  const double rel = r.value > 0.0 ? r.error / r.value : 1.0;
  if (!r.converged || !(rel <= 1e-8)) {
    std::ostringstream os;
    os << "moment_pk(k=" << q.k << ", n=" << q.n << ", theta=" << theta
       << "): quadrature did not converge (relative error estimate " << rel << ", "
       << r.evaluations << " evaluations)";
    throw NumericError(os.str());
  }
  return {std::exp(std::log(r.value) + best + log_prefactor), rel};
}

double moment_pk(const MomentQuery& q) { return moment_pk_detailed(q).value; }

double homozygosity_moment(int m, double theta) {
  if (m < 2) throw DomainError("homozygosity order m must be >= 2");
  if (!(theta >= 0.0)) throw DomainError("theta must be nonnegative");
  // Gamma(m) / prod_{j=1}^{m-1} (theta + j), as a running product.
  double v = 1.0;
  for (int j = 1; j < m; ++j) v *= j / (theta + j);
  return v;
}

// ---------------------------------------------------------------------------
// DensityGrid

double DensityGrid::t_of(double p) const { return -theta_ * std::log1p(-p); }
double DensityGrid::p_of(double t) const { return -std::expm1(-t / theta_); }

double DensityGrid::top_band_log_tail(double p) const {
  // T(p) = (1-p)^theta A(p),  A(p) = int_0^inf e^{-v} / (1 - (1-p) e^{-v/theta}) dv.
  const double r = 1.0 - p;
  std::vector<double> breaks{0.0, 0.5, 1.5, 3.5, 7.0, 13.0, 22.0, 35.0, 50.0};
  for (double b : {0.5, 1.5, 3.5, 7.0, 13.0, 22.0, 35.0}) {
    if (theta_ * b < 50.0) breaks.push_back(theta_ * b);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const auto& rule = numerics::gauss_legendre(12);
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double c = 0.5 * (breaks[i] + breaks[i + 1]);
    const double h = 0.5 * (breaks[i + 1] - breaks[i]);
    double s = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double v = c + h * rule.nodes[j];
      s += rule.weights[j] * std::exp(-v) / (1.0 - r * std::exp(-v / theta_));
    }
    a += h * s;
  }
  return theta_ * std::log1p(-p) + std::log(a);
}

int DensityGrid::band_of(double y) const {
  // Band j holds (1/(j+1), 1/j].
  int j = static_cast<int>(std::floor(1.0 / y));
  if (j < 1) j = 1;
  while (j > 1 && y > 1.0 / j) --j;
  while (y <= 1.0 / (j + 1.0)) ++j;
  return j;
}

double DensityGrid::resolved_mass() const { return std::exp(bands_.back().log_tail_bottom); }

double DensityGrid::unresolved_mass() const { return -std::expm1(bands_.back().log_tail_bottom); }

double DensityGrid::log_tail(double x) const {
  if (!(x > 0.0)) return 0.0;
  if (x >= 1.0) return kNegInf;
  if (x >= 0.5) return top_band_log_tail(x);
  const double b = bottom();
  if (x <= b) {
    const double tb = resolved_mass();
    return std::log(tb + (1.0 - tb) * (b - x) / b);
  }
  const int j = band_of(x);
  const Band& band = bands_[static_cast<std::size_t>(j - 1)];
  const double t = t_of(x);
  auto idx = static_cast<std::ptrdiff_t>(std::floor((t - band.t_lo) / band.panel_width));
  idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(band.panels.size()) - 1);
  const double h = band.panels[static_cast<std::size_t>(idx)].h(t);
  return std::min(0.0, h - t);
}

double DensityGrid::tail(double x) const { return std::exp(log_tail(x)); }

double DensityGrid::log_cdf(double x) const {
  if (!(x > 0.0)) return kNegInf;
  if (x >= 1.0) return 0.0;
  const double b = bottom();
  if (x <= b) {
    const double f = unresolved_mass();
    return f > 0.0 ? std::log(f) + std::log(x / b) : kNegInf;
  }
  return log_one_minus_exp(log_tail(x));
}

double DensityGrid::cdf(double x) const { return std::exp(log_cdf(x)); }

double DensityGrid::log_density(double p) const {
  if (!(p > 0.0) || !(p < 1.0)) return kNegInf;
  const double base = std::log(theta_) + (theta_ - 1.0) * std::log1p(-p) - std::log(p);
  if (p >= 0.5) return base;
  const double b = bottom();
  if (p <= b) {
    const double f = unresolved_mass();
    return f > 0.0 ? std::log(f / b) : kNegInf;
  }
  return base + log_cdf(p / (1.0 - p));
}

double DensityGrid::density(double p) const { return std::exp(log_density(p)); }

double DensityGrid::density_from_tail(double p) const {
  if (!(p > 0.0) || !(p < 1.0)) return 0.0;
  if (p >= 0.5 || p <= bottom()) return density(p);
  const int j = band_of(p);
  const Band& band = bands_[static_cast<std::size_t>(j - 1)];
  const double t = t_of(p);
  auto idx = static_cast<std::ptrdiff_t>(std::floor((t - band.t_lo) / band.panel_width));
  idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(band.panels.size()) - 1);
  const Panel& panel = band.panels[static_cast<std::size_t>(idx)];
  const double log_tail_value = panel.h(t) - t;
  if (log_tail_value < -std::numbers::ln2) {
    const double dlog_tail_dt = panel.h.derivative(t) - 1.0;
    return -std::exp(log_tail_value) * dlog_tail_dt * theta_ / (1.0 - p);
  }
  // T close to 1: differentiate log F = log(1 - T) instead, avoiding the
  // cancellation in h'(t) - 1.
  const auto ts = numerics::ChebyshevPanel::nodes(panel.t_lo, panel.t_hi, kPanelOrder);
  const auto h = panel.h.values();
  std::vector<double> log_f(ts.size());
  for (std::size_t j = 0; j < ts.size(); ++j) log_f[j] = log_one_minus_exp(std::min(0.0, h[j] - ts[j]));
  if (!std::all_of(log_f.begin(), log_f.end(), [](double v) { return std::isfinite(v); })) {
    const double dlog_tail_dt = panel.h.derivative(t) - 1.0;
    return -std::exp(log_tail_value) * dlog_tail_dt * theta_ / (1.0 - p);
  }
  const numerics::ChebyshevPanel log_f_panel(panel.t_lo, panel.t_hi, std::move(log_f));
  return std::exp(log_f_panel(t)) * log_f_panel.derivative(t) * theta_ / (1.0 - p);
}

void DensityGrid::build_band(int k) {
  Band band;
  band.k = k;
  band.p_lo = 1.0 / (k + 1.0);
  band.p_hi = 1.0 / k;
  band.t_lo = t_of(band.p_lo);
  band.t_hi = t_of(band.p_hi);

  if (k == 1) {
    band.log_tail_bottom = top_band_log_tail(0.5);
    bands_.push_back(std::move(band));
    return;
  }

  const double scale = 64.0 / resolution_;
  const double max_width = 2.0 * scale;
  const int min_panels = std::max(1, resolution_ / kPanelOrder);
  const double span = band.t_hi - band.t_lo;
  const int n_panels = std::max(min_panels, static_cast<int>(std::ceil(span / max_width)));
  band.panel_width = span / n_panels;

  const auto& sub = numerics::gauss_legendre(kSubOrder);
  // log of the t-space integrand of T: g dp = e^{-t} F(p/(1-p)) / p dt.
  auto psi = [&](double t) {
    const double p = p_of(t);
    return -t - std::log(p) + log_cdf(p / (1.0 - p));
  };

  double log_tail_top = bands_.back().log_tail_bottom;
  std::vector<Panel> panels(static_cast<std::size_t>(n_panels));
  std::vector<double> terms(sub.nodes.size());
  for (int pi = n_panels - 1; pi >= 0; --pi) {
    const double t_lo = band.t_lo + band.panel_width * pi;
    const double t_hi = (pi == n_panels - 1) ? band.t_hi : t_lo + band.panel_width;
    const auto ts = numerics::ChebyshevPanel::nodes(t_lo, t_hi, kPanelOrder);
    std::vector<double> h(ts.size());
    double log_t = log_tail_top;
    h[0] = log_t + ts[0];
    for (std::size_t j = 1; j < ts.size(); ++j) {
      const double c = 0.5 * (ts[j - 1] + ts[j]);
      const double half = 0.5 * (ts[j - 1] - ts[j]);
      for (std::size_t q = 0; q < sub.nodes.size(); ++q) {
        terms[q] = psi(c + half * sub.nodes[q]) + std::log(sub.weights[q] * half);
      }
      log_t = numerics::log_add_exp(log_t, numerics::log_sum_exp(terms));
      h[j] = log_t + ts[j];
    }
    log_tail_top = log_t;
    panels[static_cast<std::size_t>(pi)] = Panel{t_lo, t_hi, numerics::ChebyshevPanel(t_lo, t_hi, h)};
  }
  band.log_tail_bottom = log_tail_top;
  band.panels = std::move(panels);
  bands_.push_back(std::move(band));
}

DensityGrid DensityGrid::build(double theta, int resolution) {
  require_positive_theta(theta);
  if (resolution < 16) throw DomainError("resolution must be >= 16 nodes per band");
  DensityGrid grid(theta, resolution);
  for (int k = 1;; ++k) {
    if (k > kMaxBands) {
      std::ostringstream os;
      os << "g1_density(theta=" << theta << "): mass below 1/" << k << " still "
         << grid.unresolved_mass() << " after " << kMaxBands << " bands";
      throw NumericError(os.str());
    }
    grid.build_band(k);
    const double log_bottom = grid.bands_.back().log_tail_bottom;
    if (!std::isfinite(log_bottom) || log_bottom > 1e-6) {
      std::ostringstream os;
      os << "g1_density(theta=" << theta << ", resolution=" << resolution
         << "): cumulative mass " << std::exp(log_bottom) << " at band " << k
         << " violates normalization; increase the resolution";
      throw NumericError(os.str());
    }
    if (grid.unresolved_mass() < kUnresolvedTarget) break;
  }
  return grid;
}

std::vector<GridNode> DensityGrid::nodes() const {
  std::vector<GridNode> out;
  // Top band: Lobatto points in p over [1/2, 1), excluding p = 1.
  const auto top = numerics::ChebyshevPanel::nodes(0.5, 1.0, static_cast<std::size_t>(resolution_));
  for (auto it = top.rbegin(); it != top.rend(); ++it) {
    if (*it >= 1.0) continue;
    out.push_back({1, *it, density(*it), tail(*it)});
  }
  for (std::size_t b = 1; b < bands_.size(); ++b) {
    const Band& band = bands_[b];
    for (auto pit = band.panels.rbegin(); pit != band.panels.rend(); ++pit) {
      const auto ts = numerics::ChebyshevPanel::nodes(pit->t_lo, pit->t_hi, kPanelOrder);
      const auto values = pit->h.values();
      for (std::size_t j = 0; j < ts.size(); ++j) {
        if (j == 0 && !out.empty() && out.back().band_k == band.k) continue;  // shared panel edge
        const double p = p_of(ts[j]);
        out.push_back({band.k, p, density(p), std::exp(std::min(0.0, values[j] - ts[j]))});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const GridNode& a, const GridNode& b) { return a.p < b.p; });
  return out;
}

DensityGrid g1_density(double theta, int resolution) { return DensityGrid::build(theta, resolution); }

double tail_p1(const DensityGrid& grid, double x) { return grid.tail(x); }

double log_gn_density(double theta, std::span<const double> p, const DensityGrid& grid) {
  if (p.empty()) throw DomainError("gn_density: dimension must be >= 1");
  if (theta != grid.theta()) throw DomainError("gn_density: theta does not match the grid");
  double sum = 0.0;
  double log_prod = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0) || !(p[i] < 1.0)) return kNegInf;
    if (i > 0 && !(p[i] < p[i - 1])) return kNegInf;
    sum += p[i];
    log_prod += std::log(p[i]);
  }
  if (!(sum < 1.0)) return kNegInf;
  const double rest = 1.0 - sum;
  const double arg = p.back() / rest;
  const double log_f = arg >= 1.0 ? 0.0 : grid.log_cdf(arg);
  return static_cast<double>(p.size()) * std::log(theta) + (theta - 1.0) * std::log(rest) -
         log_prod + log_f;
}

double gn_density(double theta, std::span<const double> p, const DensityGrid& grid) {
  return std::exp(log_gn_density(theta, p, grid));
}

namespace {

numerics::QuadOptions inner_options() {
  numerics::QuadOptions o;
  o.rel_tol = 1e-9;
  o.max_intervals = 400;
  return o;
}

// Breakpoints where the argument of F in g_n crosses 1 or a band edge.
std::vector<double> joint_breaks(double lo, double hi, double last, double other_sum,
                                 int max_band) {
  // Argument = last / (1 - other_sum - p1 - last) as p1 runs over [lo, hi];
  // it equals 1/j at p1 = 1 - other_sum - last - j * last.
  std::vector<double> br{lo, hi};
  for (int j = 1; j <= std::min(max_band + 1, 256); ++j) {
    const double x = 1.0 - other_sum - last - j * last;
    if (x > lo && x < hi) br.push_back(x);
  }
  std::sort(br.begin(), br.end());
  return br;
}

void require_rank(int k) {
  if (k < 2 || k > 3) {
    std::ostringstream os;
    os << "marginal_pk supports ranks 2 and 3 only (got " << k << ")";
    throw UnsupportedError(os.str());
  }
}

}  // namespace

double marginal_pk(double theta, int k, double x, const DensityGrid& grid) {
  require_rank(k);
  if (theta != grid.theta()) throw DomainError("marginal_pk: theta does not match the grid");
  if (!(x > 0.0) || !(x < 1.0 / k)) return 0.0;
  const auto opts = inner_options();
  if (k == 2) {
    const double lo = x;
    const double hi = 1.0 - x;
    const auto br = joint_breaks(lo, hi, x, 0.0, grid.band_count());
    return numerics::integrate_with_breaks(
               [&](double p1) {
                 const std::array<double, 2> v{p1, x};
                 return gn_density(theta, v, grid);
               },
               br, opts)
        .value;
  }
  // k == 3: outer over p2 in (x, (1 - x)/2), inner over p1 in (p2, 1 - x - p2).
  auto inner = [&](double p2) {
    const double lo = p2;
    const double hi = 1.0 - x - p2;
    if (!(hi > lo)) return 0.0;
    const auto br = joint_breaks(lo, hi, x, p2, grid.band_count());
    return numerics::integrate_with_breaks(
               [&](double p1) {
                 const std::array<double, 3> v{p1, p2, x};
                 return gn_density(theta, v, grid);
               },
               br, opts)
        .value;
  };
  return numerics::integrate(inner, x, 0.5 * (1.0 - x), opts).value;
}

double rank_interval_probability(const DensityGrid& grid, int k, double lo, double hi) {
  if (k == 1) {
    lo = std::clamp(lo, 0.0, 1.0);
    hi = std::clamp(hi, 0.0, 1.0);
    if (!(hi > lo)) return 0.0;
    return std::max(0.0, grid.tail(lo) - grid.tail(hi));
  }
  require_rank(k);
  lo = std::max(lo, 0.0);
  hi = std::min(hi, 1.0 / k);
  if (!(hi > lo)) return 0.0;
  numerics::QuadOptions opts;
  opts.rel_tol = 1e-8;
  opts.max_intervals = 400;
  std::vector<double> br{lo, hi};
  // The inner integration region changes shape at x = 1/(k+1).
  const double kink = 1.0 / (k + 1.0);
  if (kink > lo && kink < hi) br.insert(br.begin() + 1, kink);
  const double theta = grid.theta();
  return numerics::integrate_with_breaks(
             [&](double x) { return marginal_pk(theta, k, x, grid); }, br, opts)
      .value;
}

double rank_tail(const DensityGrid& grid, int k, double x) {
  return rank_interval_probability(grid, k, x, 1.0);
}

void write_grid_csv(std::ostream& os, const DensityGrid& grid) {
  io::CsvWriter csv(os, {"band_k", "p", "g1", "tail"});
  for (const auto& n : grid.nodes()) {
    csv.field(n.band_k).field(n.p).field(n.g1).field(n.tail);
    csv.end_row();
  }
}

}  // namespace pdlab::exact
