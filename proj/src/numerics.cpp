#include "pdlab/numerics.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <sstream>

#include "pdlab/errors.hpp"

namespace pdlab::numerics {

namespace {

GaussRule make_gauss_legendre(std::size_t n) {
  if (n == 1) return GaussRule{{0.0}, {2.0}};
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

// Kronrod 15-point nodes (positive half) and weights; Gauss 7-point weights
// for the odd-indexed Kronrod nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  Segment s{a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
  if (!std::isfinite(s.value)) s.error = std::numeric_limits<double>::infinity();
  return s;
}

}  // namespace

const GaussRule& gauss_legendre(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
  return it->second;
}

QuadResult integrate_with_breaks(const std::function<double(double)>& f,
                                 std::span<const double> breaks, const QuadOptions& opts) {
  std::priority_queue<Segment> heap;
  double total = 0.0;
  double total_err = 0.0;
  std::size_t evals = 0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    Segment s = gk15(f, breaks[i], breaks[i + 1]);
    evals += 15;
    total += s.value;
    total_err += s.error;
    heap.push(s);
  }
  QuadResult out;
  while (!heap.empty()) {
    const double target = std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
    if (total_err <= target) {
      out.converged = true;
      break;
    }
    if (heap.size() >= opts.max_intervals) break;
    Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    heap.pop();
    Segment left = gk15(f, worst.a, mid);
    Segment right = gk15(f, mid, worst.b);
    evals += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  if (heap.empty()) out.converged = true;
  // Re-sum from the final partition to shed accumulated cancellation.
  double sum = 0.0;
  double err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sum;
  out.error = err;
  out.evaluations = evals;
  if (!out.converged) out.converged = err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(sum));
  return out;
}

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadOptions& opts) {
  if (a == b) return QuadResult{0.0, 0.0, 0, true};
  if (b < a) {
    QuadResult r = integrate(f, b, a, opts);
    r.value = -r.value;
    return r;
  }
  const std::array<double, 2> br{a, b};
  return integrate_with_breaks(f, br, opts);
}

double composite_gauss(const std::function<double(double)>& f, double a, double b,
                       std::size_t panels, std::size_t order) {
  const GaussRule& rule = gauss_legendre(order);
  const double h = (b - a) / static_cast<double>(panels);
  double sum = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    const double c = lo + 0.5 * h;
    double s = 0.0;
    for (std::size_t j = 0; j < order; ++j) s += rule.weights[j] * f(c + 0.5 * h * rule.nodes[j]);
    sum += 0.5 * h * s;
  }
  return sum;
}

RootResult bisect(const std::function<double(double)>& f, double lo, double hi, double x_tol,
                  std::size_t max_iter) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return {lo, 0.0, 0};
  if (fhi == 0.0) return {hi, 0.0, 0};
  if ((flo < 0.0) == (fhi < 0.0)) {
    std::ostringstream os;
    os << "bisect: no sign change on [" << lo << ", " << hi << "]: f(lo)=" << flo
       << ", f(hi)=" << fhi;
    throw NumericError(os.str());
  }
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi) || (hi - lo) <= x_tol) break;
    const double fm = f(mid);
    if (fm == 0.0) return {mid, 0.0, it + 1};
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  const bool take_lo = std::abs(flo) <= std::abs(fhi);
  return {take_lo ? lo : hi, take_lo ? flo : fhi, it};
}

MaxResult golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                             double x_tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > x_tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    if (!(c > a && d < b)) break;
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  std::vector<double> shifted(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) shifted[i] = std::exp(xs[i] - m);
  return m + std::log(pairwise_sum(shifted));
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean(xs);
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - m) * (xs[i] - m);
  return pairwise_sum(sq) / static_cast<double>(xs.size() - 1);
}

double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n));
  }
  return d;
}

ChebyshevPanel::ChebyshevPanel(double a, double b, std::vector<double> values)
    : a_(a), b_(b), x_(nodes(a, b, values.size())), values_(std::move(values)) {
  const std::size_t n = values_.size();
  w_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    w_[j] = (j % 2 == 0) ? 1.0 : -1.0;
    if (j == 0 || j + 1 == n) w_[j] *= 0.5;
  }
}

std::vector<double> ChebyshevPanel::nodes(double a, double b, std::size_t n) {
  std::vector<double> x(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (std::size_t j = 0; j < n; ++j) {
    x[j] = mid + half * std::cos(std::numbers::pi * static_cast<double>(j) /
                                 static_cast<double>(n - 1));
  }
  x.front() = b;
  x.back() = a;
  return x;
}

double ChebyshevPanel::operator()(double x) const {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < x_.size(); ++j) {
    const double d = x - x_[j];
    if (d == 0.0) return values_[j];
    const double t = w_[j] / d;
    num += t * values_[j];
    den += t;
  }
  return num / den;
}

double ChebyshevPanel::derivative(double x) const {
  for (std::size_t i = 0; i < x_.size(); ++i) {
    if (x == x_[i]) {
      // Differentiation-matrix row at a node.
      double d = 0.0;
      for (std::size_t j = 0; j < x_.size(); ++j) {
        if (j != i) d += (w_[j] / w_[i]) * (values_[j] - values_[i]) / (x_[i] - x_[j]);
      }
      return d;
    }
  }
  const double px = (*this)(x);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < x_.size(); ++j) {
    const double d = x - x_[j];
    num += w_[j] * (px - values_[j]) / (d * d);
    den += w_[j] / d;
  }
  return num / den;
}

}  // namespace pdlab::numerics
