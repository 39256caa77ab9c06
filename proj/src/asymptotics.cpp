#include "pdlab/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "pdlab/errors.hpp"
#include "pdlab/exact_laws.hpp"
#include "pdlab/numerics.hpp"
#include "pdlab/parallel.hpp"
#include "pdlab/rate_functions.hpp"
#include "pdlab/report_io.hpp"

namespace pdlab::asymptotics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailSentinel = 1e-300;

// Streams for the i-th theta of a sweep never overlap those of another.
std::uint64_t stream_base(std::size_t i) { return static_cast<std::uint64_t>(i) << 32; }

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

// Gap sequence verdict. A sequence that is identically zero has already
// reached its limit and counts as converging.
bool approaching(const std::vector<double>& gaps) {
  if (std::all_of(gaps.begin(), gaps.end(), [](double g) { return g <= 1e-12; })) return true;
  return gaps.size() >= 2 && strictly_decreasing(gaps);
}

std::vector<double> gaps_of(const std::vector<ConvergenceRow>& rows) {
  std::vector<double> g;
  g.reserve(rows.size());
  for (const auto& r : rows) g.push_back(r.gap);
  return g;
}

std::string theta_context(double theta) {
  std::ostringstream os;
  os << "theta=" << theta;
  return os.str();
}

struct MomentSummary {
  double mean = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
};

MomentSummary summarize(const std::vector<double>& xs) {
  MomentSummary s;
  s.mean = numerics::mean(xs);
  s.variance = numerics::sample_variance(xs);
  std::vector<double> fourth(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) fourth[i] = std::pow(xs[i] - s.mean, 4);
  const double m4 = numerics::pairwise_sum(fourth) / static_cast<double>(xs.size());
  s.variance_se = std::sqrt(std::max(0.0, m4 - s.variance * s.variance) / static_cast<double>(xs.size()));
  return s;
}

}  // namespace

void ThetaSweep::validate(std::size_t min_size) const {
  std::vector<std::string> errors;
  if (thetas.size() < min_size) {
    errors.push_back("thetas must contain at least " + std::to_string(min_size) + " value(s)");
  }
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (!(thetas[i] > 0.0) || !std::isfinite(thetas[i])) errors.push_back("theta must be positive");
    if (i > 0 && !(thetas[i] > thetas[i - 1])) errors.push_back("thetas must be strictly ascending");
  }
  if (samples_per_theta < 1) errors.push_back("samples_per_theta must be positive");
  if (!errors.empty()) {
    std::string msg = "invalid sweep:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw DomainError(msg);
  }
}

bool ConvergenceReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::vector<ConvergenceRow> ConvergenceReport::rows_for(const std::string& quantity) const {
  std::vector<ConvergenceRow> out;
  for (const auto& r : rows) {
    if (r.quantity == quantity) out.push_back(r);
  }
  return out;
}

void write_report_csv(std::ostream& os, const ConvergenceReport& report) {
  io::CsvWriter csv(os, {"quantity", "theta", "statistic", "target", "gap", "err", "method"});
  for (const auto& r : report.rows) {
    csv.field(r.quantity).field(r.theta).field(r.statistic).field(r.target).field(r.gap).field(r.err).field(r.method);
    csv.end_row();
  }
}

void write_report_json(std::ostream& os, const ConvergenceReport& report) {
  nlohmann::ordered_json j;
  j["name"] = report.name;
  j["label"] = report.label;
  j["pass"] = report.pass();
  j["monotone"] = report.monotone;
  j["final_gap"] = report.final_gap;
  auto& checks = j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold},
                      {"detail", c.detail}});
  }
  os << j.dump(2) << '\n';
}

ConvergenceReport verify_ldp_p1(const ThetaSweep& sweep, double x, int resolution) {
  sweep.validate(2);
  if (!(x >= 0.0 && x < 1.0)) throw DomainError("verify_ldp_p1: x must lie in [0, 1)");
  const std::size_t n = sweep.thetas.size();
  const auto stats = parallel_map<double>(2 * n, [&](std::size_t job) {
    const double theta = sweep.thetas[job / 2];
    const int res = job % 2 == 0 ? resolution : 2 * resolution;
    const auto grid = exact::DensityGrid::build(theta, res);
    const double lt = grid.log_tail(x);
    if (!std::isfinite(lt)) throw NumericError("verify_ldp_p1: log tail not finite at " + theta_context(theta));
    return -lt / theta;
  });

  ConvergenceReport rep;
  rep.name = "ldp_p1";
  const double target = rates::rate_I(x).value();
  for (std::size_t i = 0; i < n; ++i) {
    const double s = stats[2 * i];
    rep.rows.push_back({"p1_rate", sweep.thetas[i], s, target, std::abs(s - target),
                        std::abs(s - stats[2 * i + 1]), "exact"});
  }
  const auto gaps = gaps_of(rep.rows);
  rep.monotone = approaching(gaps);
  rep.final_gap = gaps.back();
  rep.label = rep.monotone ? "converging" : "not converging";
  rep.checks.push_back({"gap_decreasing", rep.monotone, rep.final_gap, 0.0, "|statistic - I(x)| strictly decreasing"});
  return rep;
}

ConvergenceReport verify_ldp_pk(const ThetaSweep& sweep, int k, double x, RatioWindow window, int resolution) {
  sweep.validate(2);
  if (k != 2 && k != 3) throw UnsupportedError("verify_ldp_pk: k must be 2 or 3");
  if (!(x > 0.0 && x < 1.0)) throw DomainError("verify_ldp_pk: x must lie in (0, 1)");
  const std::size_t n = sweep.thetas.size();
  const bool in_support = x < 1.0 / k;
  const double p = window.p < 0.0 ? k * x : window.p;
  const double delta = window.delta;
  const bool with_window = in_support && p > 0.0 && p < 1.0 && delta > 0.0;
  if (in_support && !with_window) throw DomainError("verify_ldp_pk: window centre and half-width out of range");

  struct Job {
    double tail = 0.0;
    double ratio = 0.0;
  };
  const auto jobs = parallel_map<Job>(2 * n, [&](std::size_t job) {
    const double theta = sweep.thetas[job / 2];
    const int res = job % 2 == 0 ? resolution : 2 * resolution;
    const auto grid = exact::DensityGrid::build(theta, res);
    Job out;
    out.tail = exact::rank_tail(grid, k, x);
    if (with_window) {
      const double w1 = exact::rank_interval_probability(grid, 1, std::max(0.0, p - delta), std::min(1.0, p + delta));
      const double wk = exact::rank_interval_probability(grid, k, std::max(0.0, p - delta) / k, (p + delta) / k);
      if (!(w1 > 0.0) || !(wk > 0.0)) {
        throw NumericError("verify_ldp_pk: window probability vanished at " + theta_context(theta));
      }
      out.ratio = (std::log(w1) - std::log(wk)) / theta;
    }
    return out;
  });

  ConvergenceReport rep;
  rep.name = "ldp_pk";
  const auto target = rates::rate_Ik(k, x);
  const std::string qname = "p" + std::to_string(k) + "_rate";

  if (!in_support) {
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = jobs[2 * i].tail;
      all_zero = all_zero && t < kTailSentinel;
      const double s = t < kTailSentinel ? kInf : -std::log(t) / sweep.thetas[i];
      rep.rows.push_back({qname, sweep.thetas[i], s, target.to_double(), s == kInf ? 0.0 : kInf, 0.0, "exact"});
    }
    rep.label = "out of support";
    rep.monotone = all_zero;
    rep.final_gap = all_zero ? 0.0 : kInf;
    rep.checks.push_back({"tail_below_sentinel", all_zero, jobs[2 * (n - 1)].tail, kTailSentinel,
                          "rate is +inf for x >= 1/k"});
    return rep;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double theta = sweep.thetas[i];
    const double t0 = jobs[2 * i].tail;
    const double t1 = jobs[2 * i + 1].tail;
    if (!(t0 > 0.0) || !(t1 > 0.0)) throw NumericError("verify_ldp_pk: tail vanished at " + theta_context(theta));
    const double s0 = -std::log(t0) / theta;
    const double s1 = -std::log(t1) / theta;
    rep.rows.push_back({qname, theta, s0, target.value(), std::abs(s0 - target.value()), std::abs(s0 - s1), "exact"});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double r0 = jobs[2 * i].ratio;
    const double r1 = jobs[2 * i + 1].ratio;
    rep.rows.push_back({"window_log_ratio", sweep.thetas[i], r0, 0.0, std::abs(r0), std::abs(r0 - r1), "exact"});
  }
  const auto rate_gaps = gaps_of(rep.rows_for(qname));
  const auto ratio_gaps = gaps_of(rep.rows_for("window_log_ratio"));
  rep.monotone = approaching(rate_gaps);
  rep.final_gap = rate_gaps.back();
  rep.label = rep.monotone ? "converging" : "not converging";
  rep.checks.push_back({"gap_decreasing", rep.monotone, rep.final_gap, 0.0, "|statistic - I_k(x)| strictly decreasing"});
  rep.checks.push_back({"window_ratio_decreasing", approaching(ratio_gaps), ratio_gaps.back(), 0.0,
                        "|window log-ratio| strictly decreasing"});
  return rep;
}

double gumbel_centering(double theta) {
  if (!(theta > std::numbers::e)) throw DomainError("gumbel: theta must exceed e");
  const double l = std::log(theta);
  return l - std::log(l);
}

GumbelRankLaw::GumbelRankLaw(int k) : k_(k) {
  if (k < 1) throw DomainError("gumbel: rank must be positive");
  constexpr double kHi = 48.0;
  const auto panels = static_cast<std::size_t>(std::lround((kHi - lo_) / width_));
  cum_.assign(panels + 1, 0.0);
  double first = 0.0;
  const auto& rule = numerics::gauss_legendre(20);
  for (std::size_t i = 0; i < panels; ++i) {
    const double a = lo_ + width_ * static_cast<double>(i);
    const double b = a + width_;
    cum_[i + 1] = cum_[i] + panel_integral(a, b);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * width_;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double y = mid + half * rule.nodes[j];
      first += half * rule.weights[j] * y * density(y);
    }
  }
  mean_ = first / cum_.back();
}

double GumbelRankLaw::density(double y) const {
  return std::exp(-k_ * y - std::exp(-y) - std::lgamma(static_cast<double>(k_)));
}

double GumbelRankLaw::panel_integral(double a, double b) const {
  const auto& rule = numerics::gauss_legendre(20);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) s += rule.weights[j] * density(mid + half * rule.nodes[j]);
  return half * s;
}

double GumbelRankLaw::cdf(double y) const {
  if (y <= lo_) return 0.0;
  const double u = (y - lo_) / width_;
  const auto i = static_cast<std::size_t>(u);
  if (i + 1 >= cum_.size()) return 1.0;
  const double a = lo_ + width_ * static_cast<double>(i);
  return std::min(1.0, cum_[i] + panel_integral(a, y));
}

ConvergenceReport verify_gumbel(const ThetaSweep& sweep, const std::vector<int>& ranks, GumbelOptions opts) {
  sweep.validate(1);
  if (ranks.empty()) throw DomainError("verify_gumbel: ranks must not be empty");
  for (double t : sweep.thetas) {
    if (!(t > std::numbers::e)) throw DomainError("verify_gumbel: every theta must exceed e");
  }
  for (int k : ranks) {
    if (k < 1) throw DomainError("verify_gumbel: ranks must be positive");
  }
  const int top_r = *std::max_element(ranks.begin(), ranks.end());
  std::vector<GumbelRankLaw> laws;
  for (int k : ranks) laws.emplace_back(k);

  ConvergenceReport rep;
  rep.name = "gumbel";
  const std::size_t n = sweep.samples_per_theta;
  const double crit = numerics::ks_critical_01(n);
  std::vector<std::vector<ConvergenceRow>> ks_rows(ranks.size());
  for (std::size_t i = 0; i < sweep.thetas.size(); ++i) {
    const double theta = sweep.thetas[i];
    const double beta = gumbel_centering(theta);
    const auto batch = sampling::summarize_batch(theta, sweep.truncation, sweep.seed, stream_base(i), n,
                                                 static_cast<std::size_t>(top_r), {});
    for (std::size_t r = 0; r < ranks.size(); ++r) {
      const int k = ranks[r];
      std::vector<double> y(n);
      for (std::size_t s = 0; s < n; ++s) {
        const auto& top = batch[s].top;
        const double pk = static_cast<std::size_t>(k) <= top.size() ? top[k - 1] : 0.0;
        y[s] = theta * pk - beta;
      }
      const double mean = numerics::mean(y);
      const double se = n > 1 ? std::sqrt(numerics::sample_variance(y) / static_cast<double>(n)) : 0.0;
      const double ks = numerics::ks_distance(y, [&](double v) { return laws[r].cdf(v); });
      const std::string suffix = "_rank" + std::to_string(k);
      rep.rows.push_back({"mean" + suffix, theta, mean, laws[r].mean(), std::abs(mean - laws[r].mean()), se, "mc"});
      ConvergenceRow ks_row{"ks" + suffix, theta, ks, 0.0, ks, crit, "mc"};
      rep.rows.push_back(ks_row);
      ks_rows[r].push_back(ks_row);
    }
  }
  for (std::size_t r = 0; r < ranks.size(); ++r) {
    const double ks = ks_rows[r].back().statistic;
    rep.checks.push_back({"ks_rank" + std::to_string(ranks[r]) + "_at_theta_max", ks <= opts.ks_threshold, ks,
                          opts.ks_threshold, "KS distance at the largest theta"});
  }
  const auto gaps = gaps_of(ks_rows[0]);
  rep.monotone = approaching(gaps);
  rep.final_gap = gaps.back();
  rep.label = rep.pass() ? "within threshold" : "above threshold";
  return rep;
}

double gaussian_hm_variance(int m) {
  if (m < 2) throw DomainError("gaussian_hm_variance: m must be at least 2");
  return std::exp(std::lgamma(2.0 * m) - 2.0 * std::lgamma(static_cast<double>(m))) - static_cast<double>(m) * m;
}

ConvergenceReport verify_gaussian_hm(const ThetaSweep& sweep, int m, GaussianOptions opts) {
  sweep.validate(1);
  if (m < 2) throw DomainError("verify_gaussian_hm: m must be at least 2");
  if (sweep.samples_per_theta < 2) throw DomainError("verify_gaussian_hm: need at least 2 samples");
  const double target_var = gaussian_hm_variance(m);
  const double sd = std::sqrt(target_var);
  const std::size_t n = sweep.samples_per_theta;
  const std::vector<int> powers{m};

  ConvergenceReport rep;
  rep.name = "gaussian_hm";
  std::vector<ConvergenceRow> var_rows;
  double last_ks = 0.0;
  for (std::size_t i = 0; i < sweep.thetas.size(); ++i) {
    const double theta = sweep.thetas[i];
    const auto batch = sampling::summarize_batch(theta, sweep.truncation, sweep.seed, stream_base(i), n, 0, powers);
    const double scale = std::exp((m - 1) * std::log(theta) - std::lgamma(static_cast<double>(m)));
    const double root = std::sqrt(theta);
    std::vector<double> z(n);
    for (std::size_t s = 0; s < n; ++s) z[s] = root * (scale * batch[s].power_sums[0] - 1.0);
    const auto mom = summarize(z);
    const double ks = numerics::ks_distance(z, [&](double v) { return numerics::normal_cdf(v, 0.0, sd); });
    ConvergenceRow var_row{"variance", theta, mom.variance, target_var, std::abs(mom.variance - target_var),
                           mom.variance_se, "mc"};
    rep.rows.push_back(var_row);
    var_rows.push_back(var_row);
    rep.rows.push_back({"mean", theta, mom.mean, 0.0, std::abs(mom.mean),
                        std::sqrt(mom.variance / static_cast<double>(n)), "mc"});
    rep.rows.push_back({"ks", theta, ks, 0.0, ks, numerics::ks_critical_01(n), "mc"});
    last_ks = ks;
  }
  const double rel = var_rows.back().gap / target_var;
  rep.checks.push_back({"variance_rel_error", rel <= opts.variance_rel_tol, rel, opts.variance_rel_tol,
                        "relative variance error at the largest theta"});
  rep.checks.push_back({"ks_normal", last_ks <= opts.ks_threshold, last_ks, opts.ks_threshold,
                        "KS distance to the normal limit at the largest theta"});
  const auto gaps = gaps_of(var_rows);
  rep.monotone = approaching(gaps);
  rep.final_gap = gaps.back();
  rep.label = rep.pass() ? "within threshold" : "above threshold";
  return rep;
}

double speed_bound_rhs(double theta, int m, double c) {
  const double q = std::exp((std::lgamma(static_cast<double>(m)) + std::log1p(c) - (m - 1) * std::log(theta)) / m);
  if (!(q <= 1.0)) throw DomainError("speed bound: theta^{m-1} must be at least Gamma(m)(1+c)");
  return std::exp(theta * std::log1p(-q));
}

SpeedBoundReport verify_speed_bound(double theta, int m, double c, std::size_t n_samples, std::uint64_t seed,
                                    const sampling::Truncation& truncation) {
  if (!(theta > 0.0)) throw DomainError("speed bound: theta must be positive");
  if (m < 2) throw DomainError("speed bound: m must be at least 2");
  if (!(c > 0.0)) throw DomainError("speed bound: c must be positive");
  if (n_samples < 1) throw DomainError("speed bound: n_samples must be positive");
  SpeedBoundReport r;
  r.theta = theta;
  r.m = m;
  r.c = c;
  r.n_samples = n_samples;
  r.rhs = speed_bound_rhs(theta, m, c);
  r.threshold = std::exp((std::lgamma(static_cast<double>(m)) + std::log1p(c) - (m - 1) * std::log(theta)) / m);

  const std::vector<int> powers{m};
  const auto batch = sampling::summarize_batch(theta, truncation, seed, 0, n_samples, 0, powers);
  const double scale = std::exp((m - 1) * std::log(theta) - std::lgamma(static_cast<double>(m)));
  for (const auto& s : batch) {
    if (scale * s.power_sums[0] >= 1.0 + c) ++r.hits;
  }
  const double nn = static_cast<double>(n_samples);
  r.lhs = static_cast<double>(r.hits) / nn;
  r.lhs_se = std::sqrt(r.lhs * (1.0 - r.lhs) / nn);
  r.pass = r.lhs >= r.rhs - 3.0 * r.lhs_se;
  return r;
}

void write_speed_bound_json(std::ostream& os, const SpeedBoundReport& r) {
  nlohmann::ordered_json j{{"theta", r.theta}, {"m", r.m},     {"c", r.c},
                           {"n_samples", r.n_samples}, {"threshold", r.threshold}, {"rhs", r.rhs},
                           {"lhs", r.lhs},     {"lhs_se", r.lhs_se}, {"hits", r.hits},
                           {"pass", r.pass}};
  os << j.dump(2) << '\n';
}

}  // namespace pdlab::asymptotics
