#include "pdlab/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "json.hpp"
#include "pdlab/errors.hpp"
#include "pdlab/numerics.hpp"
#include "pdlab/parallel.hpp"
#include "pdlab/report_io.hpp"

namespace pdlab::selection {

namespace {

struct Drawn {
  sampling::RankedFrequencies ranked;
  double h = 0.0;
};

Drawn draw_one(double theta, const sampling::Truncation& trunc, std::uint64_t seed, std::uint64_t stream,
               const rates::HFunctional& h, std::size_t keep_top) {
  const sampling::SamplerConfig cfg{theta, trunc, seed, stream};
  auto ranked = sampling::gem_to_ranked(sampling::draw_gem(cfg));
  Drawn d;
  d.h = h(ranked.p);
  if (ranked.p.size() > keep_top) {
    double dropped = 0.0;
    for (std::size_t i = keep_top; i < ranked.p.size(); ++i) dropped += ranked.p[i];
    ranked.p.resize(keep_top);
    ranked.residual += dropped;
  }
  d.ranked = std::move(ranked);
  return d;
}

// phi_2 of one neutral sample via the streaming generator.
std::vector<double> neutral_phi2(double theta, const sampling::Truncation& trunc, std::uint64_t seed,
                                 std::uint64_t first_stream, std::size_t n) {
  static constexpr int kPowers[] = {2};
  const auto batch = sampling::summarize_batch(theta, trunc, seed, first_stream, n, 0, kPowers);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = batch[i].power_sums[0];
  return out;
}

std::uint64_t gillespie_stream(std::size_t case_idx, std::size_t theta_idx, int batch) {
  return ((static_cast<std::uint64_t>(case_idx) * 1024 + theta_idx) * 2 + static_cast<std::uint64_t>(batch)) << 32;
}

}  // namespace

double AlphaForm::operator()(double theta) const { return c * std::pow(theta, gamma); }

void TiltConfig::validate() const {
  std::vector<std::string> errors;
  if (!(theta > 0.0) || !std::isfinite(theta)) errors.emplace_back("theta must be positive");
  if (!(alpha.c > 0.0) || !std::isfinite(alpha.c)) errors.emplace_back("c must be positive");
  if (!std::isfinite(alpha.gamma)) errors.emplace_back("gamma must be finite");
  if (n_samples < 100) errors.emplace_back("n_samples must be at least 100");
  if (keep_top < 1) errors.emplace_back("keep_top must be positive");
  if (!errors.empty()) {
    std::string msg = "invalid tilt config:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw DomainError(msg);
  }
}

TiltedEnsemble tilt_weights_from_values(std::vector<double> h_values, double alpha) {
  if (h_values.empty()) throw DomainError("tilt_weights: empty sample");
  if (!std::isfinite(alpha)) throw DomainError("tilt_weights: alpha must be finite");
  TiltedEnsemble e;
  const std::size_t n = h_values.size();
  e.h_values = std::move(h_values);
  e.log_weights.resize(n);
  e.normalized_weights.resize(n);

  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = alpha * e.h_values[i];
  e.uniform = std::all_of(raw.begin(), raw.end(), [&](double v) { return v == raw[0]; });
  if (e.uniform) {
    std::fill(e.normalized_weights.begin(), e.normalized_weights.end(), 1.0 / static_cast<double>(n));
    std::fill(e.log_weights.begin(), e.log_weights.end(), -std::log(static_cast<double>(n)));
    e.ess = static_cast<double>(n);
    return e;
  }

  const double lse = numerics::log_sum_exp(raw);
  for (std::size_t i = 0; i < n; ++i) e.normalized_weights[i] = std::exp(raw[i] - lse);
  // Renormalize so the weights sum to 1 to rounding.
  const double total = numerics::pairwise_sum(e.normalized_weights);
  const double log_total = std::log(total);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    e.normalized_weights[i] /= total;
    e.log_weights[i] = raw[i] - lse - log_total;
    sq[i] = e.normalized_weights[i] * e.normalized_weights[i];
  }
  e.ess = 1.0 / numerics::pairwise_sum(sq);
  e.degenerate = e.ess < 1.0 + 1e-6;
  return e;
}

TiltedEnsemble tilt_weights(std::vector<sampling::RankedFrequencies> samples, const rates::HFunctional& h,
                            double alpha) {
  std::vector<double> hv(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) hv[i] = h(samples[i].p);
  auto e = tilt_weights_from_values(std::move(hv), alpha);
  e.samples = std::move(samples);
  return e;
}

TiltedEnsemble sample_tilted_ensemble(const TiltConfig& config) {
  config.validate();
  auto drawn = parallel_map<Drawn>(config.n_samples, [&](std::size_t i) {
    return draw_one(config.theta, config.truncation, config.seed, i, config.h, config.keep_top);
  });
  std::vector<double> hv(drawn.size());
  std::vector<sampling::RankedFrequencies> samples(drawn.size());
  for (std::size_t i = 0; i < drawn.size(); ++i) {
    hv[i] = drawn[i].h;
    samples[i] = std::move(drawn[i].ranked);
  }
  auto e = tilt_weights_from_values(std::move(hv), config.alpha(config.theta));
  e.samples = std::move(samples);
  return e;
}

Estimate tilted_expectation(const TiltedEnsemble& ensemble, std::span<const double> f) {
  if (f.size() != ensemble.size()) throw DomainError("tilted_expectation: size mismatch");
  Estimate est;
  const std::size_t n = f.size();
  if (ensemble.uniform) {
    est.value = numerics::mean(f);
  } else {
    std::vector<double> wf(n);
    for (std::size_t i = 0; i < n; ++i) wf[i] = ensemble.normalized_weights[i] * f[i];
    est.value = numerics::pairwise_sum(wf);
  }
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = ensemble.normalized_weights[i];
    terms[i] = w * w * (f[i] - est.value) * (f[i] - est.value);
  }
  est.se = std::sqrt(numerics::pairwise_sum(terms));
  est.unreliable = ensemble.ess < 0.01 * static_cast<double>(n);
  return est;
}

Estimate tilted_expectation(const TiltedEnsemble& ensemble,
                            const std::function<double(const sampling::RankedFrequencies&)>& f) {
  if (ensemble.samples.size() != ensemble.size()) {
    throw DomainError("tilted_expectation: ensemble carries no samples");
  }
  std::vector<double> fv(ensemble.size());
  for (std::size_t i = 0; i < fv.size(); ++i) fv[i] = f(ensemble.samples[i]);
  return tilted_expectation(ensemble, fv);
}

void write_ensemble_csv(std::ostream& os, const TiltedEnsemble& ensemble) {
  io::CsvWriter csv(os, {"sample_id", "h", "log_weight", "weight"});
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    csv.field(i).field(ensemble.h_values[i]).field(ensemble.log_weights[i]).field(ensemble.normalized_weights[i]);
    csv.end_row();
  }
}

std::vector<GillespieCase> GillespieConfig::default_cases() {
  return {{0.0, {200.0}}, {-0.5, {50.0, 200.0, 800.0}}, {0.5, {200.0}}};
}

void GillespieConfig::validate() const {
  std::vector<std::string> errors;
  if (!(c > 0.0) || !std::isfinite(c)) errors.emplace_back("c must be positive");
  if (cases.empty()) errors.emplace_back("at least one gamma is required");
  for (const auto& cs : cases) {
    if (!std::isfinite(cs.gamma)) errors.emplace_back("gamma must be finite");
    if (cs.thetas.empty()) errors.emplace_back("thetas must not be empty");
    for (std::size_t i = 0; i < cs.thetas.size(); ++i) {
      if (!(cs.thetas[i] > 0.0)) errors.emplace_back("theta must be positive");
      if (i > 0 && !(cs.thetas[i] > cs.thetas[i - 1])) errors.emplace_back("thetas must be strictly ascending");
    }
    if (cs.gamma < 0.0 && cs.thetas.size() < 2) errors.emplace_back("gamma < 0 needs at least two thetas");
  }
  if (n_samples < 100) errors.emplace_back("n_samples must be at least 100");
  if (!errors.empty()) {
    std::string msg = "invalid gillespie config:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw DomainError(msg);
  }
}

bool GillespieReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const GillespieCheck& c) { return c.pass; });
}

GillespieReport verify_gillespie(const GillespieConfig& config) {
  config.validate();
  GillespieReport rep;
  rep.c = config.c;
  rep.n_samples = config.n_samples;
  const double c = config.c;
  const std::size_t n = config.n_samples;
  const double log_n = std::log(static_cast<double>(n));

  for (std::size_t ci = 0; ci < config.cases.size(); ++ci) {
    const auto& cs = config.cases[ci];
    std::vector<double> var_r;
    for (std::size_t ti = 0; ti < cs.thetas.size(); ++ti) {
      const double theta = cs.thetas[ti];
      const double alpha = c * std::pow(theta, 1.5 + cs.gamma);
      const auto num = neutral_phi2(theta, config.truncation, config.seed, gillespie_stream(ci, ti, 0), n);
      const auto den = neutral_phi2(theta, config.truncation, config.seed, gillespie_stream(ci, ti, 1), n);

      std::vector<double> a(n);
      for (std::size_t i = 0; i < n; ++i) a[i] = -alpha * den[i];
      const double log_den = numerics::log_sum_exp(a) - log_n;
      const double amax = *std::max_element(a.begin(), a.end());
      std::vector<double> e(n);
      for (std::size_t i = 0; i < n; ++i) e[i] = std::exp(a[i] - amax);
      const double rel_se = std::sqrt(numerics::sample_variance(e) / static_cast<double>(n)) / numerics::mean(e);

      std::vector<double> log_r(n), r(n);
      for (std::size_t i = 0; i < n; ++i) {
        log_r[i] = -alpha * num[i] - log_den;
        r[i] = std::exp(log_r[i]);
      }
      GillespieRow row;
      row.gamma = cs.gamma;
      row.theta = theta;
      row.alpha = alpha;
      row.mean_log_r = numerics::mean(log_r);
      row.var_log_r = numerics::sample_variance(log_r);
      row.var_r = numerics::sample_variance(r);
      row.median_r = numerics::median(r);
      const double sd = std::sqrt(2.0) * c;
      row.ks_log_r = numerics::ks_distance(log_r, [&](double v) { return numerics::normal_cdf(v, -c * c, sd); });
      row.denominator_rel_se = rel_se;
      row.denominator_unstable = !(rel_se <= config.denominator_rel_se);
      rep.rows.push_back(row);
      var_r.push_back(row.var_r);
    }

    const auto& last = rep.rows.back();
    if (cs.gamma < 0.0) {
      bool dec = true;
      for (std::size_t i = 1; i < var_r.size(); ++i) dec = dec && var_r[i] < var_r[i - 1];
      rep.checks.push_back({"var_r_decreasing", cs.gamma, dec, var_r.back(), 0.0});
    } else if (cs.gamma == 0.0) {
      const double target_var = 2.0 * c * c;
      const double mean_gap = std::abs(last.mean_log_r + c * c);
      const double var_rel = std::abs(last.var_log_r - target_var) / target_var;
      rep.checks.push_back({"mean_log_r", cs.gamma, mean_gap <= config.mean_tol, mean_gap, config.mean_tol});
      rep.checks.push_back(
          {"var_log_r", cs.gamma, var_rel <= config.variance_rel_tol, var_rel, config.variance_rel_tol});
      rep.checks.push_back(
          {"ks_log_r", cs.gamma, last.ks_log_r <= config.ks_threshold, last.ks_log_r, config.ks_threshold});
    } else {
      rep.checks.push_back({"median_r", cs.gamma, last.median_r < config.median_threshold, last.median_r,
                            config.median_threshold});
    }
  }
  return rep;
}

void write_gillespie_csv(std::ostream& os, const GillespieReport& report) {
  io::CsvWriter csv(os, {"gamma", "theta", "alpha", "mean_log_r", "var_log_r", "var_r", "median_r", "ks_log_r",
                         "denominator_rel_se", "denominator_unstable"});
  for (const auto& r : report.rows) {
    csv.field(r.gamma).field(r.theta).field(r.alpha).field(r.mean_log_r).field(r.var_log_r).field(r.var_r);
    csv.field(r.median_r).field(r.ks_log_r).field(r.denominator_rel_se).field(r.denominator_unstable);
    csv.end_row();
  }
}

void write_gillespie_json(std::ostream& os, const GillespieReport& report) {
  nlohmann::ordered_json j;
  j["c"] = report.c;
  j["n_samples"] = report.n_samples;
  j["pass"] = report.pass();
  auto& checks = j["checks"] = nlohmann::ordered_json::array();
  for (const auto& ch : report.checks) {
    checks.push_back({{"name", ch.name}, {"gamma", ch.gamma}, {"pass", ch.pass}, {"value", ch.value},
                      {"threshold", ch.threshold}});
  }
  bool unstable = false;
  for (const auto& r : report.rows) unstable = unstable || r.denominator_unstable;
  j["denominator_unstable"] = unstable;
  os << j.dump(2) << '\n';
}

std::string to_string(PhaseLabel label) {
  switch (label) {
    case PhaseLabel::neutral_rate: return "neutral-rate";
    case PhaseLabel::tilted_rate: return "tilted-rate";
    case PhaseLabel::degenerate_rate: return "degenerate-rate";
  }
  return "unknown";
}

std::string to_string(C0Branch branch) {
  switch (branch) {
    case C0Branch::not_applicable: return "n/a";
    case C0Branch::below_c0: return "below-c0";
    case C0Branch::at_c0: return "at-c0";
    case C0Branch::above_c0: return "above-c0";
  }
  return "unknown";
}

PhaseResult phase_classify(const rates::SelectionRegime& regime) {
  regime.validate();
  PhaseResult out;
  switch (regime.growth) {
    case rates::GrowthClass::sublinear: out.label = PhaseLabel::neutral_rate; break;
    case rates::GrowthClass::linear: out.label = PhaseLabel::tilted_rate; break;
    case rates::GrowthClass::superlinear: out.label = PhaseLabel::degenerate_rate; break;
  }
  if (regime.growth == rates::GrowthClass::linear) {
    out.constant = rates::selection_sup(regime.c, regime.h).sup_value;
    if (regime.h.kind == rates::HFunctional::Kind::plus_phi && regime.h.m == 2) {
      const auto br = rates::plus_phi2_sup_branch(regime.c);
      const double c0 = rates::solve_c0().c0;
      out.branch = regime.c < c0 ? C0Branch::below_c0 : (regime.c > c0 ? C0Branch::above_c0 : C0Branch::at_c0);
      out.constant = br.value;
    }
  }
  out.rate = [regime](std::span<const double> p) { return rates::rate_selection(p, regime); };
  return out;
}

rates::SelectionRegime regime_from_alpha(double c, double gamma, const rates::HFunctional& h) {
  if (!(c > 0.0)) throw DomainError("regime_from_alpha: c must be positive");
  rates::SelectionRegime r;
  r.h = h;
  if (gamma < 1.0) {
    r.growth = rates::GrowthClass::sublinear;
  } else if (gamma == 1.0) {
    r.growth = rates::GrowthClass::linear;
    r.c = c;
  } else {
    r.growth = rates::GrowthClass::superlinear;
  }
  return r;
}

}  // namespace pdlab::selection
