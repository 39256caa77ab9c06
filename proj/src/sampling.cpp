#include "pdlab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pdlab/errors.hpp"
#include "pdlab/parallel.hpp"

namespace pdlab::sampling {

namespace {

void require_theta(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    std::ostringstream os;
    os << "theta must be positive and finite (got " << theta << ")";
    throw DomainError(os.str());
  }
}

}  // namespace

void SamplerConfig::validate() const {
  require_theta(theta);
  if (const auto* rt = std::get_if<ResidualTarget>(&truncation)) {
    if (!(rt->epsilon > 0.0 && rt->epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
    if (!(rt->delta > 0.0 && rt->delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  } else if (const auto* fc = std::get_if<FixedCount>(&truncation)) {
    if (fc->n < 1) throw DomainError("truncation count must be >= 1");
  }
}

std::size_t SamplerConfig::stick_count() const {
  validate();
  return std::visit(
      [&](const auto& t) -> std::size_t {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, FixedCount>) {
          return t.n;
        } else if constexpr (std::is_same_v<T, ResidualTarget>) {
          return choose_truncation(theta, t.epsilon, t.delta);
        } else {
          return theta_squared_truncation(theta);
        }
      },
      truncation);
}

StickSequence::StickSequence(double theta) : theta_(theta) { require_theta(theta); }

StickSequence StickSequence::from_sticks(double theta, std::span<const double> sticks) {
  StickSequence s(theta);
  s.sticks_.reserve(sticks.size());
  s.freqs_.reserve(sticks.size());
  for (double u : sticks) s.append(u);
  return s;
}

void StickSequence::append(double u) {
  if (!(u >= 0.0 && u < 1.0)) throw DomainError("stick must lie in [0, 1)");
  sticks_.push_back(u);
  freqs_.push_back(residual_ * u);
  residual_ *= (1.0 - u);
}

double RankedFrequencies::ranked_mass() const {
  // Ascending order sums the small entries first.
  std::vector<double> tmp(p.rbegin(), p.rend());
  double s = 0.0;
  for (double x : tmp) s += x;
  return s;
}

double beta1_inverse_cdf(double v, double theta) {
  return -std::expm1(std::log1p(-v) / theta);
}

StickSequence draw_sticks(const SamplerConfig& config, std::size_t count) {
  config.validate();
  if (count < 1) throw DomainError("count must be >= 1");
  StreamRng rng(config.seed, config.stream_id);
  StickSequence s(config.theta);
  for (std::size_t i = 0; i < count; ++i) s.append(beta1_inverse_cdf(rng.uniform(), config.theta));
  return s;
}

StickSequence draw_gem(const SamplerConfig& config) {
  return draw_sticks(config, config.stick_count());
}

RankedFrequencies gem_to_ranked(const StickSequence& sticks) {
  RankedFrequencies r;
  r.theta = sticks.theta();
  r.p.assign(sticks.freqs().begin(), sticks.freqs().end());
  std::stable_sort(r.p.begin(), r.p.end(), std::greater<>());
  r.residual = sticks.residual();
  return r;
}

double residual_bound(double theta, std::size_t n, double delta) {
  require_theta(theta);
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("delta must lie in (0, 1]");
  const double log_bound =
      -theta * std::log(delta) - static_cast<double>(n) * std::numbers::ln2;
  if (log_bound >= 0.0) return 1.0;
  return std::exp(log_bound);
}

std::size_t choose_truncation(double theta, double epsilon, double delta) {
  require_theta(theta);
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (epsilon >= 1.0) return 1;
  const double guess =
      std::ceil((theta * std::log(1.0 / delta) + std::log(1.0 / epsilon)) / std::numbers::ln2);
  std::size_t n = static_cast<std::size_t>(std::max(1.0, guess));
  while (residual_bound(theta, n, delta) > epsilon) ++n;
  while (n > 1 && residual_bound(theta, n - 1, delta) <= epsilon) --n;
  return n;
}

std::size_t theta_squared_truncation(double theta) {
  require_theta(theta);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(theta * theta)));
}

double cdf_max_stick(double x, std::size_t n, double theta) {
  require_theta(theta);
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double single = -std::expm1(theta * std::log1p(-x));
  return std::pow(single, static_cast<double>(n));
}

GemGenerator::GemGenerator(double theta, std::uint64_t seed, std::uint64_t stream_id)
    : rng_(seed, stream_id), theta_(theta) {
  require_theta(theta);
}

double GemGenerator::next() {
  last_stick_ = beta1_inverse_cdf(rng_.uniform(), theta_);
  const double x = residual_ * last_stick_;
  residual_ *= (1.0 - last_stick_);
  return x;
}

GemSummary summarize_gem(double theta, std::size_t stick_count, std::uint64_t seed,
                         std::uint64_t stream_id, std::size_t top_r,
                         std::span<const int> powers) {
  GemGenerator gen(theta, seed, stream_id);
  GemSummary s;
  s.top.reserve(top_r + 1);
  s.power_sums.assign(powers.size(), 0.0);
  for (std::size_t i = 0; i < stick_count; ++i) {
    const double x = gen.next();
    s.max_stick = std::max(s.max_stick, gen.last_stick());
    if (top_r > 0 && (s.top.size() < top_r || x > s.top.back())) {
      auto pos = std::upper_bound(s.top.begin(), s.top.end(), x, std::greater<>());
      s.top.insert(pos, x);
      if (s.top.size() > top_r) s.top.pop_back();
    }
    for (std::size_t j = 0; j < powers.size(); ++j) {
      double xp = x;
      for (int e = 1; e < powers[j]; ++e) xp *= x;
      s.power_sums[j] += xp;
    }
  }
  s.residual = gen.residual();
  return s;
}

std::vector<GemSummary> summarize_batch(double theta, const Truncation& truncation,
                                        std::uint64_t seed, std::uint64_t first_stream,
                                        std::size_t n_samples, std::size_t top_r,
                                        std::span<const int> powers) {
  const SamplerConfig cfg{theta, truncation, seed, first_stream};
  const std::size_t count = cfg.stick_count();
  return parallel_map<GemSummary>(n_samples, [&](std::size_t i) {
    return summarize_gem(theta, count, seed, first_stream + i, top_r, powers);
  });
}

}  // namespace pdlab::sampling
