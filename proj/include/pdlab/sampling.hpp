#pragma once

// GEM stick-breaking, conversion to ranked PD(theta) frequencies, and
// truncation control through the Markov bound on the residual mass
//   P{W_n >= delta} <= delta^{-theta} * E[(1 - U)^theta]^n = delta^{-theta} 2^{-n}.

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "pdlab/rng.hpp"

namespace pdlab::sampling {

/// Exactly n sticks.
struct FixedCount {
  std::size_t n = 1;
};

/// Smallest n with P{W_n >= delta} <= epsilon under the Markov bound.
struct ResidualTarget {
  double epsilon = 1e-12;
  double delta = 1e-9;
};

/// n = floor(theta^2), the count used by the exponential-equivalence argument.
struct ThetaSquared {};

using Truncation = std::variant<ResidualTarget, FixedCount, ThetaSquared>;

struct SamplerConfig {
  double theta = 1.0;
  Truncation truncation = ResidualTarget{};
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  /// Throws DomainError on theta <= 0, epsilon/delta outside (0,1) or n == 0.
  void validate() const;
  /// Number of sticks implied by the truncation policy.
  std::size_t stick_count() const;
};

/// Raw Beta(1, theta) sticks U_k, the GEM frequencies
/// X_k = U_k * prod_{j<k} (1 - U_j), and the residual W_n = prod (1 - U_j).
class StickSequence {
 public:
  explicit StickSequence(double theta);

  static StickSequence from_sticks(double theta, std::span<const double> sticks);

  /// Appends one stick u in [0, 1).
  void append(double u);

  double theta() const { return theta_; }
  std::span<const double> sticks() const { return sticks_; }
  std::span<const double> freqs() const { return freqs_; }
  double residual() const { return residual_; }
  std::size_t size() const { return sticks_.size(); }

 private:
  double theta_;
  std::vector<double> sticks_;
  std::vector<double> freqs_;
  double residual_ = 1.0;
};

/// Descending frequencies plus the unranked leftover mass; a point of the
/// closed simplex (sum p + residual = 1).
struct RankedFrequencies {
  double theta = 1.0;
  std::vector<double> p;
  double residual = 1.0;

  double ranked_mass() const;
};

/// Inverse CDF of Beta(1, theta): u = 1 - (1 - v)^{1/theta}, in log1p form.
double beta1_inverse_cdf(double v, double theta);

StickSequence draw_sticks(const SamplerConfig& config, std::size_t count);

/// draw_sticks with count = config.stick_count().
StickSequence draw_gem(const SamplerConfig& config);

/// Stable descending sort of the GEM frequencies; residual carried through.
RankedFrequencies gem_to_ranked(const StickSequence& sticks);

/// Markov bound delta^{-theta} (1/2)^n on P{W_n >= delta}, clamped to [0, 1].
double residual_bound(double theta, std::size_t n, double delta);

/// Smallest n >= 1 with residual_bound(theta, n, delta) <= epsilon.
std::size_t choose_truncation(double theta, double epsilon, double delta);

/// max(1, floor(theta^2)).
std::size_t theta_squared_truncation(double theta);

/// Exact CDF (1 - (1 - x)^theta)^n of the maximum of n Beta(1, theta) sticks.
double cdf_max_stick(double x, std::size_t n, double theta);

/// Streaming view of one GEM realization; never stores the sequence.
class GemGenerator {
 public:
  GemGenerator(double theta, std::uint64_t seed, std::uint64_t stream_id);

  /// Draws the next stick and returns the corresponding frequency X_k.
  double next();
  double last_stick() const { return last_stick_; }
  double residual() const { return residual_; }

 private:
  StreamRng rng_;
  double theta_;
  double residual_ = 1.0;
  double last_stick_ = 0.0;
};

/// Per-realization statistics collected in one streaming pass.
struct GemSummary {
  std::vector<double> top;         ///< largest `top_r` frequencies, descending
  std::vector<double> power_sums;  ///< sum_k X_k^m for each requested m
  double residual = 1.0;
  double max_stick = 0.0;
};

GemSummary summarize_gem(double theta, std::size_t stick_count, std::uint64_t seed,
                         std::uint64_t stream_id, std::size_t top_r,
                         std::span<const int> powers);

/// summarize_gem for streams first_stream .. first_stream + n_samples - 1,
/// evaluated in parallel. Bit-identical for any worker count.
std::vector<GemSummary> summarize_batch(double theta, const Truncation& truncation,
                                        std::uint64_t seed, std::uint64_t first_stream,
                                        std::size_t n_samples, std::size_t top_r,
                                        std::span<const int> powers);

}  // namespace pdlab::sampling
