#pragma once

#include <cstdint>
#include <random>

namespace pdlab {

/// Per-stream random source. Each (seed, stream_id) pair seeds an independent
/// mt19937_64 through std::seed_seq, both of which are fully specified by the
/// standard, so streams are bit-reproducible across platforms and worker counts.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x9e3779b9u};
    engine_.seed(seq);
  }

  /// Uniform double on [0, 1) with 53 random bits. Avoids
  /// std::uniform_real_distribution, whose output is implementation-defined.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pdlab
