#pragma once

#include <complex>
#include <cstdint>

namespace wpt {

// Counter-free splitmix64 stream. Used instead of <random> engines so that
// sequences are identical across standard library implementations, and so
// that per-frame substreams can be derived cheaply from (seed, index) keys.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double next_double();

  // Uniform in (0, 1]; safe as a log() argument.
  double next_double_pos();

  // Standard normal via Box-Muller. The pair's second value is cached.
  double next_normal();

  // Circularly symmetric complex normal with E|x|^2 = var.
  std::complex<double> next_cnormal(double var);

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

// Independent substream for a (seed, index, salt) key. Streams for different
// keys are statistically independent; the mapping is a fixed bijective hash,
// so results do not depend on how work is split across threads.
RngStream substream(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0);

}  // namespace wpt
