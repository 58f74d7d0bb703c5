#include "wpt/rng.hpp"

#include <cmath>

namespace wpt {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_double_pos() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RngStream::next_normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  double u1 = next_double_pos();
  double u2 = next_double();
  double r = std::sqrt(-2.0 * std::log(u1));
  cached_normal_ = r * std::sin(kTwoPi * u2);
  has_cached_ = true;
  return r * std::cos(kTwoPi * u2);
}

std::complex<double> RngStream::next_cnormal(double var) {
  double s = std::sqrt(0.5 * var);
  double re = next_normal();
  double im = next_normal();
  return {s * re, s * im};
}

RngStream substream(std::uint64_t seed, std::uint64_t index, std::uint64_t salt) {
  std::uint64_t key = mix64(seed);
  key = mix64(key ^ (index + 0x632be59bd9b4e019ULL));
  key = mix64(key ^ (salt + 0x100000001b3ULL));
  return RngStream(key);
}

}  // namespace wpt
