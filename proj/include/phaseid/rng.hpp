#pragma once

#include <cmath>
#include <cstdint>

namespace phaseid {

// Counter-based random streams. Every consumer derives its own stream from
// (seed, key...) so results do not depend on evaluation order or thread count.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t key) {
  std::uint64_t s = seed ^ (key * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
  return splitmix64(s);
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {
    // warm up so that near-equal seeds decorrelate
    splitmix64(state_);
  }
  RngStream(std::uint64_t seed, std::uint64_t key) : RngStream(mix_key(seed, key)) {}
  RngStream(std::uint64_t seed, std::uint64_t k1, std::uint64_t k2)
      : RngStream(mix_key(mix_key(seed, k1), k2)) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform in (0,1), both endpoints excluded
  double next_double() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Box-Muller; hand-rolled so sequences are identical across standard
  // libraries and thread counts.
  double next_normal() {
    const double u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double next_normal(double mean, double stddev) { return mean + stddev * next_normal(); }

  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(next_double() * static_cast<double>(n)) % n;
  }

 private:
  std::uint64_t state_;
};

}  // namespace phaseid
