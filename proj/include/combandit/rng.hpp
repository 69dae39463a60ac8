#pragma once

// Deterministic pseudo-random streams. Everything here is fixed-algorithm and
// platform-independent: the same seed yields the same byte-for-byte sequence
// on every compiler/OS, which the replication layer depends on. The standard
// <random> distributions are deliberately not used (their output is
// implementation-defined).

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace combandit {

// ---- seed mixing -----------------------------------------------------------

// One splitmix64 step: advances `state` by the golden-ratio increment and
// returns the mixed output.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Seed for one named stream of one replication. The contract is part of the
// library's stable interface (reports cite seeds, and replays depend on it):
//
//   s1 = splitmix64_next(base_seed ^ 0xA0761D6478BD642F * (run_index + 1))
//   s2 = splitmix64_next(s1       ^ 0xE7037ED1A0B428DB * (stream_id + 1))
//   derive_seed = s2
//
// Stream ids used by the runner: 0 = environment, 1 = patience, 2 = agent.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t run_index,
                                 std::uint64_t stream_id) {
  std::uint64_t s = base_seed ^ (0xA0761D6478BD642Full * (run_index + 1));
  const std::uint64_t first = splitmix64_next(s);
  s = first ^ (0xE7037ED1A0B428DBull * (stream_id + 1));
  return splitmix64_next(s);
}

// ---- stream ----------------------------------------------------------------

// xoshiro256** generator with helpers for the handful of variate shapes the
// library needs. One stream has one owner; streams are never shared across
// threads (each replication constructs its own from derive_seed).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform integer in [0, bound). Lemire's multiply-shift with rejection:
  // unbiased, and consumes exactly one u64 except on (rare) rejections.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("next_below: bound must be >= 1");
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform double in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in (0, 1]; safe as a log() argument.
  double next_double_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (two uniforms per call, no cached spare so
  // consumption per call is constant).
  double next_gaussian() {
    const double u1 = next_double_open();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // Gamma(shape, 1) for shape >= 1 via the Marsaglia-Tsang squeeze.
  double next_gamma(double shape) {
    if (!(shape >= 1.0))
      throw std::invalid_argument("next_gamma: shape must be >= 1");
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = next_gaussian();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = next_double_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Beta(a, b) for a, b >= 1 (the posterior family used here never leaves
  // that region) as a ratio of gamma draws.
  double next_beta(double a, double b) {
    const double x = next_gamma(a);
    const double y = next_gamma(b);
    return x / (x + y);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
};

}  // namespace combandit
