#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace scribseg {

// Deterministic RNG. std::mt19937_64 supplies the bit stream (its output is
// pinned by the standard); the uniform/normal transforms are written out here
// instead of using std::*_distribution, whose algorithms are
// implementation-defined and would break reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Independent stream for (seed, stream_id). Keeps e.g. batch sampling,
  // dropout and alpha draws from perturbing each other's sequences.
  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix(seed + mix(stream)));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in the open interval (0, 1); never returns an endpoint.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t span = UINT64_MAX - (UINT64_MAX % n + 1) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (span == UINT64_MAX || r <= span) return r % n;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; two draws per call, no cached spare.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  // splitmix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
};

// Stream ids for Rng::derive. One per independent randomness consumer.
namespace rng_stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kBatch = 2;
inline constexpr std::uint64_t kAugment = 3;
inline constexpr std::uint64_t kDropout = 4;
inline constexpr std::uint64_t kAlpha = 5;
inline constexpr std::uint64_t kSynth = 6;
inline constexpr std::uint64_t kFolds = 7;
inline constexpr std::uint64_t kPermutation = 8;
}  // namespace rng_stream

}  // namespace scribseg
