#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

namespace dbm {

/// SplitMix64 finalizer; used to whiten seeds and to hash grid coordinates.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stable 64-bit hash combine. Portable: depends only on the input bits.
constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

inline std::uint64_t hash_double(double x) {
  if (x == 0.0) x = 0.0;  // fold -0 into +0
  return std::bit_cast<std::uint64_t>(x);
}

/// Derives an independent stream seed from a parent seed and a tag.
constexpr std::uint64_t substream(std::uint64_t seed, std::uint64_t tag) {
  return hash_combine(mix64(seed), tag);
}

/// Seedable generator. Wraps mt19937_64 (whose output sequence is fixed by
/// the standard) and derives floating-point variates by hand so samples are
/// bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_left() { return 1.0 - uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    // rejection removes modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  /// Number of failures before the first success of a Bernoulli(p) stream,
  /// p in (0, 1].
  std::uint64_t geometric(double p) {
    if (p >= 1.0) return 0;
    const double g = std::floor(std::log(uniform_open_left()) / std::log1p(-p));
    return g >= 1.8e19 ? UINT64_MAX : static_cast<std::uint64_t>(g);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dbm
