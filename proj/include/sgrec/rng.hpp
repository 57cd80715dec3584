// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace sgrec {

/// Stream tags for Rng::derive. Every consumer of randomness owns a tag so
/// that draws stay independent and reproducible no matter what order the
/// consumers run in.
namespace rng_streams {
constexpr std::uint64_t kSplit = 1;
constexpr std::uint64_t kInit = 2;
constexpr std::uint64_t kEpochShuffle = 3;
constexpr std::uint64_t kEps = 4;
constexpr std::uint64_t kDropout = 5;
constexpr std::uint64_t kNegatives = 6;
}  // namespace rng_streams

/// Deterministic, platform-independent random number source.
///
/// The standard library engines are portable but the distributions are not
/// (uniform_int_distribution and normal_distribution are allowed to differ
/// between standard libraries), so every draw here is hand-rolled on top of
/// xoshiro256++. All randomness in the project flows through this type, which
/// is what makes seeded runs reproduce bit-exactly across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // splitmix64 expansion of the seed into the xoshiro state.
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  /// Derives an independent stream for (seed, a, b, c). Used to give every
  /// (epoch, user, purpose) triple its own generator so that parallel and
  /// serial training see identical draws.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
    std::uint64_t x = seed;
    x = splitmix64(x) ^ (a * 0x9e3779b97f4a7c15ULL);
    x = splitmix64(x) ^ (b * 0xbf58476d1ce4e5b9ULL);
    x = splitmix64(x) ^ (c * 0x94d049bb133111ebULL);
    return Rng(splitmix64(x));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t threshold = -bound % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  /// Standard normal via Marsaglia polar; caches the second deviate.
  double next_normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * factor;
    has_cached_ = true;
    return u * factor;
  }

  /// Glorot-uniform draw for a fan_in x fan_out weight.
  double next_xavier(std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return (2.0 * next_double() - 1.0) * limit;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Uniform sample of `n` distinct positions from [0, pool.size()), returned
  /// as values from `pool`. Partial Fisher-Yates on a scratch copy.
  template <typename T>
  std::vector<T> sample_without_replacement(const std::vector<T>& pool, std::size_t n) {
    std::vector<T> scratch(pool);
    if (n > scratch.size()) n = scratch.size();
    std::vector<T> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(next_below(scratch.size() - i));
      std::swap(scratch[i], scratch[j]);
      out.push_back(scratch[i]);
    }
    return out;
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace sgrec
