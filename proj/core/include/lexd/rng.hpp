#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace lexd {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a over bytes, then mixed with `seed` through splitmix64. Stable across
/// platforms and runs, unlike std::hash.
constexpr std::uint64_t stable_hash(std::string_view bytes,
                                    std::uint64_t seed = 0) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(h ^ mix64(seed));
}

/// Combines integer coordinates into one 64-bit key.
constexpr std::uint64_t hash_coords(std::initializer_list<std::uint64_t> xs) noexcept {
  std::uint64_t h = 0x51ed270b27a5e1d3ULL;
  for (auto x : xs) h = mix64(h ^ mix64(x));
  return h;
}

/// Maps 64 random bits to a double in [0, 1).
constexpr double unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Sequential seeded generator. Only the engine (mt19937_64) is taken from
/// the standard library; the distributions are written out here because the
/// std:: distributions are implementation-defined and would break
/// byte-identical outputs across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return unit_interval(engine_()); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n) {
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    index(static_cast<std::uint64_t>(hi - lo) + 1));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lexd
