#pragma once

// Seeded random streams. Every stochastic operation derives an independent
// stream from (seed, stage tag, item index), so results do not depend on the
// order in which items are processed or on the number of worker threads.
//
// Uniform variates are produced from raw 64-bit words directly rather than
// through <random> distributions, whose output is implementation-defined.

#include "kakeya/core.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace kakeya {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t tag_hash(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Stream for item `index` of stage `tag` under the global `seed`.
  static Rng stream(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
    return Rng(splitmix64(splitmix64(seed) ^ tag_hash(tag)) + splitmix64(index + 0x632be59bd9b4e019ULL));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift with rejection.
    __uint128_t m = static_cast<__uint128_t>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      std::uint64_t t = (0 - n) % n;
      while (low < t) {
        m = static_cast<__uint128_t>(engine_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  Vec3 unit_vector() {
    double z = uniform(-1.0, 1.0);
    double phi = uniform(0.0, 2.0 * kPi);
    double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
  }

  Vec3 in_ball(const Vec3& center, double radius) {
    for (;;) {
      Vec3 p(uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0));
      if (p.squaredNorm() <= 1.0) return center + radius * p;
    }
  }

  /// Uniform point of the disk of given radius, as planar coordinates.
  Vec2 in_disk(double radius) {
    double r = radius * std::sqrt(uniform());
    double phi = uniform(0.0, 2.0 * kPi);
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  Vec3 in_box(const Vec3& lo, const Vec3& hi) {
    return {uniform(lo.x(), hi.x()), uniform(lo.y(), hi.y()), uniform(lo.z(), hi.z())};
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace kakeya
