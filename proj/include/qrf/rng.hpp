#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace qrf {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives one stream key from a seed and a list of subkeys. Used to give
// every (hypothesis, draw, rank) its own reproducible stream so results do
// not depend on evaluation order.
inline std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ull);
  for (std::uint64_t k : keys) h = mix64(h ^ (k + 0x9e3779b97f4a7c15ull));
  return h;
}

// Counter-based SplitMix64 generator. Deterministic across platforms; all
// randomness in the library flows through this type.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  // Uniform double in [0, 1), 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection keeps the draw unbiased.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t rem = std::uint64_t(-n) % n;
    for (;;) {
      const std::uint64_t v = next();
      if (v >= rem) return v % n;
    }
  }

  // Standard normal via Box-Muller; second value cached.
  double normal() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace qrf
