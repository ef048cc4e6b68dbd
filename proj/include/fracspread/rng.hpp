#pragma once

#include <cstdint>

// Stateless splittable randomness: every draw is a pure function of a seed
// chain, so replicated experiments are reproducible regardless of execution
// order or worker count.

namespace fracspread::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept {
  return mix64(seed ^ (mix64(value + kGolden) + (seed << 6) + (seed >> 2)));
}

constexpr std::uint64_t hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
  return hash_combine(hash_combine(a, b), c);
}

// Maps a 64-bit word to the open interval (0,1); never returns exactly 0 or 1.
constexpr double u01(std::uint64_t z) noexcept {
  return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
}

// Threshold of `node` in replicate `rep` of the stream `master`.
constexpr double threshold_draw(std::uint64_t master, std::uint64_t rep, std::uint64_t node) noexcept {
  return u01(hash3(master, rep, node));
}

// Small sequential generator for shuffles and instance sampling.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += kGolden);
    return mix64(z);
  }

  constexpr double next_u01() noexcept { return u01(next()); }

  // Uniform integer in [0, bound).
  constexpr std::uint64_t next_below(std::uint64_t bound) noexcept {
    return next() % bound;
  }

 private:
  std::uint64_t state_;
};

}  // namespace fracspread::rng
