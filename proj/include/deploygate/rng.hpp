#pragma once

// Counter-derived random streams.
//
// Every random quantity in the pipeline is drawn from a Stream keyed by
// (seed, purpose tag, index). Streams are independent of one another and of
// evaluation order, so sampling and episode execution can be spread over any
// number of threads without changing a single output bit.
//
// The generator is SplitMix64 (Steele, Lea, Flood 2014): a Weyl sequence with
// increment 0x9E3779B97F4A7C15 passed through the 64-bit finalizer with
// multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB. Tags are hashed with
// 64-bit FNV-1a (offset 0xCBF29CE484222325, prime 0x100000001B3).

#include <cstdint>
#include <string_view>

namespace deploygate {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Key for the stream serving `tag` at position `index` under `seed`.
constexpr std::uint64_t derive_key(std::uint64_t seed, std::string_view tag,
                                   std::uint64_t index = 0) noexcept {
  std::uint64_t k = mix64(seed + kGolden);
  k = mix64(k ^ fnv1a(tag));
  return mix64(k ^ (index + kGolden));
}

class Stream {
 public:
  explicit constexpr Stream(std::uint64_t key) noexcept : state_(key) {}
  Stream(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) noexcept
      : state_(derive_key(seed, tag, index)) {}

  constexpr std::uint64_t next() noexcept {
    state_ += kGolden;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection keeps it unbiased; n must be > 0.
  constexpr std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

 private:
  std::uint64_t state_;
};

}  // namespace deploygate
