#pragma once

#include <cstdint>

namespace whittle::rng {

// Counter-based generator: every draw is a pure function of
// (seed, slot, stream, user), so the order in which users are visited
// (serially or by several threads) does not change any value.

constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

enum Stream : std::uint64_t {
  kInitialChannel = 1,
  kChannel = 2,
  kTieBreak = 3,
  kRelaxed = 4,
};

constexpr std::uint64_t slot_key(std::uint64_t seed, std::uint64_t slot, std::uint64_t stream) {
  return mix64(mix64(seed) ^ (slot * 0xD1B54A32D192ED03ull + stream * 0x8CB92BA72F3D8DD7ull));
}

constexpr std::uint64_t draw(std::uint64_t key, std::uint64_t i) { return mix64(key + i * 0x9E3779B97F4A7C15ull); }

/// Integer threshold t with P(draw < t) = prob to within 2^-64.
inline std::uint64_t threshold(double prob) {
  if (!(prob > 0.0)) return 0;
  if (prob >= 1.0) return UINT64_MAX;
  return static_cast<std::uint64_t>(prob * 18446744073709551616.0);
}

/// For 32-bit uniforms: P(u < t) = prob to within 2^-32, exact at 0 and 1.
inline std::uint64_t threshold32(double prob) {
  if (!(prob > 0.0)) return 0;
  if (prob >= 1.0) return std::uint64_t{1} << 32;
  return static_cast<std::uint64_t>(prob * 4294967296.0);
}

constexpr std::uint32_t low32(std::uint64_t x) { return static_cast<std::uint32_t>(x); }
constexpr std::uint32_t high32(std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); }

/// 32-bit uniform of user i: half of the 64-bit draw shared with its pair.
constexpr std::uint32_t uniform32(std::uint64_t key, std::uint64_t i) {
  const std::uint64_t x = draw(key, i >> 1);
  return (i & 1) ? high32(x) : low32(x);
}

inline double unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

}  // namespace whittle::rng
