#pragma once

// Deterministic hashing and seeded randomness used across the project.
//
// Every stochastic choice (template sampling, demonstration draws, mock
// scores) is derived from these primitives so that results are bit-identical
// across runs, platforms and implementations. Nothing here is
// cryptographic; the constants are the published FNV-1a and splitmix64
// parameters.

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace templens {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// FNV-1a over raw bytes, chainable via the running-hash argument.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = kFnvOffsetBasis) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

/// FNV-1a over a single byte.
inline std::uint64_t fnv1a64_byte(unsigned char b, std::uint64_t h) {
  h ^= b;
  h *= kFnvPrime;
  return h;
}

/// FNV-1a over the 8 little-endian bytes of an integer.
inline std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h) {
  for (int i = 0; i < 8; ++i) {
    h = fnv1a64_byte(static_cast<unsigned char>(v >> (8 * i)), h);
  }
  return h;
}

/// splitmix64 output function (finalizer).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Maps a 64-bit hash to the open interval (0,1) using the top 53 bits.
inline double unit_from_hash(std::uint64_t h) {
  const double u = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
  // Round-to-nearest sends the topmost mantissa value to exactly 1.0;
  // pull that single case back inside the open interval.
  return u < 1.0 ? u : 1.0 - 0x1.0p-53;
}

/// splitmix64 stream generator (Steele, Lea & Flood 2014).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Uniform draw in [0, n) by rejection; exact, no modulo bias.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  double next_unit() { return unit_from_hash(next()); }

 private:
  std::uint64_t state_;
};

/// Derives an independent stream seed from a root seed, a purpose label and
/// an optional salt. Adding a new purpose never perturbs existing streams.
inline std::uint64_t named_stream(std::uint64_t root, std::string_view name,
                                  std::uint64_t salt = 0) {
  std::uint64_t h = fnv1a64_u64(root, kFnvOffsetBasis);
  h = fnv1a64(name, h);
  h = fnv1a64_u64(salt, h);
  return mix64(h);
}

/// Order-sensitive hash of a small id tuple.
inline std::uint64_t hash_ids(std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = kFnvOffsetBasis;
  for (std::uint64_t v : ids) h = fnv1a64_u64(v, h);
  return mix64(h);
}

}  // namespace templens
