#ifndef QGEO_RNG_HPP
#define QGEO_RNG_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string_view>

namespace qgeo {

/// FNV-1a 64-bit hash; used for RNG sub-stream derivation and content hashes.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 14695981039346656037ull) {
  return fnv1a64(s.data(), s.size(), h);
}

/// Independent deterministic generator for one named stage of a run.  All
/// randomness flows from (seed, stage name[, index]), so stages can be
/// reordered or skipped without perturbing each other.
inline std::mt19937_64 substream(std::uint64_t seed, std::string_view name,
                                 std::uint64_t index = 0) {
  unsigned char buf[16];
  std::memcpy(buf, &seed, 8);
  std::memcpy(buf + 8, &index, 8);
  return std::mt19937_64(fnv1a64(buf, 16, fnv1a64(name)));
}

/// Uniform double in (0, 1].  Hand-rolled (53-bit mantissa draw) so results
/// are identical across standard libraries, unlike std::uniform_real_distribution.
inline double runif(std::mt19937_64& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double runif(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

/// Standard normal via Box-Muller on the portable uniform above.
inline double rnorm(std::mt19937_64& rng) {
  const double u1 = runif(rng); // in (0,1], log is safe
  const double u2 = runif(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

} // namespace qgeo

#endif // QGEO_RNG_HPP
