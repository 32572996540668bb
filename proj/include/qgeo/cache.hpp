#ifndef QGEO_CACHE_HPP
#define QGEO_CACHE_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>

#include "qgeo/kernel.hpp"
#include "qgeo/rng.hpp"
#include "qgeo/spectral.hpp"
#include "qgeo/types.hpp"

namespace qgeo {

/// Content key for a Laplacian eigendecomposition: hash of the point bytes
/// and every parameter that shapes the kernel.  Any change invalidates it.
inline std::uint64_t laplacian_cache_key(const PointCloud& cloud, double epsilon,
                                         KernelKind kind, double truncation_multiple) {
  std::uint64_t h = fnv1a64("qgeo-laplacian-v1");
  h = fnv1a64(cloud.points.data(),
              static_cast<std::size_t>(cloud.points.size()) * sizeof(double), h);
  const Index rows = cloud.points.rows(), cols = cloud.points.cols();
  h = fnv1a64(&rows, sizeof(rows), h);
  h = fnv1a64(&cols, sizeof(cols), h);
  h = fnv1a64(&epsilon, sizeof(epsilon), h);
  const std::uint32_t k = kind == KernelKind::gaussian ? 0u : 1u;
  h = fnv1a64(&k, sizeof(k), h);
  h = fnv1a64(&truncation_multiple, sizeof(truncation_multiple), h);
  return h;
}

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "laplacian cache assumes a little-endian host");

inline void put_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline bool get_bytes(std::ifstream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  return static_cast<bool>(in);
}

inline constexpr char cache_magic[8] = {'Q', 'G', 'E', 'O', 'L', 'A', 'P', '1'};

} // namespace detail

/// Serializes an eigendecomposition so repeat runs on the same cloud skip the
/// dominant eigensolve.  Layout (little-endian): magic, version, key, n,
/// epsilon, eigenvalues, d_half, eigenvectors (column-major).
inline void save_laplacian(const SpectralLaplacian& lap, std::uint64_t key,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open cache file '" + path.string() + "' for writing");
  detail::put_bytes(out, detail::cache_magic, sizeof(detail::cache_magic));
  const std::uint32_t version = 1;
  detail::put_bytes(out, &version, sizeof(version));
  detail::put_bytes(out, &key, sizeof(key));
  const std::uint64_t n = static_cast<std::uint64_t>(lap.size());
  detail::put_bytes(out, &n, sizeof(n));
  detail::put_bytes(out, &lap.epsilon, sizeof(lap.epsilon));
  detail::put_bytes(out, lap.eigenvalues.data(), n * sizeof(double));
  detail::put_bytes(out, lap.d_half.data(), n * sizeof(double));
  detail::put_bytes(out, lap.eigenvectors_sym.data(), n * n * sizeof(double));
  if (!out) throw DataError("failed while writing cache file '" + path.string() + "'");
}

/// Loads a cached decomposition if the file exists, parses, and matches the
/// expected content key; returns nullopt otherwise (callers then recompute).
inline std::optional<SpectralLaplacian> load_laplacian(const std::filesystem::path& path,
                                                       std::uint64_t expected_key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t key = 0, n = 0;
  if (!detail::get_bytes(in, magic, sizeof(magic)) ||
      std::memcmp(magic, detail::cache_magic, sizeof(magic)) != 0)
    return std::nullopt;
  if (!detail::get_bytes(in, &version, sizeof(version)) || version != 1) return std::nullopt;
  if (!detail::get_bytes(in, &key, sizeof(key)) || key != expected_key) return std::nullopt;
  if (!detail::get_bytes(in, &n, sizeof(n)) || n < 2 || n > (1u << 24)) return std::nullopt;

  SpectralLaplacian lap;
  const auto ni = static_cast<Index>(n);
  lap.eigenvalues.resize(ni);
  lap.d_half.resize(ni);
  lap.eigenvectors_sym.resize(ni, ni);
  if (!detail::get_bytes(in, &lap.epsilon, sizeof(lap.epsilon)) ||
      !detail::get_bytes(in, lap.eigenvalues.data(), n * sizeof(double)) ||
      !detail::get_bytes(in, lap.d_half.data(), n * sizeof(double)) ||
      !detail::get_bytes(in, lap.eigenvectors_sym.data(), n * n * sizeof(double)))
    return std::nullopt;
  return lap;
}

} // namespace qgeo

#endif // QGEO_CACHE_HPP
