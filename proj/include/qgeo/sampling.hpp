#ifndef QGEO_SAMPLING_HPP
#define QGEO_SAMPLING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "qgeo/rng.hpp"
#include "qgeo/types.hpp"

namespace qgeo {

enum class Spacing { regular, uniform_random };

/// Unit circle in R^2; intrinsic coordinate is the angle in [0, 2*pi).
inline PointCloud sample_circle(Index n, Spacing spacing = Spacing::regular,
                                std::uint64_t seed = 0) {
  if (n < 3) throw std::invalid_argument("sample_circle: need n >= 3");
  PointCloud cloud;
  cloud.points.resize(n, 2);
  cloud.intrinsic.emplace(n, 1);
  cloud.source_tag = Manifold::circle;
  auto rng = substream(seed, "sampling");
  for (Index j = 0; j < n; ++j) {
    const double theta = spacing == Spacing::regular
                             ? 2.0 * pi * static_cast<double>(j) / static_cast<double>(n)
                             : runif(rng, 0.0, 2.0 * pi);
    (*cloud.intrinsic)(j, 0) = theta;
    cloud.points(j, 0) = std::cos(theta);
    cloud.points(j, 1) = std::sin(theta);
  }
  return cloud;
}

/// Unit sphere in R^3, uniform via normalized Gaussian triples; intrinsic
/// coordinates are (polar, azimuth) in [0, pi] x (-pi, pi].
inline PointCloud sample_sphere(Index n, std::uint64_t seed = 0) {
  if (n < 4) throw std::invalid_argument("sample_sphere: need n >= 4");
  PointCloud cloud;
  cloud.points.resize(n, 3);
  cloud.intrinsic.emplace(n, 2);
  cloud.source_tag = Manifold::sphere;
  auto rng = substream(seed, "sampling");
  for (Index j = 0; j < n; ++j) {
    double x, y, z, r;
    do {
      x = rnorm(rng);
      y = rnorm(rng);
      z = rnorm(rng);
      r = std::sqrt(x * x + y * y + z * z);
    } while (r < 1e-12);
    cloud.points(j, 0) = x / r;
    cloud.points(j, 1) = y / r;
    cloud.points(j, 2) = z / r;
    (*cloud.intrinsic)(j, 0) = std::acos(std::clamp(z / r, -1.0, 1.0));
    (*cloud.intrinsic)(j, 1) = std::atan2(y, x);
  }
  return cloud;
}

/// Torus with major radius R, minor radius r, area-uniform via rejection on
/// the minor angle; intrinsic coordinates are (major angle, minor angle).
inline PointCloud sample_torus(Index n, double R = 2.0, double r = 0.5,
                               std::uint64_t seed = 0) {
  if (n < 4) throw std::invalid_argument("sample_torus: need n >= 4");
  if (!(R > r && r > 0.0)) throw std::invalid_argument("sample_torus: need R > r > 0");
  PointCloud cloud;
  cloud.points.resize(n, 3);
  cloud.intrinsic.emplace(n, 2);
  cloud.source_tag = Manifold::torus;
  auto rng = substream(seed, "sampling");
  for (Index j = 0; j < n; ++j) {
    const double u = runif(rng, 0.0, 2.0 * pi);
    double v;
    // Surface area element is proportional to R + r*cos(v); accept accordingly.
    do {
      v = runif(rng, 0.0, 2.0 * pi);
    } while (runif(rng) * (R + r) > R + r * std::cos(v));
    (*cloud.intrinsic)(j, 0) = u;
    (*cloud.intrinsic)(j, 1) = v;
    cloud.points(j, 0) = (R + r * std::cos(v)) * std::cos(u);
    cloud.points(j, 1) = (R + r * std::cos(v)) * std::sin(u);
    cloud.points(j, 2) = r * std::sin(v);
  }
  return cloud;
}

/// Adds isotropic Gaussian jitter with standard deviation `fraction` times the
/// cloud's RMS coordinate spread.  The result no longer lies on the ideal
/// manifold, so the source tag degrades to csv; intrinsic coordinates are kept
/// for reference only.
inline PointCloud add_noise(const PointCloud& cloud, double fraction,
                            std::uint64_t seed = 0) {
  if (fraction < 0.0) throw std::invalid_argument("add_noise: fraction must be >= 0");
  cloud.validate();
  PointCloud out = cloud;
  if (fraction == 0.0) return out;
  const Matrix centered = cloud.points.rowwise() - cloud.points.colwise().mean();
  const double spread =
      std::sqrt(centered.array().square().sum() / static_cast<double>(cloud.points.size()));
  const double sigma = fraction * spread;
  auto rng = substream(seed, "noise");
  for (Index i = 0; i < out.points.rows(); ++i)
    for (Index j = 0; j < out.points.cols(); ++j)
      out.points(i, j) += sigma * rnorm(rng);
  out.source_tag = Manifold::csv;
  return out;
}

/// Exact geodesic distances between sample points, available only where the
/// sampler recorded intrinsic coordinates on a manifold with a closed form.
class GeodesicOracle {
public:
  static GeodesicOracle for_cloud(const PointCloud& cloud) {
    if (!cloud.intrinsic)
      throw UnsupportedOracleError("geodesic oracle needs intrinsic coordinates");
    if (cloud.source_tag != Manifold::circle && cloud.source_tag != Manifold::sphere)
      throw UnsupportedOracleError("no closed-form geodesic distance for manifold '" +
                                   to_string(cloud.source_tag) + "'");
    return GeodesicOracle(cloud.source_tag, *cloud.intrinsic);
  }

  Manifold manifold() const { return manifold_; }
  Index n() const { return intrinsic_.rows(); }

  double distance(Index i, Index j) const {
    if (i < 0 || i >= n() || j < 0 || j >= n())
      throw std::invalid_argument("GeodesicOracle::distance: index out of range");
    if (i == j) return 0.0;
    if (manifold_ == Manifold::circle) {
      const double d = std::fabs(intrinsic_(i, 0) - intrinsic_(j, 0));
      return std::min(d, 2.0 * pi - d);
    }
    // Sphere: central angle between the two unit vectors.
    const double ti = intrinsic_(i, 0), pi_ = intrinsic_(i, 1);
    const double tj = intrinsic_(j, 0), pj = intrinsic_(j, 1);
    const double dot = std::sin(ti) * std::sin(tj) * std::cos(pi_ - pj) +
                       std::cos(ti) * std::cos(tj);
    return std::acos(std::clamp(dot, -1.0, 1.0));
  }

private:
  GeodesicOracle(Manifold m, Matrix intrinsic)
      : manifold_(m), intrinsic_(std::move(intrinsic)) {}

  Manifold manifold_;
  Matrix intrinsic_;
};

} // namespace qgeo

#endif // QGEO_SAMPLING_HPP
