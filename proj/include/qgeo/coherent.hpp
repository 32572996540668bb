#ifndef QGEO_COHERENT_HPP
#define QGEO_COHERENT_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qgeo/types.hpp"

namespace qgeo {

/// A launch point in phase space: a sample index, a unit momentum direction in
/// ambient coordinates, and the packet width h.
struct PhaseSpacePoint {
  Index base_index = 0;
  Vector momentum;
  double h = 0.0;

  void validate(const PointCloud& cloud) const {
    if (base_index < 0 || base_index >= cloud.n())
      throw std::invalid_argument("PhaseSpacePoint: base index out of range");
    if (momentum.size() != cloud.dim())
      throw std::invalid_argument("PhaseSpacePoint: momentum dimension mismatch");
    if (std::fabs(momentum.norm() - 1.0) > 1e-12)
      throw std::invalid_argument("PhaseSpacePoint: momentum must be a unit vector");
    if (!(h > 0.0 && h <= 1.0))
      throw std::invalid_argument("PhaseSpacePoint: h must lie in (0, 1]");
  }
};

/// Packet width from the kernel scale: h = eps^{1/(2+alpha)} with alpha >= 1,
/// which always sits above the sqrt(eps) uncertainty floor for eps < 1.
inline double uncertainty_from_scale(double epsilon, double alpha) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("uncertainty_from_scale: epsilon must be > 0");
  if (epsilon >= 1.0)
    throw std::invalid_argument("uncertainty_from_scale: epsilon must be < 1 "
                                "(rescale the cloud so the kernel scale is subunit)");
  if (!(alpha >= 1.0)) throw std::invalid_argument("uncertainty_from_scale: alpha must be >= 1");
  const double h = std::pow(epsilon, 1.0 / (2.0 + alpha));
  return h;
}

enum class MomentumMethod { nearest_neighbor, local_pca };

inline std::string to_string(MomentumMethod m) {
  return m == MomentumMethod::nearest_neighbor ? "nn" : "pca";
}

inline std::optional<MomentumMethod> momentum_method_from_string(const std::string& s) {
  if (s == "nn" || s == "nearest_neighbor") return MomentumMethod::nearest_neighbor;
  if (s == "pca" || s == "local_pca") return MomentumMethod::local_pca;
  return std::nullopt;
}

/// How to pick a momentum direction at a sample point.  local_pca fits the
/// tangent space from the neighborhood within `radius` (all points, if radius
/// <= 0, the `neighborhood_size` nearest); nearest_neighbor just takes the
/// chord to the closest sample.
struct MomentumEstimator {
  MomentumMethod method = MomentumMethod::nearest_neighbor;
  int neighborhood_size = 10;    // local_pca only
  int principal_axis_index = 0;  // local_pca only
  double radius = 0.0;           // local_pca neighborhood radius; <= 0 uses k-nearest
};

namespace detail {

/// Indices of the local_pca neighborhood around `base` (base excluded), plus
/// the largest chord length in it.  Throws if a duplicate of the base point is
/// found or the neighborhood is too small.
inline std::vector<Index> pca_neighborhood(const PointCloud& cloud, Index base,
                                           const MomentumEstimator& est,
                                           double* spread_out = nullptr) {
  const Index n = cloud.n();
  std::vector<std::pair<double, Index>> dist;
  dist.reserve(static_cast<std::size_t>(n - 1));
  for (Index j = 0; j < n; ++j) {
    if (j == base) continue;
    const double d = (cloud.points.row(j) - cloud.points.row(base)).norm();
    if (d == 0.0)
      throw DegenerateNeighborhoodError("estimate_momentum: point " + std::to_string(j) +
                                        " duplicates base point " + std::to_string(base));
    if (est.radius > 0.0 && d > est.radius) continue;
    dist.emplace_back(d, j);
  }
  if (static_cast<Index>(dist.size()) < est.neighborhood_size)
    throw SparseNeighborhoodError(
        "estimate_momentum: only " + std::to_string(dist.size()) +
        " neighbors available at base " + std::to_string(base) + ", need " +
        std::to_string(est.neighborhood_size));
  std::sort(dist.begin(), dist.end());
  if (est.radius <= 0.0) dist.resize(static_cast<std::size_t>(est.neighborhood_size));
  std::vector<Index> idx;
  idx.reserve(dist.size());
  double spread = 0.0;
  for (const auto& [d, j] : dist) {
    idx.push_back(j);
    spread = std::max(spread, d);
  }
  if (spread_out) *spread_out = spread;
  return idx;
}

} // namespace detail

/// Unit momentum direction at a sample point.  The sign of a PCA axis is
/// arbitrary, so the result is aligned with `orientation_hint` when given and
/// with the chord to the nearest neighbor otherwise.
inline Vector estimate_momentum(const PointCloud& cloud, Index base,
                                const MomentumEstimator& est,
                                const std::optional<Vector>& orientation_hint = {}) {
  cloud.validate();
  if (base < 0 || base >= cloud.n())
    throw std::invalid_argument("estimate_momentum: base index out of range");
  if (orientation_hint && orientation_hint->size() != cloud.dim())
    throw std::invalid_argument("estimate_momentum: orientation hint dimension mismatch");

  // Nearest neighbor and its chord; doubles as the default orientation.
  Index nearest = -1;
  double best = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < cloud.n(); ++j) {
    if (j == base) continue;
    const double d = (cloud.points.row(j) - cloud.points.row(base)).norm();
    if (d == 0.0)
      throw DegenerateNeighborhoodError("estimate_momentum: point " + std::to_string(j) +
                                        " duplicates base point " + std::to_string(base));
    if (d < best) {
      best = d;
      nearest = j;
    }
  }
  const Vector chord =
      (cloud.points.row(nearest) - cloud.points.row(base)).transpose();

  Vector direction;
  if (est.method == MomentumMethod::nearest_neighbor) {
    direction = chord / chord.norm();
  } else {
    if (est.neighborhood_size < 3)
      throw std::invalid_argument("estimate_momentum: local_pca needs neighborhood_size >= 3");
    const auto idx = detail::pca_neighborhood(cloud, base, est);
    Matrix nbhd(static_cast<Index>(idx.size()) + 1, cloud.dim());
    nbhd.row(0) = cloud.points.row(base);
    for (std::size_t r = 0; r < idx.size(); ++r)
      nbhd.row(static_cast<Index>(r) + 1) = cloud.points.row(idx[r]);
    nbhd.rowwise() -= nbhd.colwise().mean();
    Eigen::JacobiSVD<Matrix> svd(nbhd, Eigen::ComputeThinV);
    if (est.principal_axis_index < 0 ||
        est.principal_axis_index >= svd.matrixV().cols())
      throw std::invalid_argument("estimate_momentum: principal axis index out of range");
    direction = svd.matrixV().col(est.principal_axis_index);
  }

  const Vector& orient = orientation_hint ? *orientation_hint : chord;
  if (direction.dot(orient) < 0.0) direction = -direction;
  return direction;
}

/// Gaussian wave packet centered at the base sample with momentum p and width
/// h: exp(-|v - v*|^2 / 2h) * exp(i <v - v*, p> / h).  Unnormalized; amplitude
/// at the base point is exactly 1.  `momentum` may have any magnitude here
/// (the phase-space scan sweeps scaled directions); propagation launch points
/// go through PhaseSpacePoint, which insists on unit momentum.
inline StateVector coherent_amplitudes(const PointCloud& cloud, Index base,
                                       const Vector& momentum, double h) {
  if (base < 0 || base >= cloud.n())
    throw std::invalid_argument("coherent_amplitudes: base index out of range");
  if (momentum.size() != cloud.dim())
    throw std::invalid_argument("coherent_amplitudes: momentum dimension mismatch");
  if (!(h > 0.0)) throw std::invalid_argument("coherent_amplitudes: h must be > 0");

  const Index n = cloud.n();
  StateVector state;
  state.amplitudes.resize(n);
  state.basis = StateVector::Basis::raw;
  for (Index j = 0; j < n; ++j) {
    const Vector delta = (cloud.points.row(j) - cloud.points.row(base)).transpose();
    const double envelope = std::exp(-delta.squaredNorm() / (2.0 * h));
    const double phase = delta.dot(momentum) / h;
    state.amplitudes(j) = Complex(envelope * std::cos(phase), envelope * std::sin(phase));
  }
  return state;
}

inline StateVector prepare_coherent_state(const PointCloud& cloud,
                                          const PhaseSpacePoint& zeta) {
  zeta.validate(cloud);
  return coherent_amplitudes(cloud, zeta.base_index, zeta.momentum, zeta.h);
}

/// One-hot impulse at a sample point.
inline StateVector prepare_impulse(const PointCloud& cloud, Index base) {
  if (base < 0 || base >= cloud.n())
    throw std::invalid_argument("prepare_impulse: base index out of range");
  StateVector state;
  state.amplitudes = ComplexVector::Zero(cloud.n());
  state.amplitudes(base) = Complex(1.0, 0.0);
  state.basis = StateVector::Basis::raw;
  return state;
}

} // namespace qgeo

#endif // QGEO_COHERENT_HPP
