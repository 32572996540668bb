#ifndef QGEO_PHASE_SPACE_HPP
#define QGEO_PHASE_SPACE_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qgeo/coherent.hpp"
#include "qgeo/spectral.hpp"
#include "qgeo/types.hpp"

namespace qgeo {

/// Discrete phase-space scan grid: a subset of sample positions, per-position
/// tangent axes from local PCA, and a shared scalar momentum ladder applied
/// along each axis.  Axis sign is immaterial because the ladder is symmetric.
struct PhaseSpaceGrid {
  std::vector<Index> positions;
  std::vector<Matrix> axes; // per position: D x A, orthonormal columns
  Vector scalars;           // symmetric ladder, must include the unit shell
  double h = 0.0;

  Index n_positions() const { return static_cast<Index>(positions.size()); }
  Index n_axes() const { return axes.empty() ? 0 : axes.front().cols(); }
  Index n_scalars() const { return scalars.size(); }
};

inline PhaseSpaceGrid make_phase_space_grid(const PointCloud& cloud, double h,
                                            Index position_stride, double pca_radius,
                                            int tangent_axes, int pca_neighborhood = 10,
                                            double p_max = 2.0, int p_steps = 41) {
  cloud.validate();
  if (position_stride < 1)
    throw std::invalid_argument("make_phase_space_grid: stride must be >= 1");
  if (!(h > 0.0)) throw std::invalid_argument("make_phase_space_grid: h must be > 0");
  if (!(p_max >= 1.0))
    throw std::invalid_argument("make_phase_space_grid: p_max must be >= 1 to cover the unit shell");
  if (p_steps < 3) throw std::invalid_argument("make_phase_space_grid: need at least 3 momentum steps");
  if (tangent_axes < 1)
    throw std::invalid_argument("make_phase_space_grid: need at least 1 tangent axis");

  PhaseSpaceGrid grid;
  grid.h = h;
  grid.scalars.resize(p_steps);
  for (int m = 0; m < p_steps; ++m)
    grid.scalars(m) = -p_max + 2.0 * p_max * static_cast<double>(m) /
                                    static_cast<double>(p_steps - 1);
  // The unit-speed shell |p| = 1 is where geodesic flow lives; a ladder that
  // misses it scans the wrong physics, so refuse it outright.
  bool has_unit = false;
  for (int m = 0; m < p_steps; ++m)
    if (std::fabs(std::fabs(grid.scalars(m)) - 1.0) < 1e-9) has_unit = true;
  if (!has_unit)
    throw std::invalid_argument(
        "make_phase_space_grid: momentum ladder misses the unit shell; "
        "choose p_max and p_steps so that +/-1 are grid values");

  MomentumEstimator est;
  est.method = MomentumMethod::local_pca;
  est.neighborhood_size = pca_neighborhood;
  est.radius = pca_radius;
  for (Index p = 0; p < cloud.n(); p += position_stride) {
    const auto idx = detail::pca_neighborhood(cloud, p, est);
    Matrix nbhd(static_cast<Index>(idx.size()) + 1, cloud.dim());
    nbhd.row(0) = cloud.points.row(p);
    for (std::size_t r = 0; r < idx.size(); ++r)
      nbhd.row(static_cast<Index>(r) + 1) = cloud.points.row(idx[r]);
    nbhd.rowwise() -= nbhd.colwise().mean();
    Eigen::JacobiSVD<Matrix> svd(nbhd, Eigen::ComputeThinV);
    const Index axes = std::min<Index>(tangent_axes, svd.matrixV().cols());
    grid.positions.push_back(p);
    grid.axes.push_back(svd.matrixV().leftCols(axes));
  }
  return grid;
}

/// Inner product of the packet at (base, momentum, h) with a state: the
/// windowed Fourier coefficient of f at that phase-space point.
inline Complex gabor_coefficient(const PointCloud& cloud, Index base,
                                 const Vector& momentum, double h,
                                 const StateVector& f) {
  if (f.size() != cloud.n())
    throw std::invalid_argument("gabor_coefficient: state length does not match cloud");
  const StateVector packet = coherent_amplitudes(cloud, base, momentum, h);
  return packet.amplitudes.dot(f.amplitudes); // conjugates the packet
}

inline Complex gabor_coefficient(const PointCloud& cloud, const PhaseSpacePoint& zeta,
                                 const StateVector& f) {
  zeta.validate(cloud);
  return gabor_coefficient(cloud, zeta.base_index, zeta.momentum, zeta.h, f);
}

enum class PropagationSign { backward, forward };

/// Phase-space energy distribution of a point source after time t.
struct Spectrogram {
  Matrix values; // n_positions x (n_axes * n_scalars), axis-major blocks
  PhaseSpaceGrid grid;
  Index source = 0;
  double t = 0.0;

  double at(Index position, Index axis, Index scalar) const {
    return values(position, axis * grid.n_scalars() + scalar);
  }
};

/// Scans |<packet(position, s * axis)| U^{-t} delta_source>|^2 over the grid.
/// The backward sign (default) asks "where did energy at the source come
/// from", which paints the outgoing rays at momentum +1; forward is provided
/// for exploration.
inline Spectrogram spectrogram(const SpectralLaplacian& lap, const PointCloud& cloud,
                               Index source, double t, const PhaseSpaceGrid& grid,
                               PropagationSign sign = PropagationSign::backward) {
  if (cloud.n() != lap.size())
    throw std::invalid_argument("spectrogram: cloud size does not match spectrum");
  if (grid.positions.empty()) throw std::invalid_argument("spectrogram: empty grid");

  const StateVector delta = prepare_impulse(cloud, source);
  PropagatorPlan plan(lap, delta.amplitudes);
  const ComplexVector f = plan.at(sign == PropagationSign::backward ? -t : t);

  Spectrogram out;
  out.grid = grid;
  out.source = source;
  out.t = t;
  const Index S = grid.n_scalars();
  const Index A = grid.n_axes();
  out.values.setZero(grid.n_positions(), A * S);

  const double s0 = grid.scalars(0);
  const double ds = S > 1 ? grid.scalars(1) - grid.scalars(0) : 0.0;
  ComplexVector acc(S);
  for (Index p = 0; p < grid.n_positions(); ++p) {
    const Index center = grid.positions[p];
    const Matrix& axes = grid.axes[static_cast<std::size_t>(p)];
    for (Index a = 0; a < axes.cols(); ++a) {
      acc.setZero();
      // The scalar ladder is uniform, so e^{-i s_m phi} advances by a fixed
      // unit-modulus factor per rung; sweep it with one recurrence per point
      // instead of S exponentials.
      for (Index j = 0; j < cloud.n(); ++j) {
        const Vector delta_x = (cloud.points.row(j) - cloud.points.row(center)).transpose();
        const double envelope = std::exp(-delta_x.squaredNorm() / (2.0 * grid.h));
        if (envelope < 1e-14) continue;
        const double phi = delta_x.dot(axes.col(a)) / grid.h;
        // conj(packet_j) * f_j = envelope * e^{-i s phi} * f_j, as in
        // gabor_coefficient; the conjugation is folded into the phase sign.
        Complex cur = envelope * f(j) * Complex(std::cos(s0 * phi), -std::sin(s0 * phi));
        const Complex step(std::cos(ds * phi), -std::sin(ds * phi));
        for (Index m = 0; m < S; ++m) {
          acc(m) += cur;
          cur *= step;
        }
      }
      for (Index m = 0; m < S; ++m)
        out.values(p, a * S + m) = std::norm(acc(m));
    }
  }
  return out;
}

/// Best momentum response per position: the positional footprint of the scan.
inline Vector position_marginal(const Spectrogram& spec) {
  return spec.values.rowwise().maxCoeff();
}

} // namespace qgeo

#endif // QGEO_PHASE_SPACE_HPP
