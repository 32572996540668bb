#ifndef QGEO_TYPES_HPP
#define QGEO_TYPES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <optional>
#include <string>

#include "qgeo/errors.hpp"

namespace qgeo {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

/// Where a point cloud came from; samplers tag their output, noise and CSV
/// ingestion fall back to the generic tag.
enum class Manifold { circle, sphere, torus, csv };

inline std::string to_string(Manifold m) {
  switch (m) {
    case Manifold::circle: return "circle";
    case Manifold::sphere: return "sphere";
    case Manifold::torus: return "torus";
    case Manifold::csv: return "csv";
  }
  return "csv";
}

inline std::optional<Manifold> manifold_from_string(const std::string& s) {
  if (s == "circle") return Manifold::circle;
  if (s == "sphere") return Manifold::sphere;
  if (s == "torus") return Manifold::torus;
  if (s == "csv") return Manifold::csv;
  return std::nullopt;
}

/// N ambient points (rows), optionally with the intrinsic coordinates they
/// were sampled at.  Everything downstream works on `points` only; intrinsic
/// coordinates exist so tests can query exact geodesic distances.
struct PointCloud {
  Matrix points;                      // N x D
  std::optional<Matrix> intrinsic;    // N x d, parameter-space coordinates
  Manifold source_tag = Manifold::csv;

  Index n() const { return points.rows(); }
  Index dim() const { return points.cols(); }

  void validate() const {
    if (points.rows() < 2) throw DataError("point cloud needs at least 2 points");
    if (points.cols() < 1) throw DataError("point cloud needs at least 1 ambient dimension");
    if (!points.allFinite()) throw DataError("point cloud contains non-finite values");
    if (intrinsic && intrinsic->rows() != points.rows())
      throw DataError("intrinsic coordinate rows do not match point count");
  }
};

/// Complex amplitudes over the sample points.  `symmetrized` marks vectors
/// that have been rescaled by sqrt(degree) for work in the symmetric basis;
/// propagation consumes and produces `raw` vectors.
struct StateVector {
  enum class Basis { raw, symmetrized };

  ComplexVector amplitudes;
  Basis basis = Basis::raw;

  Index size() const { return amplitudes.size(); }
};

} // namespace qgeo

#endif // QGEO_TYPES_HPP
