#ifndef QGEO_SPECTRAL_HPP
#define QGEO_SPECTRAL_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef QGEO_USE_LAPACKE
#include <lapacke.h>
#endif

#include "qgeo/kernel.hpp"
#include "qgeo/types.hpp"

namespace qgeo {

/// Eigendecomposition of the graph Laplacian (4/eps) * (I - D^{-1} T).
///
/// The operator itself is not symmetric, but it is conjugate to the symmetric
/// S = (4/eps) * (I - D^{-1/2} T D^{-1/2}) by diag(sqrt(degrees)).  We store
/// the orthonormal eigenvectors of S plus that scaling, which gives exact
/// orthogonality in the degree-weighted inner product and a stable functional
/// calculus for the wave propagator.
struct SpectralLaplacian {
  Vector eigenvalues;      // ascending, clamped to >= 0
  Matrix eigenvectors_sym; // orthonormal columns, eigenvectors of S
  Vector d_half;           // sqrt of kernel degrees
  double epsilon = 0.0;
  std::vector<std::string> warnings;

  Index size() const { return eigenvalues.size(); }
};

namespace detail {

/// Dense symmetric eigensolve, ascending eigenvalues.  LAPACK's divide and
/// conquer driver when available (markedly faster single-threaded), Eigen
/// otherwise.
inline void symmetric_eig(Matrix& a, Vector& values, Matrix& vectors) {
  const Index n = a.rows();
  values.resize(n);
#ifdef QGEO_USE_LAPACKE
  vectors = std::move(a);
  const lapack_int info = LAPACKE_dsyevd(
      LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n), vectors.data(),
      static_cast<lapack_int>(n), values.data());
  if (info != 0)
    throw NumericalError("symmetric eigensolver failed to converge (dsyevd info=" +
                         std::to_string(info) + ")");
#else
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success)
    throw NumericalError("symmetric eigensolver failed to converge");
  values = solver.eigenvalues();
  vectors = solver.eigenvectors();
#endif
}

/// Clamps tiny negative eigenvalues (roundoff) to zero.  Anything negative
/// beyond noise level relative to the top of the spectrum indicates a badly
/// conditioned kernel and is reported to the caller.
inline void clamp_spectrum(Vector& values, std::vector<std::string>& warnings) {
  const Index n = values.size();
  if (n == 0) return;
  const double top = std::max(values(n - 1), 0.0);
  const double noise = 1e-8 * top;
  for (Index i = 0; i < n; ++i) {
    if (values(i) >= 0.0) break;
    if (values(i) < -noise)
      warnings.push_back("eigenvalue " + std::to_string(i) + " = " +
                         std::to_string(values(i)) +
                         " below -1e-8 * lambda_max; kernel may be ill-conditioned");
    values(i) = 0.0;
  }
}

} // namespace detail

inline SpectralLaplacian build_laplacian(const KernelGraph& graph) {
  const Index n = graph.n();
  if (n < 2) throw DataError("build_laplacian: kernel graph is empty");
  if (!(graph.epsilon > 0.0)) throw std::invalid_argument("build_laplacian: epsilon must be > 0");
  if ((graph.degrees.array() <= 0.0).any())
    throw DataError("build_laplacian: kernel graph has a non-positive degree");

  SpectralLaplacian lap;
  lap.epsilon = graph.epsilon;
  lap.d_half = graph.degrees.array().sqrt();

  const Vector inv_d_half = lap.d_half.cwiseInverse();
  Matrix s = graph.weights;
  // S = (4/eps) * (I - D^{-1/2} T D^{-1/2}); built symmetric, scaled in place.
  s.array().colwise() *= inv_d_half.array();
  s.array().rowwise() *= inv_d_half.transpose().array();
  s = -s;
  s.diagonal().array() += 1.0;
  s *= 4.0 / graph.epsilon;

  detail::symmetric_eig(s, lap.eigenvalues, lap.eigenvectors_sym);
  detail::clamp_spectrum(lap.eigenvalues, lap.warnings);
  return lap;
}

/// Dense Laplacian reassembled from the decomposition; for diagnostics and
/// tests, not for the propagation path.
inline Matrix dense_laplacian(const SpectralLaplacian& lap) {
  const Matrix scaled = lap.eigenvectors_sym * lap.eigenvalues.asDiagonal() *
                        lap.eigenvectors_sym.transpose();
  return lap.d_half.cwiseInverse().asDiagonal() * scaled * lap.d_half.asDiagonal();
}

/// Applies the wave propagator exp(-i t sqrt(Laplacian)) to a batch of raw
/// state columns.  Factoring through the symmetric basis costs four real
/// matrix products per evaluation and never materializes the dense operator.
class PropagatorPlan {
public:
  PropagatorPlan(const SpectralLaplacian& lap, const ComplexMatrix& raw_states)
      : lap_(&lap), omega_(lap.eigenvalues.array().sqrt()) {
    if (raw_states.rows() != lap.size())
      throw std::invalid_argument("PropagatorPlan: state length does not match spectrum");
    const Matrix re = lap.d_half.asDiagonal() * raw_states.real();
    const Matrix im = lap.d_half.asDiagonal() * raw_states.imag();
    coeff_re_ = lap.eigenvectors_sym.transpose() * re;
    coeff_im_ = lap.eigenvectors_sym.transpose() * im;
  }

  Index states() const { return coeff_re_.cols(); }

  /// Batch of propagated states at time t, raw basis.
  ComplexMatrix at(double t) const {
    const Vector c = (t * omega_.array()).cos();
    const Vector s = -(t * omega_.array()).sin(); // phase e^{-i t omega}
    const Matrix rot_re = c.asDiagonal() * coeff_re_ - s.asDiagonal() * coeff_im_;
    const Matrix rot_im = c.asDiagonal() * coeff_im_ + s.asDiagonal() * coeff_re_;
    const Vector inv = lap_->d_half.cwiseInverse();
    const Matrix out_re = inv.asDiagonal() * (lap_->eigenvectors_sym * rot_re);
    const Matrix out_im = inv.asDiagonal() * (lap_->eigenvectors_sym * rot_im);
    ComplexMatrix out(out_re.rows(), out_re.cols());
    out.real() = out_re;
    out.imag() = out_im;
    return out;
  }

private:
  const SpectralLaplacian* lap_;
  Vector omega_;
  Matrix coeff_re_, coeff_im_;
};

inline StateVector apply_propagator(const SpectralLaplacian& lap,
                                    const StateVector& state, double t) {
  if (state.basis != StateVector::Basis::raw)
    throw std::invalid_argument("apply_propagator: expected a raw-basis state");
  if (state.size() != lap.size())
    throw std::invalid_argument("apply_propagator: state length does not match spectrum");
  PropagatorPlan plan(lap, state.amplitudes);
  StateVector out;
  out.amplitudes = plan.at(t);
  out.basis = StateVector::Basis::raw;
  return out;
}

/// Norm conserved by the propagator: the degree-weighted 2-norm of the state.
inline double conserved_norm(const SpectralLaplacian& lap, const StateVector& state) {
  if (state.size() != lap.size())
    throw std::invalid_argument("conserved_norm: state length does not match spectrum");
  return std::sqrt(
      (lap.d_half.array().square() * state.amplitudes.array().abs2()).sum());
}

/// Dense unitary exp(-i t sqrt(Laplacian)) conjugated back to the raw basis.
/// Explicitly opt-in: O(N^2) memory, diagnostics only.
inline ComplexMatrix dense_propagator(const SpectralLaplacian& lap, double t) {
  const Index n = lap.size();
  const Vector omega = lap.eigenvalues.array().sqrt();
  ComplexVector phase(n);
  for (Index i = 0; i < n; ++i)
    phase(i) = Complex(std::cos(t * omega(i)), -std::sin(t * omega(i)));
  const ComplexMatrix core = lap.eigenvectors_sym.cast<Complex>() *
                             phase.asDiagonal() *
                             lap.eigenvectors_sym.transpose().cast<Complex>();
  return lap.d_half.cwiseInverse().cast<Complex>().asDiagonal() * core *
         lap.d_half.cast<Complex>().asDiagonal();
}

} // namespace qgeo

#endif // QGEO_SPECTRAL_HPP
