#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "test_support.hpp"

using namespace qgeo;
using qgeo_test::circ_dist;

namespace {

double angle_of(Index j, Index n) { return 2.0 * pi * static_cast<double>(j) / static_cast<double>(n); }

} // namespace

TEST_CASE("phase-space grid covers the unit shell", "[phase_space]") {
  const PointCloud cloud = sample_circle(200, Spacing::regular);
  const double h = 0.2;
  const PhaseSpaceGrid grid = make_phase_space_grid(cloud, h, 10, 0.2, 1);

  CHECK(grid.n_positions() == 20);
  CHECK(grid.n_axes() == 1);
  CHECK(grid.n_scalars() == 41);
  CHECK(grid.h == h);
  CHECK(grid.scalars(0) == -2.0);
  CHECK(grid.scalars(40) == 2.0);

  // The default ladder hits -1, 0 and +1 exactly.
  bool has_plus = false, has_minus = false, has_zero = false;
  for (Index m = 0; m < grid.n_scalars(); ++m) {
    if (std::fabs(grid.scalars(m) - 1.0) < 1e-12) has_plus = true;
    if (std::fabs(grid.scalars(m) + 1.0) < 1e-12) has_minus = true;
    if (std::fabs(grid.scalars(m)) < 1e-12) has_zero = true;
  }
  CHECK(has_plus);
  CHECK(has_minus);
  CHECK(has_zero);

  // Axes are unit-length tangent estimates.
  for (std::size_t i = 0; i < grid.axes.size(); ++i) {
    const Matrix& axes = grid.axes[i];
    REQUIRE(axes.cols() == 1);
    CHECK(axes.col(0).norm() == Catch::Approx(1.0).margin(1e-12));
    const double theta = angle_of(grid.positions[i], cloud.n());
    Vector tangent(2);
    tangent << -std::sin(theta), std::cos(theta);
    CHECK(std::fabs(axes.col(0).dot(tangent)) > 1.0 - 1e-4);
  }

  CHECK_THROWS_AS(make_phase_space_grid(cloud, h, 0, 0.2, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_phase_space_grid(cloud, 0.0, 10, 0.2, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_phase_space_grid(cloud, h, 10, 0.2, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_phase_space_grid(cloud, h, 10, 0.2, 1, 10, 0.5, 41),
                  std::invalid_argument); // p_max < 1
  CHECK_THROWS_AS(make_phase_space_grid(cloud, h, 10, 0.2, 1, 10, 2.0, 2),
                  std::invalid_argument); // too few steps
  // A ladder of -1.5, -0.5, 0.5, 1.5 misses the unit shell entirely.
  CHECK_THROWS_AS(make_phase_space_grid(cloud, h, 10, 0.2, 1, 10, 1.5, 4),
                  std::invalid_argument);
}

TEST_CASE("windowed coefficient matches a direct sum", "[phase_space]") {
  const PointCloud cloud = sample_circle(60, Spacing::uniform_random, 5);
  StateVector f;
  f.amplitudes.resize(cloud.n());
  auto rng = substream(11, "test");
  for (Index j = 0; j < cloud.n(); ++j) f.amplitudes(j) = Complex(rnorm(rng), rnorm(rng));

  const Index base = 17;
  const double h = 0.3;
  Vector momentum(2);
  momentum << 0.8, -1.1; // scaled momenta are fine for scanning

  const Complex got = gabor_coefficient(cloud, base, momentum, h, f);

  Complex want(0.0, 0.0);
  for (Index j = 0; j < cloud.n(); ++j) {
    const Vector dx = (cloud.points.row(j) - cloud.points.row(base)).transpose();
    const double envelope = std::exp(-dx.squaredNorm() / (2.0 * h));
    const Complex phase = std::exp(Complex(0.0, -dx.dot(momentum) / h));
    want += envelope * phase * f.amplitudes(j);
  }
  CHECK(std::abs(got - want) < 1e-12 * std::abs(want));

  // Testing the packet against itself gives its (real, positive) energy.
  const StateVector packet = coherent_amplitudes(cloud, base, momentum, h);
  const Complex self = gabor_coefficient(cloud, base, momentum, h, packet);
  CHECK(std::fabs(self.imag()) < 1e-12 * self.real());
  CHECK(self.real() == Catch::Approx(packet.amplitudes.squaredNorm()).epsilon(1e-12));

  // The validated overload agrees and enforces the unit shell.
  PhaseSpacePoint zeta;
  zeta.base_index = base;
  zeta.momentum = momentum / momentum.norm();
  zeta.h = h;
  CHECK(gabor_coefficient(cloud, zeta, f) ==
        gabor_coefficient(cloud, base, zeta.momentum, h, f));
  zeta.momentum = momentum; // not unit length
  CHECK_THROWS_AS(gabor_coefficient(cloud, zeta, f), std::invalid_argument);

  StateVector wrong;
  wrong.amplitudes.resize(3);
  CHECK_THROWS_AS(gabor_coefficient(cloud, base, momentum, h, wrong), std::invalid_argument);
}

TEST_CASE("spectrogram of a point source lights up both wavefronts", "[phase_space][slow]") {
  const PointCloud cloud = sample_circle(600, Spacing::regular);
  const Index n = cloud.n();
  const double eps = auto_epsilon(cloud);
  const SpectralLaplacian lap =
      build_laplacian(build_kernel(cloud, eps, KernelKind::truncated_gaussian));
  const double h = uncertainty_from_scale(eps, 2.0); // eps^{1/4} ~ 0.167

  const Index source = 150; // theta = pi/2
  const double t = 1.0;
  const PhaseSpaceGrid grid =
      make_phase_space_grid(cloud, h, 5, 3.0 * std::sqrt(eps), 1);
  const Spectrogram spec = spectrogram(lap, cloud, source, t, grid);

  REQUIRE(spec.values.rows() == grid.n_positions());
  REQUIRE(spec.values.cols() == grid.n_scalars());
  CHECK(spec.source == source);
  CHECK(spec.t == t);

  // Global peak: position within one packet width of theta_source +/- t.
  Index peak_row = 0, peak_col = 0;
  spec.values.maxCoeff(&peak_row, &peak_col);
  const double peak_value = spec.values(peak_row, peak_col);
  const double peak_angle = angle_of(grid.positions[static_cast<std::size_t>(peak_row)], n);
  const double target_a = pi / 2.0 + t;
  const double target_b = pi / 2.0 - t;
  const double to_a = circ_dist(peak_angle, target_a);
  const double to_b = circ_dist(peak_angle, target_b);
  CHECK(std::min(to_a, to_b) <= h);

  // The peak momentum sits in the propagating band, not near rest.
  CHECK(std::fabs(grid.scalars(peak_col)) >= 1.0 - 1e-9);

  // The energy at the front moves one way: the mirrored momentum is dark, and
  // the zero shell is well below the peak.
  const Index mirror_col = grid.n_scalars() - 1 - peak_col;
  CHECK(spec.values(peak_row, mirror_col) < 1e-3 * peak_value);
  Index zero_col = 0;
  grid.scalars.cwiseAbs().minCoeff(&zero_col);
  CHECK(spec.values(peak_row, zero_col) < 0.5 * peak_value);

  // Second peak, at least a radian away: the other wavefront.
  double second_value = -1.0;
  double second_angle = 0.0;
  for (Index p = 0; p < grid.n_positions(); ++p) {
    const double a = angle_of(grid.positions[static_cast<std::size_t>(p)], n);
    if (circ_dist(a, peak_angle) < 1.0) continue;
    const double v = spec.values.row(p).maxCoeff();
    if (v > second_value) {
      second_value = v;
      second_angle = a;
    }
  }
  REQUIRE(second_value > 0.0);
  const double other_target = to_a < to_b ? target_b : target_a;
  CHECK(circ_dist(second_angle, other_target) <= h);
  CHECK(second_value > 0.5 * peak_value);

  // The positional footprint peaks at the wavefront, not at the source.
  const Vector marginal = position_marginal(spec);
  Index marginal_peak = 0;
  marginal.maxCoeff(&marginal_peak);
  CHECK(marginal_peak == peak_row);
  const Index source_row = source / 5; // stride 5 keeps the source on the grid
  CHECK(marginal(source_row) < 0.5 * marginal.maxCoeff());

  // Forward propagation is the backward scan mirrored in the scalar ladder.
  const Spectrogram fwd =
      spectrogram(lap, cloud, source, t, grid, PropagationSign::forward);
  double mirror_err = 0.0;
  for (Index p = 0; p < grid.n_positions(); ++p)
    for (Index m = 0; m < grid.n_scalars(); ++m)
      mirror_err = std::max(
          mirror_err, std::fabs(fwd.values(p, m) -
                                spec.values(p, grid.n_scalars() - 1 - m)));
  CHECK(mirror_err < 1e-9 * peak_value);
  CHECK(fwd.values(peak_row, peak_col) < 1e-3 * peak_value);

  // Accessor indexing: at(p, a, s) addresses the axis-major block layout.
  CHECK(spec.at(peak_row, 0, peak_col) == peak_value);

  CHECK_THROWS_AS(spectrogram(lap, cloud, source, t, PhaseSpaceGrid{}),
                  std::invalid_argument);
  const PointCloud other = sample_circle(32, Spacing::regular);
  CHECK_THROWS_AS(spectrogram(lap, other, 3, t, grid), std::invalid_argument);
}

TEST_CASE("position marginal takes the best response per row", "[phase_space]") {
  Spectrogram spec;
  spec.values.resize(2, 3);
  spec.values << 0.1, 0.7, 0.3,
                 0.9, 0.2, 0.4;
  const Vector marginal = position_marginal(spec);
  REQUIRE(marginal.size() == 2);
  CHECK(marginal(0) == 0.7);
  CHECK(marginal(1) == 0.9);
}
