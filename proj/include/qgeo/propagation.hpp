#ifndef QGEO_PROPAGATION_HPP
#define QGEO_PROPAGATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qgeo/coherent.hpp"
#include "qgeo/rng.hpp"
#include "qgeo/spectral.hpp"
#include "qgeo/types.hpp"

namespace qgeo {

inline double default_t_max() { return pi; }

enum class EndpointEstimator { expected_position, max_amplitude };

inline std::string to_string(EndpointEstimator e) {
  return e == EndpointEstimator::expected_position ? "expected" : "max";
}

inline std::optional<EndpointEstimator> estimator_from_string(const std::string& s) {
  if (s == "expected" || s == "expected_position") return EndpointEstimator::expected_position;
  if (s == "max" || s == "max_amplitude") return EndpointEstimator::max_amplitude;
  return std::nullopt;
}

/// Outcome of propagating one packet to one time.
struct PropagationResult {
  StateVector state_t;
  double t = 0.0;
  Vector expected_position; // probability-weighted ambient mean of |psi|^2
  Index max_position_index = 0;
  Index snapped_index = 0;  // sample nearest the expected position, lowest index on ties
  bool delocalized = false; // peak mass under 10x the mean: endpoint unreliable
};

namespace detail {

inline PropagationResult summarize_state(const PointCloud& cloud,
                                         ComplexVector amplitudes, double t) {
  PropagationResult result;
  result.t = t;
  result.state_t.amplitudes = std::move(amplitudes);
  result.state_t.basis = StateVector::Basis::raw;

  const Vector mass = result.state_t.amplitudes.array().abs2();
  const double total = mass.sum();
  if (!(total > 0.0))
    throw DegenerateStateError("propagate: state carries no probability mass");

  result.expected_position = (cloud.points.transpose() * mass) / total;

  Index arg_max = 0;
  mass.maxCoeff(&arg_max);
  result.max_position_index = arg_max;
  result.delocalized = mass(arg_max) < 10.0 * total / static_cast<double>(mass.size());

  Index snapped = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < cloud.n(); ++j) {
    const double d = (cloud.points.row(j).transpose() - result.expected_position).squaredNorm();
    if (d < best) { // strict: ties go to the lowest index
      best = d;
      snapped = j;
    }
  }
  result.snapped_index = snapped;
  return result;
}

inline void check_regime(const SpectralLaplacian& lap, double h) {
  if (!(h > std::sqrt(lap.epsilon)))
    throw UncertaintyRegimeError(
        "packet width h = " + std::to_string(h) + " is at or below sqrt(epsilon) = " +
        std::to_string(std::sqrt(lap.epsilon)) +
        "; no localized propagation below the kernel length scale");
}

} // namespace detail

/// Evolves an arbitrary prepared state for time t and summarizes the result.
/// No width check here: only coherent launches have a meaningful h.
inline PropagationResult propagate_state(const SpectralLaplacian& lap,
                                         const PointCloud& cloud,
                                         const StateVector& initial, double t,
                                         double t_max = default_t_max()) {
  if (cloud.n() != lap.size())
    throw std::invalid_argument("propagate_state: cloud size does not match spectrum");
  if (!(t > 0.0 && t <= t_max))
    throw std::invalid_argument("propagate_state: need 0 < t <= " + std::to_string(t_max));
  if (initial.basis != StateVector::Basis::raw)
    throw std::invalid_argument("propagate_state: expected a raw-basis state");
  PropagatorPlan plan(lap, initial.amplitudes);
  return detail::summarize_state(cloud, plan.at(t), t);
}

/// Launches the coherent packet at `zeta` and evolves it for time t under the
/// wave propagator.
inline PropagationResult propagate(const SpectralLaplacian& lap, const PointCloud& cloud,
                                   const PhaseSpacePoint& zeta, double t,
                                   double t_max = default_t_max()) {
  zeta.validate(cloud);
  detail::check_regime(lap, zeta.h);
  return propagate_state(lap, cloud, prepare_coherent_state(cloud, zeta), t, t_max);
}

/// Snapshots of one packet at several times, each evolved independently from
/// the initial state (no restarts from intermediate snapshots).
inline std::vector<PropagationResult> shoot_geodesic(const SpectralLaplacian& lap,
                                                     const PointCloud& cloud,
                                                     const PhaseSpacePoint& zeta,
                                                     const std::vector<double>& times,
                                                     double t_max = default_t_max()) {
  if (cloud.n() != lap.size())
    throw std::invalid_argument("shoot_geodesic: cloud size does not match spectrum");
  if (times.empty()) throw std::invalid_argument("shoot_geodesic: empty time schedule");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0 && times[i] <= t_max))
      throw std::invalid_argument("shoot_geodesic: times must lie in (0, t_max]");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw std::invalid_argument("shoot_geodesic: times must be strictly increasing");
  }
  zeta.validate(cloud);
  detail::check_regime(lap, zeta.h);

  const StateVector psi0 = prepare_coherent_state(cloud, zeta);
  PropagatorPlan plan(lap, psi0.amplitudes);
  std::vector<PropagationResult> results;
  results.reserve(times.size());
  for (const double t : times)
    results.push_back(detail::summarize_state(cloud, plan.at(t), t));
  return results;
}

/// |psi|^2 normalized so the peak is 1; the plottable packet profile.
inline Vector wavepacket_profile(const PropagationResult& result) {
  const Vector mass = result.state_t.amplitudes.array().abs2();
  const double peak = mass.maxCoeff();
  if (!(peak > 0.0))
    throw DegenerateStateError("wavepacket_profile: state is identically zero");
  return mass / peak;
}

/// Where each kept propagation trial came from.
struct GeodesicProvenance {
  Index source = 0;
  int momentum_id = 0;
  EndpointEstimator estimator = EndpointEstimator::expected_position;
};

/// Sparse symmetric set of (i, j) -> t entries: "a packet launched at i
/// arrived near j after time t".  Conflicting estimates for one pair keep the
/// smallest t (the first-arrival reading) and log the clash.
class GeodesicGraph {
public:
  struct Entry {
    double t = 0.0;
    GeodesicProvenance provenance;
  };
  using Key = std::pair<Index, Index>;

  explicit GeodesicGraph(Index n) : n_(n) {
    if (n < 2) throw std::invalid_argument("GeodesicGraph: need at least 2 nodes");
  }

  Index n() const { return n_; }
  std::size_t size() const { return entries_.size(); }
  const std::map<Key, Entry>& entries() const { return entries_; }
  int conflicts() const { return conflicts_; }
  const std::vector<std::string>& log() const { return log_; }

  std::optional<double> distance(Index i, Index j) const {
    const auto it = entries_.find(ordered(i, j));
    if (it == entries_.end()) return std::nullopt;
    return it->second.t;
  }

  /// Returns true when the value was stored (new pair or smaller t).
  bool insert(Index i, Index j, double t, const GeodesicProvenance& provenance) {
    if (i < 0 || i >= n_ || j < 0 || j >= n_)
      throw std::invalid_argument("GeodesicGraph::insert: index out of range");
    if (i == j) throw std::invalid_argument("GeodesicGraph::insert: self-loops are not allowed");
    if (!(t > 0.0)) throw std::invalid_argument("GeodesicGraph::insert: t must be > 0");
    const Key key = ordered(i, j);
    auto [it, inserted] = entries_.try_emplace(key, Entry{t, provenance});
    if (inserted) return true;
    ++conflicts_;
    log_.push_back("conflict at (" + std::to_string(key.first) + ", " +
                   std::to_string(key.second) + "): kept t = " +
                   std::to_string(std::min(it->second.t, t)) + ", dropped t = " +
                   std::to_string(std::max(it->second.t, t)));
    if (t < it->second.t) {
      it->second = Entry{t, provenance};
      return true;
    }
    return false;
  }

  void note_skip(const std::string& why) {
    ++skips_;
    log_.push_back(why);
  }
  int skips() const { return skips_; }

private:
  static Key ordered(Index i, Index j) { return {std::min(i, j), std::max(i, j)}; }

  Index n_;
  std::map<Key, Entry> entries_;
  int conflicts_ = 0;
  int skips_ = 0;
  std::vector<std::string> log_;
};

struct GeodesicBuildOptions {
  int intrinsic_dim = 2;        // tangent axes fitted per source
  int pca_neighborhood = 10;
  double t_max = default_t_max();
  std::uint64_t seed = 0;       // extra random tangent directions beyond the axes
  EndpointEstimator estimator = EndpointEstimator::expected_position;
  Index batch_columns = 512;    // propagation batch width
};

/// Shoots `momenta_per_source` packets from every source at every scheduled
/// time and records (source, endpoint, t) edges.  Momenta are +/- the local
/// PCA tangent axes, in axis order, then random unit directions in the fitted
/// tangent plane once the axes are exhausted.  Per-trial failures (sparse or
/// degenerate neighborhoods, delocalized packets, endpoints that stay at the
/// source) are logged and skipped rather than failing the whole sweep.
inline GeodesicGraph build_geodesic_graph(const SpectralLaplacian& lap,
                                          const PointCloud& cloud,
                                          const std::vector<Index>& sources,
                                          int momenta_per_source,
                                          const std::vector<double>& t_schedule,
                                          double h,
                                          const GeodesicBuildOptions& opts = {}) {
  if (cloud.n() != lap.size())
    throw std::invalid_argument("build_geodesic_graph: cloud size does not match spectrum");
  if (sources.empty()) throw std::invalid_argument("build_geodesic_graph: no sources");
  if (momenta_per_source < 1)
    throw std::invalid_argument("build_geodesic_graph: need at least one momentum per source");
  if (t_schedule.empty()) throw std::invalid_argument("build_geodesic_graph: empty time schedule");
  for (const double t : t_schedule)
    if (!(t > 0.0 && t <= opts.t_max))
      throw std::invalid_argument("build_geodesic_graph: times must lie in (0, t_max]");
  if (opts.intrinsic_dim < 1)
    throw std::invalid_argument("build_geodesic_graph: intrinsic_dim must be >= 1");
  detail::check_regime(lap, h);

  GeodesicGraph graph(cloud.n());
  const double radius = 3.0 * std::sqrt(lap.epsilon);

  struct Launch {
    Index source;
    int momentum_id;
  };

  // Momentum directions for one source: +/- each tangent axis, then random
  // in-plane directions. Empty on neighborhood failure (logged by caller).
  const auto source_momenta = [&](Index src) -> std::vector<Vector> {
    MomentumEstimator est;
    est.method = MomentumMethod::local_pca;
    est.neighborhood_size = opts.pca_neighborhood;
    est.radius = radius;
    const auto idx = detail::pca_neighborhood(cloud, src, est);
    Matrix nbhd(static_cast<Index>(idx.size()) + 1, cloud.dim());
    nbhd.row(0) = cloud.points.row(src);
    for (std::size_t r = 0; r < idx.size(); ++r)
      nbhd.row(static_cast<Index>(r) + 1) = cloud.points.row(idx[r]);
    nbhd.rowwise() -= nbhd.colwise().mean();
    Eigen::JacobiSVD<Matrix> svd(nbhd, Eigen::ComputeThinV);
    const Index axes = std::min<Index>(opts.intrinsic_dim, svd.matrixV().cols());

    std::vector<Vector> momenta;
    momenta.reserve(static_cast<std::size_t>(momenta_per_source));
    for (Index a = 0; a < axes && static_cast<int>(momenta.size()) < momenta_per_source; ++a) {
      momenta.push_back(svd.matrixV().col(a));
      if (static_cast<int>(momenta.size()) < momenta_per_source)
        momenta.push_back(-svd.matrixV().col(a));
    }
    auto rng = substream(opts.seed, "momenta", static_cast<std::uint64_t>(src));
    while (static_cast<int>(momenta.size()) < momenta_per_source) {
      Vector coeff(axes);
      for (Index a = 0; a < axes; ++a) coeff(a) = rnorm(rng);
      if (coeff.norm() < 1e-12) continue;
      Vector dir = svd.matrixV().leftCols(axes) * (coeff / coeff.norm());
      momenta.push_back(dir / dir.norm());
    }
    return momenta;
  };

  const Index batch_columns = std::max<Index>(opts.batch_columns, momenta_per_source);
  std::size_t cursor = 0;
  while (cursor < sources.size()) {
    // Assemble a batch of launch states across sources.
    std::vector<Launch> launches;
    std::vector<Vector> directions;
    while (cursor < sources.size() &&
           static_cast<Index>(launches.size()) + momenta_per_source <= batch_columns) {
      const Index src = sources[cursor++];
      if (src < 0 || src >= cloud.n())
        throw std::invalid_argument("build_geodesic_graph: source index out of range");
      std::vector<Vector> momenta;
      try {
        momenta = source_momenta(src);
      } catch (const DataError& e) {
        graph.note_skip("source " + std::to_string(src) + " skipped: " + e.what());
        continue;
      }
      for (std::size_t m = 0; m < momenta.size(); ++m) {
        launches.push_back({src, static_cast<int>(m)});
        directions.push_back(std::move(momenta[m]));
      }
    }
    if (launches.empty()) continue;

    ComplexMatrix states(cloud.n(), static_cast<Index>(launches.size()));
    for (std::size_t c = 0; c < launches.size(); ++c)
      states.col(static_cast<Index>(c)) =
          coherent_amplitudes(cloud, launches[c].source, directions[c], h).amplitudes;

    PropagatorPlan plan(lap, states);
    for (const double t : t_schedule) {
      const ComplexMatrix evolved = plan.at(t);
      for (std::size_t c = 0; c < launches.size(); ++c) {
        const auto& launch = launches[c];
        PropagationResult result =
            detail::summarize_state(cloud, evolved.col(static_cast<Index>(c)), t);
        if (result.delocalized) {
          graph.note_skip("trial (source " + std::to_string(launch.source) + ", momentum " +
                          std::to_string(launch.momentum_id) + ", t " + std::to_string(t) +
                          ") skipped: packet delocalized");
          continue;
        }
        const Index endpoint = opts.estimator == EndpointEstimator::expected_position
                                   ? result.snapped_index
                                   : result.max_position_index;
        if (endpoint == launch.source) {
          graph.note_skip("trial (source " + std::to_string(launch.source) + ", momentum " +
                          std::to_string(launch.momentum_id) + ", t " + std::to_string(t) +
                          ") skipped: endpoint equals source");
          continue;
        }
        graph.insert(launch.source, endpoint, t,
                     {launch.source, launch.momentum_id, opts.estimator});
      }
    }
  }
  return graph;
}

} // namespace qgeo

#endif // QGEO_PROPAGATION_HPP
