#ifndef QGEO_EMBEDDING_HPP
#define QGEO_EMBEDDING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "qgeo/propagation.hpp"
#include "qgeo/rng.hpp"
#include "qgeo/types.hpp"

namespace qgeo {

enum class TemperatureSchedule { linear_decay };

struct FrOptions {
  int d_embed = 3;
  int iterations = 300;
  std::uint64_t seed = 0;
  TemperatureSchedule schedule = TemperatureSchedule::linear_decay;
  /// Attractive springs scale with 1/t so short geodesic hops bind tighter;
  /// disable to fall back to the classic unweighted layout.
  bool inverse_distance_weights = true;
  /// Starting step cap; <= 0 picks a tenth of the initial domain size.
  double initial_temperature = -1.0;
};

struct EmbeddingResult {
  Matrix coordinates; // n x d_embed, centered at the origin
  bool converged = false;
  int iterations_used = 0;
  double stress = 0.0; // sum over edges of (|x_i - x_j| - t_ij)^2
  int n_components = 1;
  std::vector<int> component; // component id per node
  std::vector<std::string> warnings;
};

namespace detail {

struct FrEdge {
  Index i, j;
  double t;
};

/// One force-directed layout pass over a connected node set, in place on the
/// rows of `pos` selected by `nodes`.  Returns the max displacement of the
/// final sweep, for the convergence flag.
///
/// The all-pairs loop dominates at graph scale, so coordinates live in flat
/// per-axis arrays (zero-padded up to three axes) rather than matrix rows.
inline double fr_component(Matrix& pos, const std::vector<Index>& nodes,
                           const std::vector<FrEdge>& edges, const FrOptions& opts,
                           double ideal, double t0) {
  const Index m = static_cast<Index>(nodes.size());
  if (m == 1) return 0.0;
  const Index d = pos.cols();
  const std::size_t mz = static_cast<std::size_t>(m);
  std::vector<double> x(mz, 0.0), y(mz, 0.0), z(mz, 0.0);
  for (Index a = 0; a < m; ++a) {
    x[static_cast<std::size_t>(a)] = pos(nodes[static_cast<std::size_t>(a)], 0);
    if (d > 1) y[static_cast<std::size_t>(a)] = pos(nodes[static_cast<std::size_t>(a)], 1);
    if (d > 2) z[static_cast<std::size_t>(a)] = pos(nodes[static_cast<std::size_t>(a)], 2);
  }

  // Edge endpoints resolved to working rows once, not per sweep.
  struct LocalEdge {
    std::size_t a, b;
    double w;
  };
  std::vector<LocalEdge> springs;
  springs.reserve(edges.size());
  for (const auto& e : edges) {
    const auto a = static_cast<std::size_t>(std::distance(
        nodes.begin(), std::lower_bound(nodes.begin(), nodes.end(), e.i)));
    const auto b = static_cast<std::size_t>(std::distance(
        nodes.begin(), std::lower_bound(nodes.begin(), nodes.end(), e.j)));
    springs.push_back({a, b, opts.inverse_distance_weights ? 1.0 / e.t : 1.0});
  }

  std::vector<double> fx(mz), fy(mz), fz(mz);
  double last_max_step = 0.0;
  for (int iter = 0; iter < opts.iterations; ++iter) {
    const double temp =
        t0 * static_cast<double>(opts.iterations - iter) / static_cast<double>(opts.iterations);
    std::fill(fx.begin(), fx.end(), 0.0);
    std::fill(fy.begin(), fy.end(), 0.0);
    std::fill(fz.begin(), fz.end(), 0.0);
    // All-pairs repulsion k^2 / d.
    for (std::size_t a = 0; a + 1 < mz; ++a) {
      const double xa = x[a], ya = y[a], za = z[a];
      double ax = 0.0, ay = 0.0, az = 0.0;
      for (std::size_t b = a + 1; b < mz; ++b) {
        double dx = xa - x[b], dy = ya - y[b], dz = za - z[b];
        double dist2 = dx * dx + dy * dy + dz * dz;
        if (dist2 < 1e-24) {
          // Coincident nodes: separate along a fixed direction so the layout
          // stays deterministic.
          dx = 1e-12;
          dy = dz = 0.0;
          dist2 = 1e-24;
        }
        const double scale = ideal * ideal / dist2;
        const double px = dx * scale, py = dy * scale, pz = dz * scale;
        ax += px;
        ay += py;
        az += pz;
        fx[b] -= px;
        fy[b] -= py;
        fz[b] -= pz;
      }
      fx[a] += ax;
      fy[a] += ay;
      fz[a] += az;
    }
    // Edge attraction d^2 / k, weighted by the stored geodesic estimate.
    for (const auto& e : springs) {
      const double dx = x[e.a] - x[e.b], dy = y[e.a] - y[e.b], dz = z[e.a] - z[e.b];
      const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
      if (dist < 1e-12) continue;
      const double scale = e.w * dist / ideal;
      fx[e.a] -= dx * scale;
      fy[e.a] -= dy * scale;
      fz[e.a] -= dz * scale;
      fx[e.b] += dx * scale;
      fy[e.b] += dy * scale;
      fz[e.b] += dz * scale;
    }
    // Move each node along its net force, step capped by the temperature.
    last_max_step = 0.0;
    for (std::size_t a = 0; a < mz; ++a) {
      const double norm = std::sqrt(fx[a] * fx[a] + fy[a] * fy[a] + fz[a] * fz[a]);
      if (norm < 1e-15) continue;
      const double step = std::min(norm, temp);
      const double scale = step / norm;
      x[a] += fx[a] * scale;
      y[a] += fy[a] * scale;
      z[a] += fz[a] * scale;
      last_max_step = std::max(last_max_step, step);
    }
  }

  for (Index a = 0; a < m; ++a) {
    pos(nodes[static_cast<std::size_t>(a)], 0) = x[static_cast<std::size_t>(a)];
    if (d > 1) pos(nodes[static_cast<std::size_t>(a)], 1) = y[static_cast<std::size_t>(a)];
    if (d > 2) pos(nodes[static_cast<std::size_t>(a)], 2) = z[static_cast<std::size_t>(a)];
  }
  return last_max_step;
}

} // namespace detail

/// Force-directed layout of a geodesic graph from caller-supplied initial
/// coordinates.  Deterministic, and equivariant under rotations of the
/// initial configuration (all forces are isotropic and there is no bounding
/// box).  Disconnected components are laid out independently and tiled along
/// the first axis.
inline EmbeddingResult fr_embed_from(const GeodesicGraph& graph, const Matrix& initial,
                                     const FrOptions& opts) {
  const Index n = graph.n();
  if (opts.d_embed < 1 || opts.d_embed > 3)
    throw std::invalid_argument("fr_embed: d_embed must be 1, 2, or 3");
  if (opts.iterations < 1) throw std::invalid_argument("fr_embed: iterations must be >= 1");
  if (initial.rows() != n || initial.cols() != opts.d_embed)
    throw std::invalid_argument("fr_embed: initial coordinates have the wrong shape");
  for (const auto& [key, entry] : graph.entries())
    if (!(entry.t > 0.0)) throw DataError("fr_embed: non-positive edge length");

  EmbeddingResult result;
  result.coordinates = initial;
  result.component.assign(static_cast<std::size_t>(n), -1);

  // Connected components over the edge set; isolated nodes become singletons.
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  const auto find = [&](Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (const auto& [key, entry] : graph.entries()) {
    const Index ra = find(key.first), rb = find(key.second);
    if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
  }
  std::vector<Index> roots;
  for (Index v = 0; v < n; ++v)
    if (find(v) == v) roots.push_back(v);
  std::sort(roots.begin(), roots.end());
  for (Index v = 0; v < n; ++v) {
    const Index r = find(v);
    result.component[static_cast<std::size_t>(v)] = static_cast<int>(
        std::distance(roots.begin(), std::lower_bound(roots.begin(), roots.end(), r)));
  }
  result.n_components = static_cast<int>(roots.size());
  if (result.n_components > 1)
    result.warnings.push_back("geodesic graph has " + std::to_string(result.n_components) +
                              " connected components; laid out independently");

  // Unit ideal edge length; the domain scales as m^{1/d} to keep density fixed.
  const double ideal = 1.0;
  double worst_final_step = 0.0;
  std::vector<std::pair<double, double>> spans; // per component: (centered radius, offset slot)
  std::vector<std::vector<Index>> comp_nodes(static_cast<std::size_t>(result.n_components));
  for (Index v = 0; v < n; ++v)
    comp_nodes[static_cast<std::size_t>(result.component[static_cast<std::size_t>(v)])]
        .push_back(v);
  std::vector<std::vector<detail::FrEdge>> comp_edges(
      static_cast<std::size_t>(result.n_components));
  for (const auto& [key, entry] : graph.entries())
    comp_edges[static_cast<std::size_t>(result.component[static_cast<std::size_t>(key.first)])]
        .push_back({key.first, key.second, entry.t});

  for (int c = 0; c < result.n_components; ++c) {
    const auto& nodes = comp_nodes[static_cast<std::size_t>(c)];
    const double domain =
        ideal * std::pow(static_cast<double>(nodes.size()), 1.0 / opts.d_embed);
    const double t0 = opts.initial_temperature > 0.0 ? opts.initial_temperature : domain / 10.0;
    worst_final_step = std::max(
        worst_final_step, detail::fr_component(result.coordinates, nodes,
                                               comp_edges[static_cast<std::size_t>(c)],
                                               opts, ideal, t0));
    // Center the component; tiling offsets come after all components settle.
    Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(opts.d_embed);
    for (const Index v : nodes) centroid += result.coordinates.row(v);
    centroid /= static_cast<double>(nodes.size());
    double radius = 0.0;
    for (const Index v : nodes) {
      result.coordinates.row(v) -= centroid;
      radius = std::max(radius, result.coordinates.row(v).norm());
    }
    spans.emplace_back(radius, 0.0);
  }

  // Tile components left to right along axis 0 with an ideal-length gap.
  if (result.n_components > 1) {
    double cursor = 0.0;
    for (int c = 0; c < result.n_components; ++c) {
      auto& [radius, offset] = spans[static_cast<std::size_t>(c)];
      offset = cursor + radius;
      cursor += 2.0 * radius + ideal;
      for (const Index v : comp_nodes[static_cast<std::size_t>(c)])
        result.coordinates(v, 0) += offset;
    }
  }

  // Global centering.
  result.coordinates.rowwise() -= result.coordinates.colwise().mean().eval();

  result.iterations_used = opts.iterations;
  result.converged = worst_final_step < 0.05 * ideal;
  for (const auto& [key, entry] : graph.entries()) {
    const double d = (result.coordinates.row(key.first) - result.coordinates.row(key.second)).norm();
    result.stress += (d - entry.t) * (d - entry.t);
  }
  return result;
}

/// Force-directed layout from a seeded random start: coordinates drawn
/// uniformly in a density-one box, then relaxed by fr_embed_from.
inline EmbeddingResult fr_embed(const GeodesicGraph& graph, const FrOptions& opts) {
  const Index n = graph.n();
  if (opts.d_embed < 1 || opts.d_embed > 3)
    throw std::invalid_argument("fr_embed: d_embed must be 1, 2, or 3");
  const double domain = std::pow(static_cast<double>(n), 1.0 / opts.d_embed);
  auto rng = substream(opts.seed, "embedding");
  Matrix initial(n, opts.d_embed);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < opts.d_embed; ++j)
      initial(i, j) = runif(rng, -domain / 2.0, domain / 2.0);
  return fr_embed_from(graph, initial, opts);
}

} // namespace qgeo

#endif // QGEO_EMBEDDING_HPP
