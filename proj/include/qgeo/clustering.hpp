#ifndef QGEO_CLUSTERING_HPP
#define QGEO_CLUSTERING_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qgeo/rng.hpp"
#include "qgeo/types.hpp"

namespace qgeo {

struct KmeansOptions {
  int restarts = 10;
  std::uint64_t seed = 0;
  int max_iterations = 300;
  double tolerance = 1e-6; // relative inertia change that counts as converged
};

struct ClusterAssignment {
  std::vector<int> labels; // one per row, in [0, k)
  Matrix centroids;        // k x d
  double inertia = 0.0;    // sum of squared distances to assigned centroids
};

namespace detail {

/// Seeding that spreads initial centroids: first uniform, then each next
/// centroid drawn with probability proportional to squared distance from the
/// chosen set.  Sampling walks the cumulative weights with a portable uniform
/// draw, so runs are reproducible across standard libraries.
inline Matrix kmeanspp_seeds(const Matrix& points, int k, std::mt19937_64& rng) {
  const Index n = points.rows();
  Matrix seeds(k, points.cols());
  seeds.row(0) = points.row(static_cast<Index>(rng() % static_cast<std::uint64_t>(n)));
  Vector best_d2 = (points.rowwise() - seeds.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = best_d2.sum();
    Index pick = 0;
    if (total > 0.0) {
      const double target = runif(rng) * total;
      double cum = 0.0;
      for (Index i = 0; i < n; ++i) {
        cum += best_d2(i);
        if (cum >= target) {
          pick = i;
          break;
        }
      }
    } else {
      // All remaining points coincide with chosen seeds; fall back to uniform.
      pick = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
    }
    seeds.row(c) = points.row(pick);
    best_d2 = best_d2.cwiseMin(
        (points.rowwise() - seeds.row(c)).rowwise().squaredNorm().eval());
  }
  return seeds;
}

} // namespace detail

/// Lloyd iterations from k-means++ seeds, best inertia over `restarts` runs.
/// A cluster that empties is re-seeded at the point farthest from its
/// assigned centroid, so every returned cluster is nonempty.
inline ClusterAssignment kmeans(const Matrix& points, int k,
                                const KmeansOptions& opts = {}) {
  const Index n = points.rows();
  if (n < 1) throw std::invalid_argument("kmeans: empty point set");
  if (k < 1 || k > n) throw std::invalid_argument("kmeans: need 1 <= k <= n");
  if (opts.restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");

  ClusterAssignment best;
  best.inertia = std::numeric_limits<double>::infinity();
  auto rng = substream(opts.seed, "kmeans");

  for (int restart = 0; restart < opts.restarts; ++restart) {
    Matrix centroids = detail::kmeanspp_seeds(points, k, rng);
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    double inertia = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
      // Assign.
      double new_inertia = 0.0;
      for (Index i = 0; i < n; ++i) {
        int arg = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          const double d = (points.row(i) - centroids.row(c)).squaredNorm();
          if (d < bd) {
            bd = d;
            arg = c;
          }
        }
        labels[static_cast<std::size_t>(i)] = arg;
        new_inertia += bd;
      }
      // Update; revive empty clusters at the worst-fitting point.
      Matrix sums = Matrix::Zero(k, points.cols());
      std::vector<Index> counts(static_cast<std::size_t>(k), 0);
      for (Index i = 0; i < n; ++i) {
        sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
        ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
      }
      for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
          centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        } else {
          Index farthest = 0;
          double fd = -1.0;
          for (Index i = 0; i < n; ++i) {
            const double d =
                (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
            if (d > fd) {
              fd = d;
              farthest = i;
            }
          }
          centroids.row(c) = points.row(farthest);
          labels[static_cast<std::size_t>(farthest)] = c;
        }
      }
      const bool done = std::isfinite(inertia) &&
                        std::fabs(inertia - new_inertia) <=
                            opts.tolerance * std::max(inertia, 1e-300);
      inertia = new_inertia;
      if (done) break;
    }

    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.labels = labels;
      best.centroids = centroids;
    }
  }
  return best;
}

/// Per-cluster means in the original feature space of the cloud (not the
/// embedding), one row per cluster.
inline Matrix cluster_summaries(const PointCloud& cloud, const ClusterAssignment& clusters) {
  if (static_cast<Index>(clusters.labels.size()) != cloud.n())
    throw std::invalid_argument("cluster_summaries: label count does not match cloud");
  const int k = static_cast<int>(clusters.centroids.rows());
  Matrix sums = Matrix::Zero(k, cloud.dim());
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (Index i = 0; i < cloud.n(); ++i) {
    const int c = clusters.labels[static_cast<std::size_t>(i)];
    if (c < 0 || c >= k) throw std::invalid_argument("cluster_summaries: label out of range");
    sums.row(c) += cloud.points.row(i);
    ++counts[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw DataError("cluster_summaries: cluster " + std::to_string(c) + " is empty");
    sums.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  }
  return sums;
}

} // namespace qgeo

#endif // QGEO_CLUSTERING_HPP
