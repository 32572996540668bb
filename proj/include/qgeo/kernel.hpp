#ifndef QGEO_KERNEL_HPP
#define QGEO_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qgeo/types.hpp"

namespace qgeo {

enum class KernelKind { gaussian, truncated_gaussian };

inline std::string to_string(KernelKind k) {
  return k == KernelKind::gaussian ? "gaussian" : "truncated_gaussian";
}

inline std::optional<KernelKind> kernel_kind_from_string(const std::string& s) {
  if (s == "gaussian") return KernelKind::gaussian;
  if (s == "truncated_gaussian") return KernelKind::truncated_gaussian;
  return std::nullopt;
}

/// Dense Gaussian affinity matrix T_ij = exp(-|v_i - v_j|^2 / eps) together
/// with its row sums (degrees).  The truncated variant zeroes entries beyond
/// `truncation_multiple` times sqrt(eps) in squared distance, i.e. beyond a
/// 3*sqrt(eps) radius at the default multiple of 9.
struct KernelGraph {
  Matrix weights;                     // N x N, symmetric, unit diagonal
  Vector degrees;                     // row sums of weights
  double epsilon = 0.0;
  KernelKind kind = KernelKind::truncated_gaussian;
  double truncation_multiple = 9.0;   // cutoff: dist^2 > multiple * eps

  Index n() const { return weights.rows(); }
};

inline KernelGraph build_kernel(const PointCloud& cloud, double epsilon,
                                KernelKind kind = KernelKind::truncated_gaussian,
                                double truncation_multiple = 9.0) {
  cloud.validate();
  if (!(epsilon > 0.0)) throw std::invalid_argument("build_kernel: epsilon must be > 0");
  if (!(truncation_multiple > 0.0))
    throw std::invalid_argument("build_kernel: truncation multiple must be > 0");

  const Index n = cloud.n();
  KernelGraph graph;
  graph.epsilon = epsilon;
  graph.kind = kind;
  graph.truncation_multiple = truncation_multiple;
  graph.weights.setZero(n, n);

  const double cutoff = truncation_multiple * epsilon;
  const bool truncate = kind == KernelKind::truncated_gaussian;
  for (Index i = 0; i < n; ++i) {
    graph.weights(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      const double d2 = (cloud.points.row(i) - cloud.points.row(j)).squaredNorm();
      if (truncate && d2 > cutoff) continue;
      const double w = std::exp(-d2 / epsilon);
      graph.weights(i, j) = w;
      graph.weights(j, i) = w;
    }
  }
  graph.degrees = graph.weights.rowwise().sum();

  if (truncate) {
    // A vertex whose degree is just its own unit self-weight has no neighbors
    // within the truncation radius; the walk cannot leave it.
    for (Index i = 0; i < n; ++i)
      if (graph.degrees(i) < 1.0 + 1e-12) throw DisconnectedGraphError(i);
  }
  return graph;
}

/// Scale selection: median distance to the `min_neighbors`-th nearest
/// neighbor, divided by 3 so that radius sits at the truncation edge, squared.
inline double auto_epsilon(const PointCloud& cloud, int min_neighbors = 15) {
  cloud.validate();
  const Index n = cloud.n();
  if (min_neighbors < 1 || min_neighbors > n - 1)
    throw std::invalid_argument("auto_epsilon: min_neighbors out of range");

  std::vector<double> kth(static_cast<std::size_t>(n));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j)
      d2[static_cast<std::size_t>(j)] =
          (cloud.points.row(i) - cloud.points.row(j)).squaredNorm();
    //+1 skips the zero distance to self at the front of the order.
    std::nth_element(d2.begin(), d2.begin() + min_neighbors, d2.end());
    kth[static_cast<std::size_t>(i)] = std::sqrt(d2[static_cast<std::size_t>(min_neighbors)]);
  }
  std::nth_element(kth.begin(), kth.begin() + n / 2, kth.end());
  double median = kth[static_cast<std::size_t>(n / 2)];
  if (n % 2 == 0) {
    const double lo = *std::max_element(kth.begin(), kth.begin() + n / 2);
    median = 0.5 * (median + lo);
  }
  const double r = median / 3.0;
  if (!(r > 0.0)) throw DataError("auto_epsilon: cloud has coincident points everywhere");
  return r * r;
}

} // namespace qgeo

#endif // QGEO_KERNEL_HPP
