#pragma once

#include <cstdint>
#include <vector>

#include "pairfeat/tensor.hpp"

namespace pairfeat {

struct KMeansResult {
  std::vector<int> assignments;
  Tensor centroids;  // (k, dim)
  double inertia = 0.0;
  int iterations = 0;
  /// Inertia after each Lloyd update of the winning restart; non-increasing.
  std::vector<double> inertia_trace;
};

/// Lloyd's algorithm over (N, dim) points with seeded distinct-point
/// initialization; best inertia over `restarts` wins (ties: first restart).
/// Empty clusters are refilled with the point farthest from its centroid.
/// Throws if N < k or k < 1.
KMeansResult kmeans(const Tensor& points, int k, int restarts, uint64_t seed,
                    int max_iterations = 300);

}  // namespace pairfeat
