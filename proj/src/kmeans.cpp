#include "pairfeat/kmeans.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pairfeat/rng.hpp"

namespace pairfeat {

namespace {

double sq_dist(const double* a, const double* b, int64_t d) {
  double acc = 0.0;
  for (int64_t i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

KMeansResult kmeans(const Tensor& points, int k, int restarts, uint64_t seed,
                    int max_iterations) {
  if (points.ndim() != 2) throw std::invalid_argument("kmeans: expected (N, dim)");
  const int64_t N = points.dim(0), D = points.dim(1);
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (N < k)
    throw std::invalid_argument("kmeans: " + std::to_string(N) +
                                " points cannot fill " + std::to_string(k) + " clusters");
  if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    Rng rng(mix_seed(seed, static_cast<uint64_t>(r)));
    // distinct starting points
    std::vector<int64_t> pool(static_cast<size_t>(N));
    for (int64_t i = 0; i < N; ++i) pool[static_cast<size_t>(i)] = i;
    rng.shuffle(pool);
    Tensor centroids({k, D});
    for (int c = 0; c < k; ++c)
      for (int64_t d = 0; d < D; ++d)
        centroids.at(c, d) = points.at(pool[static_cast<size_t>(c)], d);

    std::vector<int> assign(static_cast<size_t>(N), -1);
    std::vector<double> point_dist(static_cast<size_t>(N), 0.0);
    std::vector<double> trace;
    double inertia = 0.0;
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
      bool changed = false;
      inertia = 0.0;
      for (int64_t i = 0; i < N; ++i) {
        double bd = std::numeric_limits<double>::infinity();
        int bc = 0;
        for (int c = 0; c < k; ++c) {
          const double d2 = sq_dist(points.data() + i * D,
                                    centroids.data() + static_cast<int64_t>(c) * D, D);
          if (d2 < bd) {
            bd = d2;
            bc = c;
          }
        }
        if (assign[static_cast<size_t>(i)] != bc) {
          assign[static_cast<size_t>(i)] = bc;
          changed = true;
        }
        point_dist[static_cast<size_t>(i)] = bd;
        inertia += bd;
      }
      trace.push_back(inertia);
      if (!changed) break;

      // means per cluster
      centroids.zero();
      std::vector<int64_t> counts(static_cast<size_t>(k), 0);
      for (int64_t i = 0; i < N; ++i) {
        const int c = assign[static_cast<size_t>(i)];
        ++counts[static_cast<size_t>(c)];
        for (int64_t d = 0; d < D; ++d) centroids.at(c, d) += points.at(i, d);
      }
      for (int c = 0; c < k; ++c) {
        if (counts[static_cast<size_t>(c)] == 0) {
          // refill an empty cluster with the worst-fitting point
          double worst = -1.0;
          int64_t pick = 0;
          for (int64_t i = 0; i < N; ++i) {
            if (point_dist[static_cast<size_t>(i)] > worst) {
              worst = point_dist[static_cast<size_t>(i)];
              pick = i;
            }
          }
          point_dist[static_cast<size_t>(pick)] = -1.0;
          for (int64_t d = 0; d < D; ++d) centroids.at(c, d) = points.at(pick, d);
        } else {
          const double inv = 1.0 / static_cast<double>(counts[static_cast<size_t>(c)]);
          for (int64_t d = 0; d < D; ++d) centroids.at(c, d) *= inv;
        }
      }
    }

    if (inertia < best.inertia) {
      best.assignments = assign;
      best.centroids = centroids;
      best.inertia = inertia;
      best.iterations = iter + 1;
      best.inertia_trace = trace;
    }
  }
  return best;
}

}  // namespace pairfeat
