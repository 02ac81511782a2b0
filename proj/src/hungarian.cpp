#include "pairfeat/hungarian.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace pairfeat {

std::vector<int> hungarian_min_cost(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) throw std::invalid_argument("hungarian: empty cost matrix");
  for (const auto& row : cost)
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("hungarian: cost matrix must be square");

  // potentials over a 1-based virtual grid; way[j] backtracks augmenting paths
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

ClusterAccuracy hungarian_accuracy(const std::vector<int>& cluster_ids,
                                   const std::vector<int>& label_ids,
                                   int n_clusters, int n_labels) {
  if (cluster_ids.empty() || cluster_ids.size() != label_ids.size())
    throw std::invalid_argument("hungarian_accuracy: empty or mismatched inputs");
  if (n_clusters < 1 || n_labels < 1)
    throw std::invalid_argument("hungarian_accuracy: need >= 1 cluster and label");

  ClusterAccuracy out;
  out.contingency.assign(static_cast<size_t>(n_clusters),
                         std::vector<int64_t>(static_cast<size_t>(n_labels), 0));
  for (size_t i = 0; i < cluster_ids.size(); ++i) {
    const int c = cluster_ids[i], l = label_ids[i];
    if (c < 0 || c >= n_clusters || l < 0 || l >= n_labels)
      throw std::invalid_argument("hungarian_accuracy: id out of range");
    ++out.contingency[static_cast<size_t>(c)][static_cast<size_t>(l)];
  }

  // pad to square; costs are negated counts so min-cost = max agreement
  const int n = std::max(n_clusters, n_labels);
  std::vector<std::vector<double>> cost(static_cast<size_t>(n),
                                        std::vector<double>(static_cast<size_t>(n), 0.0));
  for (int c = 0; c < n_clusters; ++c)
    for (int l = 0; l < n_labels; ++l)
      cost[static_cast<size_t>(c)][static_cast<size_t>(l)] =
          -static_cast<double>(out.contingency[static_cast<size_t>(c)][static_cast<size_t>(l)]);

  const std::vector<int> match = hungarian_min_cost(cost);
  out.assignment.assign(static_cast<size_t>(n_clusters), -1);
  int64_t agree = 0;
  for (int c = 0; c < n_clusters; ++c) {
    const int l = match[static_cast<size_t>(c)];
    if (l < n_labels) {
      out.assignment[static_cast<size_t>(c)] = l;
      agree += out.contingency[static_cast<size_t>(c)][static_cast<size_t>(l)];
    }
  }
  out.accuracy = static_cast<double>(agree) / static_cast<double>(cluster_ids.size());
  return out;
}

}  // namespace pairfeat
