#pragma once

#include <cstdint>
#include <vector>

namespace pairfeat {

/// Minimum-cost assignment on a square cost matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns row -> column.
std::vector<int> hungarian_min_cost(const std::vector<std::vector<double>>& cost);

struct ClusterAccuracy {
  double accuracy = 0.0;
  /// cluster id -> label index; an injective map into the label set.
  std::vector<int> assignment;
  /// contingency[cluster][label] sample counts
  std::vector<std::vector<int64_t>> contingency;
};

/// Maximum-agreement matching of cluster ids to label indices: builds the
/// cluster x label contingency matrix, pads it square, and solves the
/// assignment that maximizes matched counts. Inputs must be equally long and
/// non-empty; ids/labels are dense 0-based indices.
ClusterAccuracy hungarian_accuracy(const std::vector<int>& cluster_ids,
                                   const std::vector<int>& label_ids,
                                   int n_clusters, int n_labels);

}  // namespace pairfeat
