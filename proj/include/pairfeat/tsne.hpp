#pragma once

#include <cstdint>

#include "pairfeat/tensor.hpp"

namespace pairfeat {

struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  uint64_t seed = 1;
};

/// Exact (all-pairs) t-SNE of (N, D) rows into (N, 2). Gaussian input
/// affinities with per-point bandwidths found by binary search on the
/// perplexity; Student-t output kernel; gradient descent with momentum and
/// per-dimension gains. Deterministic for a fixed seed. Requires
/// N > 3 * perplexity.
Tensor tsne_embed(const Tensor& rows, const TsneConfig& config);

}  // namespace pairfeat
