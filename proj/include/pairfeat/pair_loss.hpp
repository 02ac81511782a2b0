#pragma once

#include <span>

#include "pairfeat/tensor.hpp"

namespace pairfeat {

struct PairLossConfig {
  double threshold = 1.0;  // similarity-ratio gate: below = similar pair
  double margin = 2.0;     // hinge target for dissimilar pairs
  double kl_epsilon = 1e-8;
  double lambda = 1.0;  // weight of the pair term when summed with the MSE
  // The similarity ratio normalizes each pair's KL by the mean over all N^2
  // ordered pairs, diagonal included. This flag drops the diagonal zeros from
  // that mean for sensitivity studies.
  bool exclude_diagonal_in_mean = false;

  void validate() const;
};

/// KL(p || q) in nats. Both distributions are clamped to >= kl_epsilon and
/// renormalized before the log. Throws on length mismatch.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double kl_epsilon = 1e-8);

/// Gradient of kl_divergence w.r.t. raw (pre-clamp) p and q, scaled by
/// upstream dkl and accumulated into dp/dq. Clamped entries get zero gradient.
void kl_divergence_backward(std::span<const double> p,
                            std::span<const double> q, double kl_epsilon,
                            double dkl, std::span<double> dp,
                            std::span<double> dq);

/// N x N matrix of KL(row_n || row_m) over an (N, K) batch of distributions.
/// Diagonal exactly 0. Throws for N < 2.
Tensor pairwise_kl_matrix(const Tensor& distributions, double kl_epsilon = 1e-8);

/// Similarity ratios f = kl / mean(kl). Degenerate batches (mean < 1e-12)
/// are mapped to all-ones, which drives every pair into the margin branch and
/// counteracts representation collapse.
Tensor similarity_ratio(const Tensor& kl_matrix,
                        bool exclude_diagonal_in_mean = false);

/// Per-pair loss: the raw KL for similar pairs (f below threshold), a hinge
/// max(0, margin - kl) for dissimilar ones.
double pair_loss(double kl, double f, const PairLossConfig& config);

struct BatchPairLossResult {
  double value = 0.0;
  /// d(loss)/d(distributions), shape (N, K); empty unless requested.
  Tensor d_distributions;
};

/// Branch gate per ordered pair: +1 for the KL branch (similar), -1 for the
/// margin branch. Exposed so tests can differentiate the loss with the gate
/// matrix frozen, exactly as the backward pass treats it.
Tensor pair_gates(const Tensor& distributions, const PairLossConfig& config);

/// Double sum of pair_loss over all ordered pairs, diagonal included, with an
/// explicit gate matrix. Throws for N < 2.
BatchPairLossResult batch_pair_loss_gated(const Tensor& distributions,
                                          const Tensor& gates,
                                          const PairLossConfig& config,
                                          bool want_grad = false);

/// batch_pair_loss_gated with gates computed from the batch itself. The
/// branch decisions (and f itself, which only gates) are constants of the
/// differentiation.
BatchPairLossResult batch_pair_loss(const Tensor& distributions,
                                    const PairLossConfig& config,
                                    bool want_grad = false);

/// Row-wise softmax with max-subtraction; rows of `v` are (N, K).
Tensor softmax_rows(const Tensor& v);

/// d(loss)/dv given d(loss)/dp where p = softmax_rows(v).
Tensor softmax_rows_backward(const Tensor& probs, const Tensor& dprobs);

struct PresoftmaxPairLossResult {
  double value = 0.0;
  Tensor distributions;     // softmax of the input rows
  Tensor d_presoftmax;      // gradient w.r.t. the input rows
};

/// Convenience composition: softmax + batch_pair_loss with the gradient taken
/// back through the softmax.
PresoftmaxPairLossResult batch_pair_loss_presoftmax(const Tensor& vectors,
                                                    const PairLossConfig& config,
                                                    bool want_grad = true);

}  // namespace pairfeat
