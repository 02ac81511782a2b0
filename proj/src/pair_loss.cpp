#include "pairfeat/pair_loss.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pairfeat/kernels.hpp"

namespace pairfeat {

namespace {

/// clamp to >= eps, then renormalize to sum 1
void clamp_normalize(std::span<const double> p, double eps,
                     std::vector<double>& out, double* sum_out) {
  out.resize(p.size());
  double sum = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    out[i] = std::max(p[i], eps);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  if (sum_out) *sum_out = sum;
}

}  // namespace

void PairLossConfig::validate() const {
  if (threshold <= 0) throw std::invalid_argument("pair loss: threshold must be > 0");
  if (margin <= 0) throw std::invalid_argument("pair loss: margin must be > 0");
  if (!(kl_epsilon > 0 && kl_epsilon < 1e-3))
    throw std::invalid_argument("pair loss: kl_epsilon must be in (0, 1e-3)");
  if (lambda < 0) throw std::invalid_argument("pair loss: lambda must be >= 0");
}

double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double kl_epsilon) {
  if (p.size() != q.size())
    throw std::invalid_argument("kl_divergence: length mismatch");
  if (p.empty()) throw std::invalid_argument("kl_divergence: empty input");
  static thread_local std::vector<double> pc, qc;
  clamp_normalize(p, kl_epsilon, pc, nullptr);
  clamp_normalize(q, kl_epsilon, qc, nullptr);
  double acc = 0.0;
  for (size_t i = 0; i < pc.size(); ++i) acc += pc[i] * std::log(pc[i] / qc[i]);
  return std::max(acc, 0.0);
}

void kl_divergence_backward(std::span<const double> p,
                            std::span<const double> q, double kl_epsilon,
                            double dkl, std::span<double> dp,
                            std::span<double> dq) {
  // With a = clamp(p)/S_p, b = clamp(q)/S_q and KL = sum a_i ln(a_i/b_i):
  //   dKL/dclamp(p)_i = (ln(a_i/b_i) - KL) / S_p
  //   dKL/dclamp(q)_i = (1 - a_i/b_i) / S_q
  // and the clamp gate zeroes entries at the floor.
  static thread_local std::vector<double> a, b;
  double sp = 0.0, sq = 0.0;
  clamp_normalize(p, kl_epsilon, a, &sp);
  clamp_normalize(q, kl_epsilon, b, &sq);
  double kl = 0.0;
  for (size_t i = 0; i < a.size(); ++i) kl += a[i] * std::log(a[i] / b[i]);
  for (size_t i = 0; i < a.size(); ++i) {
    if (p[i] > kl_epsilon)
      dp[i] += dkl * (std::log(a[i] / b[i]) - kl) / sp;
    if (q[i] > kl_epsilon)
      dq[i] += dkl * (1.0 - a[i] / b[i]) / sq;
  }
}

Tensor pairwise_kl_matrix(const Tensor& distributions, double kl_epsilon) {
  if (distributions.ndim() != 2)
    throw std::invalid_argument("pairwise_kl_matrix: expected (N, K) rows");
  const int64_t N = distributions.dim(0);
  const int64_t K = distributions.dim(1);
  if (N < 2) throw std::invalid_argument("pairwise_kl_matrix: need N >= 2");

  // clamp/normalize once, then hand the prepared rows to the kernel
  Tensor prepared({N, K});
  std::vector<double> row;
  for (int64_t n = 0; n < N; ++n) {
    clamp_normalize({distributions.data() + n * K, static_cast<size_t>(K)},
                    kl_epsilon, row, nullptr);
    for (int64_t k = 0; k < K; ++k) prepared.at(n, k) = row[static_cast<size_t>(k)];
  }
  Tensor out({N, N});
  kernels::kl_matrix(prepared.data(), N, K, out.data());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], 0.0);
  return out;
}

Tensor similarity_ratio(const Tensor& kl_matrix, bool exclude_diagonal_in_mean) {
  if (kl_matrix.ndim() != 2 || kl_matrix.dim(0) != kl_matrix.dim(1))
    throw std::invalid_argument("similarity_ratio: expected a square matrix");
  const int64_t N = kl_matrix.dim(0);
  double sum = 0.0;
  for (int64_t i = 0; i < kl_matrix.size(); ++i) sum += kl_matrix[i];
  const int64_t denom_count = exclude_diagonal_in_mean ? N * (N - 1) : N * N;
  const double mean = sum / static_cast<double>(denom_count);

  Tensor f({N, N});
  if (mean < 1e-12) {
    f.fill(1.0);  // degenerate batch: force every pair into the margin branch
    return f;
  }
  for (int64_t i = 0; i < f.size(); ++i) f[i] = kl_matrix[i] / mean;
  return f;
}

double pair_loss(double kl, double f, const PairLossConfig& config) {
  if (f < config.threshold) return kl;
  return std::max(0.0, config.margin - kl);
}

Tensor pair_gates(const Tensor& distributions, const PairLossConfig& config) {
  config.validate();
  const Tensor kl = pairwise_kl_matrix(distributions, config.kl_epsilon);
  const Tensor f = similarity_ratio(kl, config.exclude_diagonal_in_mean);
  const int64_t N = f.dim(0);
  Tensor gates({N, N});
  for (int64_t i = 0; i < f.size(); ++i)
    gates[i] = f[i] < config.threshold ? 1.0 : -1.0;
  return gates;
}

BatchPairLossResult batch_pair_loss_gated(const Tensor& distributions,
                                          const Tensor& gates,
                                          const PairLossConfig& config,
                                          bool want_grad) {
  config.validate();
  const int64_t N = distributions.dim(0);
  const int64_t K = distributions.dim(1);
  if (N < 2) throw std::invalid_argument("batch_pair_loss: need N >= 2");
  if (gates.ndim() != 2 || gates.dim(0) != N || gates.dim(1) != N)
    throw std::invalid_argument("batch_pair_loss: gate matrix must be N x N");

  const Tensor kl = pairwise_kl_matrix(distributions, config.kl_epsilon);

  BatchPairLossResult res;
  if (want_grad) res.d_distributions = Tensor({N, K});
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t m = 0; m < N; ++m) {
      const double kl_nm = kl.at(n, m);
      const bool similar = gates.at(n, m) > 0.0;
      res.value += similar ? kl_nm : std::max(0.0, config.margin - kl_nm);
      if (!want_grad) continue;
      double dkl = 0.0;
      if (similar)
        dkl = 1.0;
      else if (config.margin - kl_nm > 0.0)
        dkl = -1.0;
      if (dkl == 0.0 || n == m) continue;  // KL(p||p) is identically 0
      kl_divergence_backward(
          {distributions.data() + n * K, static_cast<size_t>(K)},
          {distributions.data() + m * K, static_cast<size_t>(K)},
          config.kl_epsilon, dkl,
          {res.d_distributions.data() + n * K, static_cast<size_t>(K)},
          {res.d_distributions.data() + m * K, static_cast<size_t>(K)});
    }
  }
  return res;
}

BatchPairLossResult batch_pair_loss(const Tensor& distributions,
                                    const PairLossConfig& config,
                                    bool want_grad) {
  return batch_pair_loss_gated(distributions, pair_gates(distributions, config),
                               config, want_grad);
}

Tensor softmax_rows(const Tensor& v) {
  if (v.ndim() != 2) throw std::invalid_argument("softmax_rows: expected (N, K)");
  const int64_t N = v.dim(0), K = v.dim(1);
  Tensor p({N, K});
  for (int64_t n = 0; n < N; ++n) {
    double mx = v.at(n, 0);
    for (int64_t k = 1; k < K; ++k) mx = std::max(mx, v.at(n, k));
    if (!std::isfinite(mx))
      throw std::invalid_argument("softmax_rows: non-finite input");
    double sum = 0.0;
    for (int64_t k = 0; k < K; ++k) {
      const double e = std::exp(v.at(n, k) - mx);
      p.at(n, k) = e;
      sum += e;
    }
    for (int64_t k = 0; k < K; ++k) p.at(n, k) /= sum;
  }
  return p;
}

Tensor softmax_rows_backward(const Tensor& probs, const Tensor& dprobs) {
  const int64_t N = probs.dim(0), K = probs.dim(1);
  Tensor dv({N, K});
  for (int64_t n = 0; n < N; ++n) {
    double dot = 0.0;
    for (int64_t k = 0; k < K; ++k) dot += dprobs.at(n, k) * probs.at(n, k);
    for (int64_t k = 0; k < K; ++k)
      dv.at(n, k) = probs.at(n, k) * (dprobs.at(n, k) - dot);
  }
  return dv;
}

PresoftmaxPairLossResult batch_pair_loss_presoftmax(const Tensor& vectors,
                                                    const PairLossConfig& config,
                                                    bool want_grad) {
  PresoftmaxPairLossResult out;
  out.distributions = softmax_rows(vectors);
  BatchPairLossResult inner = batch_pair_loss(out.distributions, config, want_grad);
  out.value = inner.value;
  if (want_grad)
    out.d_presoftmax = softmax_rows_backward(out.distributions, inner.d_distributions);
  return out;
}

}  // namespace pairfeat
