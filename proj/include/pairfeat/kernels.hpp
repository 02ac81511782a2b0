#pragma once

#include <cstdint>

namespace pairfeat::kernels {

// Hot inner loops of the pipeline. Every kernel here exists twice: the
// OpenMP-parallel version below and a plain-loop reference in
// pairfeat::kernels::serial. Parallel versions split work so that each output
// element is reduced serially in a fixed order, making results bit-identical
// to the serial reference for any thread count. tests/test_kernels.cpp
// asserts that equivalence; tools/bench_kernels.cpp times the two.

/// y(N,Co,Ho,Wo) = conv2d(x(N,Ci,H,W), w(Co,Ci,k,k)) + b, zero padding `pad`,
/// stride `stride`. `b` may be null. Ho = (H + 2*pad - k)/stride + 1.
void conv2d_forward(const double* x, int64_t N, int64_t Ci, int64_t H,
                    int64_t W, const double* w, int64_t Co, int64_t k,
                    const double* b, int64_t stride, int64_t pad, double* y,
                    int64_t Ho, int64_t Wo);

/// dx += conv2d backward w.r.t. input. dx must be zeroed by the caller if a
/// fresh gradient is wanted.
void conv2d_backward_data(const double* dy, int64_t N, int64_t Co, int64_t Ho,
                          int64_t Wo, const double* w, int64_t Ci, int64_t k,
                          int64_t stride, int64_t pad, double* dx, int64_t H,
                          int64_t W);

/// dw += conv2d backward w.r.t. weights; db += column sums (may be null).
void conv2d_backward_filter(const double* dy, int64_t N, int64_t Co,
                            int64_t Ho, int64_t Wo, const double* x,
                            int64_t Ci, int64_t H, int64_t W, int64_t k,
                            int64_t stride, int64_t pad, double* dw,
                            double* db);

/// Nearest-neighbour upsampling by integer factor s: y(N,C,H*s,W*s).
void upsample_nearest_forward(const double* x, int64_t N, int64_t C, int64_t H,
                              int64_t W, int64_t s, double* y);

/// dx += block sums of dy (adjoint of nearest upsampling).
void upsample_nearest_backward(const double* dy, int64_t N, int64_t C,
                               int64_t H, int64_t W, int64_t s, double* dx);

/// In-place iterative radix-2 complex FFT; n must be a power of two.
void fft_radix2(double* re, double* im, int64_t n);

/// Pairwise KL divergence matrix over N rows of K-dim distributions.
/// Rows must already be clamped/normalized; diagonal is written as exact 0.
/// out is N*N row-major, out[n*N+m] = sum_k p_n[k] * ln(p_n[k]/p_m[k]).
void kl_matrix(const double* probs, int64_t N, int64_t K, double* out);

namespace serial {

void conv2d_forward(const double* x, int64_t N, int64_t Ci, int64_t H,
                    int64_t W, const double* w, int64_t Co, int64_t k,
                    const double* b, int64_t stride, int64_t pad, double* y,
                    int64_t Ho, int64_t Wo);
void conv2d_backward_data(const double* dy, int64_t N, int64_t Co, int64_t Ho,
                          int64_t Wo, const double* w, int64_t Ci, int64_t k,
                          int64_t stride, int64_t pad, double* dx, int64_t H,
                          int64_t W);
void conv2d_backward_filter(const double* dy, int64_t N, int64_t Co,
                            int64_t Ho, int64_t Wo, const double* x,
                            int64_t Ci, int64_t H, int64_t W, int64_t k,
                            int64_t stride, int64_t pad, double* dw,
                            double* db);
void upsample_nearest_forward(const double* x, int64_t N, int64_t C, int64_t H,
                              int64_t W, int64_t s, double* y);
void upsample_nearest_backward(const double* dy, int64_t N, int64_t C,
                               int64_t H, int64_t W, int64_t s, double* dx);

/// O(n^2) direct DFT; the independent reference the FFT is tested against.
void dft_naive(const double* re_in, const double* im_in, double* re_out,
               double* im_out, int64_t n);

void kl_matrix(const double* probs, int64_t N, int64_t K, double* out);

}  // namespace serial

}  // namespace pairfeat::kernels
