#include <cmath>

#include "pairfeat/kernels.hpp"

// Plain-loop reference implementations. Kept deliberately free of pragmas and
// micro-optimizations so the test suite has a simple second route to compare
// the parallel kernels against.

namespace pairfeat::kernels::serial {

void conv2d_forward(const double* x, int64_t N, int64_t Ci, int64_t H,
                    int64_t W, const double* w, int64_t Co, int64_t k,
                    const double* b, int64_t stride, int64_t pad, double* y,
                    int64_t Ho, int64_t Wo) {
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t co = 0; co < Co; ++co) {
      for (int64_t oh = 0; oh < Ho; ++oh) {
        for (int64_t ow = 0; ow < Wo; ++ow) {
          double acc = b ? b[co] : 0.0;
          for (int64_t ci = 0; ci < Ci; ++ci) {
            for (int64_t kh = 0; kh < k; ++kh) {
              for (int64_t kw = 0; kw < k; ++kw) {
                const int64_t ih = oh * stride - pad + kh;
                const int64_t iw = ow * stride - pad + kw;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += x[((n * Ci + ci) * H + ih) * W + iw] *
                       w[((co * Ci + ci) * k + kh) * k + kw];
              }
            }
          }
          y[((n * Co + co) * Ho + oh) * Wo + ow] = acc;
        }
      }
    }
  }
}

void conv2d_backward_data(const double* dy, int64_t N, int64_t Co, int64_t Ho,
                          int64_t Wo, const double* w, int64_t Ci, int64_t k,
                          int64_t stride, int64_t pad, double* dx, int64_t H,
                          int64_t W) {
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t ci = 0; ci < Ci; ++ci) {
      for (int64_t co = 0; co < Co; ++co) {
        for (int64_t oh = 0; oh < Ho; ++oh) {
          for (int64_t ow = 0; ow < Wo; ++ow) {
            const double g = dy[((n * Co + co) * Ho + oh) * Wo + ow];
            if (g == 0.0) continue;
            for (int64_t kh = 0; kh < k; ++kh) {
              for (int64_t kw = 0; kw < k; ++kw) {
                const int64_t ih = oh * stride - pad + kh;
                const int64_t iw = ow * stride - pad + kw;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                dx[((n * Ci + ci) * H + ih) * W + iw] +=
                    g * w[((co * Ci + ci) * k + kh) * k + kw];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_filter(const double* dy, int64_t N, int64_t Co,
                            int64_t Ho, int64_t Wo, const double* x,
                            int64_t Ci, int64_t H, int64_t W, int64_t k,
                            int64_t stride, int64_t pad, double* dw,
                            double* db) {
  for (int64_t co = 0; co < Co; ++co) {
    double bsum = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      for (int64_t oh = 0; oh < Ho; ++oh) {
        for (int64_t ow = 0; ow < Wo; ++ow) {
          const double g = dy[((n * Co + co) * Ho + oh) * Wo + ow];
          if (g == 0.0) continue;
          bsum += g;
          for (int64_t ci = 0; ci < Ci; ++ci) {
            for (int64_t kh = 0; kh < k; ++kh) {
              for (int64_t kw = 0; kw < k; ++kw) {
                const int64_t ih = oh * stride - pad + kh;
                const int64_t iw = ow * stride - pad + kw;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                dw[((co * Ci + ci) * k + kh) * k + kw] +=
                    g * x[((n * Ci + ci) * H + ih) * W + iw];
              }
            }
          }
        }
      }
    }
    if (db) db[co] += bsum;
  }
}

void upsample_nearest_forward(const double* x, int64_t N, int64_t C, int64_t H,
                              int64_t W, int64_t s, double* y) {
  const int64_t Ho = H * s, Wo = W * s;
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c)
      for (int64_t oh = 0; oh < Ho; ++oh)
        for (int64_t ow = 0; ow < Wo; ++ow)
          y[((n * C + c) * Ho + oh) * Wo + ow] =
              x[((n * C + c) * H + oh / s) * W + ow / s];
}

void upsample_nearest_backward(const double* dy, int64_t N, int64_t C,
                               int64_t H, int64_t W, int64_t s, double* dx) {
  const int64_t Ho = H * s, Wo = W * s;
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c)
      for (int64_t oh = 0; oh < Ho; ++oh)
        for (int64_t ow = 0; ow < Wo; ++ow)
          dx[((n * C + c) * H + oh / s) * W + ow / s] +=
              dy[((n * C + c) * Ho + oh) * Wo + ow];
}

void dft_naive(const double* re_in, const double* im_in, double* re_out,
               double* im_out, int64_t n) {
  for (int64_t kk = 0; kk < n; ++kk) {
    double sr = 0.0, si = 0.0;
    for (int64_t t = 0; t < n; ++t) {
      const double ang = -2.0 * M_PI * static_cast<double>(kk) *
                         static_cast<double>(t) / static_cast<double>(n);
      const double c = std::cos(ang), s = std::sin(ang);
      sr += re_in[t] * c - im_in[t] * s;
      si += re_in[t] * s + im_in[t] * c;
    }
    re_out[kk] = sr;
    im_out[kk] = si;
  }
}

void kl_matrix(const double* probs, int64_t N, int64_t K, double* out) {
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t m = 0; m < N; ++m) {
      if (n == m) {
        out[n * N + m] = 0.0;
        continue;
      }
      double acc = 0.0;
      for (int64_t j = 0; j < K; ++j)
        acc += probs[n * K + j] * std::log(probs[n * K + j] / probs[m * K + j]);
      out[n * N + m] = acc;
    }
  }
}

}  // namespace pairfeat::kernels::serial
