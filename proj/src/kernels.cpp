#include "pairfeat/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pairfeat::kernels {

void conv2d_forward(const double* x, int64_t N, int64_t Ci, int64_t H,
                    int64_t W, const double* w, int64_t Co, int64_t k,
                    const double* b, int64_t stride, int64_t pad, double* y,
                    int64_t Ho, int64_t Wo) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t co = 0; co < Co; ++co) {
      double* yp = y + ((n * Co + co) * Ho) * Wo;
      const double* wc = w + co * Ci * k * k;
      const double bias = b ? b[co] : 0.0;
      for (int64_t oh = 0; oh < Ho; ++oh) {
        for (int64_t ow = 0; ow < Wo; ++ow) {
          double acc = bias;
          for (int64_t ci = 0; ci < Ci; ++ci) {
            const double* xp = x + ((n * Ci + ci) * H) * W;
            const double* wp = wc + ci * k * k;
            for (int64_t kh = 0; kh < k; ++kh) {
              const int64_t ih = oh * stride - pad + kh;
              if (ih < 0 || ih >= H) continue;
              const double* xr = xp + ih * W;
              const double* wr = wp + kh * k;
              for (int64_t kw = 0; kw < k; ++kw) {
                const int64_t iw = ow * stride - pad + kw;
                if (iw < 0 || iw >= W) continue;
                acc += xr[iw] * wr[kw];
              }
            }
          }
          yp[oh * Wo + ow] = acc;
        }
      }
    }
  }
}

void conv2d_backward_data(const double* dy, int64_t N, int64_t Co, int64_t Ho,
                          int64_t Wo, const double* w, int64_t Ci, int64_t k,
                          int64_t stride, int64_t pad, double* dx, int64_t H,
                          int64_t W) {
  // each (n, ci) slice is owned by one iteration: no write races
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t ci = 0; ci < Ci; ++ci) {
      double* dxp = dx + ((n * Ci + ci) * H) * W;
      for (int64_t co = 0; co < Co; ++co) {
        const double* dyp = dy + ((n * Co + co) * Ho) * Wo;
        const double* wp = w + (co * Ci + ci) * k * k;
        for (int64_t oh = 0; oh < Ho; ++oh) {
          for (int64_t ow = 0; ow < Wo; ++ow) {
            const double g = dyp[oh * Wo + ow];
            if (g == 0.0) continue;
            for (int64_t kh = 0; kh < k; ++kh) {
              const int64_t ih = oh * stride - pad + kh;
              if (ih < 0 || ih >= H) continue;
              for (int64_t kw = 0; kw < k; ++kw) {
                const int64_t iw = ow * stride - pad + kw;
                if (iw < 0 || iw >= W) continue;
                dxp[ih * W + iw] += g * wp[kh * k + kw];
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
  // each co owns its dw slice and db entry; inner reduction order is fixed
#pragma omp parallel for schedule(static)
  for (int64_t co = 0; co < Co; ++co) {
    double* dwc = dw + co * Ci * k * k;
    double bsum = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      const double* dyp = dy + ((n * Co + co) * Ho) * Wo;
      for (int64_t oh = 0; oh < Ho; ++oh) {
        for (int64_t ow = 0; ow < Wo; ++ow) {
          const double g = dyp[oh * Wo + ow];
          if (g == 0.0) continue;
          bsum += g;
          for (int64_t ci = 0; ci < Ci; ++ci) {
            const double* xp = x + ((n * Ci + ci) * H) * W;
            double* dwp = dwc + ci * k * k;
            for (int64_t kh = 0; kh < k; ++kh) {
              const int64_t ih = oh * stride - pad + kh;
              if (ih < 0 || ih >= H) continue;
              const double* xr = xp + ih * W;
              for (int64_t kw = 0; kw < k; ++kw) {
                const int64_t iw = ow * stride - pad + kw;
                if (iw < 0 || iw >= W) continue;
                dwp[kh * k + kw] += g * xr[iw];
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
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t c = 0; c < C; ++c) {
      const double* xp = x + ((n * C + c) * H) * W;
      double* yp = y + ((n * C + c) * Ho) * Wo;
      for (int64_t oh = 0; oh < Ho; ++oh) {
        const double* xr = xp + (oh / s) * W;
        double* yr = yp + oh * Wo;
        for (int64_t ow = 0; ow < Wo; ++ow) yr[ow] = xr[ow / s];
      }
    }
  }
}

void upsample_nearest_backward(const double* dy, int64_t N, int64_t C,
                               int64_t H, int64_t W, int64_t s, double* dx) {
  const int64_t Ho = H * s, Wo = W * s;
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t c = 0; c < C; ++c) {
      double* dxp = dx + ((n * C + c) * H) * W;
      const double* dyp = dy + ((n * C + c) * Ho) * Wo;
      for (int64_t ih = 0; ih < H; ++ih) {
        for (int64_t iw = 0; iw < W; ++iw) {
          double acc = 0.0;
          for (int64_t dh = 0; dh < s; ++dh) {
            const double* dyr = dyp + (ih * s + dh) * Wo + iw * s;
            for (int64_t dw_ = 0; dw_ < s; ++dw_) acc += dyr[dw_];
          }
          dxp[ih * W + iw] += acc;
        }
      }
    }
  }
}

void fft_radix2(double* re, double* im, int64_t n) {
  // bit reversal
  for (int64_t i = 1, j = 0; i < n; ++i) {
    int64_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (int64_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (int64_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (int64_t j = 0; j < len / 2; ++j) {
        const int64_t a = i + j, b = i + j + len / 2;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

void kl_matrix(const double* probs, int64_t N, int64_t K, double* out) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t m = 0; m < N; ++m) {
      if (n == m) {
        out[n * N + m] = 0.0;
        continue;
      }
      const double* p = probs + n * K;
      const double* q = probs + m * K;
      double acc = 0.0;
      for (int64_t j = 0; j < K; ++j) acc += p[j] * std::log(p[j] / q[j]);
      out[n * N + m] = acc;
    }
  }
}

}  // namespace pairfeat::kernels
