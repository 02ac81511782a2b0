#include "pairfeat/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "pairfeat/kernels.hpp"

namespace pairfeat {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_4d(const Tensor& x, const char* who) {
  if (x.ndim() != 4)
    throw std::invalid_argument(std::string(who) + ": expected (N, C, H, W), got " +
                                x.shape_str());
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_ch_, int out_ch_, int ksize_, int stride_, bool bias)
    : in_ch(in_ch_),
      out_ch(out_ch_),
      ksize(ksize_),
      stride(stride_),
      pad(ksize_ / 2),
      has_bias(bias),
      w({out_ch_, in_ch_, ksize_, ksize_}),
      b(bias ? Tensor({out_ch_}) : Tensor()),
      gw({out_ch_, in_ch_, ksize_, ksize_}),
      gb(bias ? Tensor({out_ch_}) : Tensor()) {}

void Conv2d::init(Rng& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(in_ch) * ksize * ksize);
  for (int64_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-limit, limit);
  if (has_bias) b.zero();
}

Tensor Conv2d::forward(const Tensor& x) const {
  check_4d(x, "conv2d");
  if (x.dim(1) != in_ch)
    throw std::invalid_argument("conv2d: channel mismatch, got " + x.shape_str());
  const int64_t N = x.dim(0), H = x.dim(2), W = x.dim(3);
  const int64_t Ho = out_h(H), Wo = out_h(W);
  Tensor y({N, out_ch, Ho, Wo});
  kernels::conv2d_forward(x.data(), N, in_ch, H, W, w.data(), out_ch, ksize,
                          has_bias ? b.data() : nullptr, stride, pad, y.data(),
                          Ho, Wo);
  return y;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& dy) {
  const int64_t N = x.dim(0), H = x.dim(2), W = x.dim(3);
  const int64_t Ho = dy.dim(2), Wo = dy.dim(3);
  kernels::conv2d_backward_filter(dy.data(), N, out_ch, Ho, Wo, x.data(),
                                  in_ch, H, W, ksize, stride, pad, gw.data(),
                                  has_bias ? gb.data() : nullptr);
  Tensor dx({N, in_ch, H, W});
  kernels::conv2d_backward_data(dy.data(), N, out_ch, Ho, Wo, w.data(), in_ch,
                                ksize, stride, pad, dx.data(), H, W);
  return dx;
}

void Conv2d::collect_params(const std::string& prefix,
                            std::vector<ParamRef>& out) {
  out.push_back({prefix + ".w", &w, &gw});
  if (has_bias) out.push_back({prefix + ".b", &b, &gb});
}

// ------------------------------------------------------------ BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels)
    : ch(channels),
      gamma({channels}),
      beta({channels}),
      ggamma({channels}),
      gbeta({channels}),
      running_mean({channels}),
      running_var({channels}) {
  gamma.fill(1.0);
  running_var.fill(1.0);
}

Tensor BatchNorm2d::forward_train(const Tensor& x, Trace* trace) {
  check_4d(x, "batchnorm");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t M = N * H * W;
  Tensor y({N, C, H, W});
  if (trace) {
    trace->xhat = Tensor({N, C, H, W});
    trace->invstd.assign(static_cast<size_t>(C), 0.0);
  }
  for (int64_t c = 0; c < C; ++c) {
    double mean = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      const double* xp = x.data() + ((n * C + c) * H) * W;
      for (int64_t i = 0; i < H * W; ++i) mean += xp[i];
    }
    mean /= static_cast<double>(M);
    double var = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      const double* xp = x.data() + ((n * C + c) * H) * W;
      for (int64_t i = 0; i < H * W; ++i) {
        const double d = xp[i] - mean;
        var += d * d;
      }
    }
    var /= static_cast<double>(M);
    const double invstd = 1.0 / std::sqrt(var + eps);
    running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean;
    running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var;
    if (trace) trace->invstd[static_cast<size_t>(c)] = invstd;
    const double g = gamma[c], bt = beta[c];
    for (int64_t n = 0; n < N; ++n) {
      const double* xp = x.data() + ((n * C + c) * H) * W;
      double* yp = y.data() + ((n * C + c) * H) * W;
      double* hp = trace ? trace->xhat.data() + ((n * C + c) * H) * W : nullptr;
      for (int64_t i = 0; i < H * W; ++i) {
        const double xh = (xp[i] - mean) * invstd;
        if (hp) hp[i] = xh;
        yp[i] = g * xh + bt;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::forward_eval(const Tensor& x) const {
  check_4d(x, "batchnorm");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor y({N, C, H, W});
  for (int64_t c = 0; c < C; ++c) {
    const double invstd = 1.0 / std::sqrt(running_var[c] + eps);
    const double mean = running_mean[c];
    const double g = gamma[c], bt = beta[c];
    for (int64_t n = 0; n < N; ++n) {
      const double* xp = x.data() + ((n * C + c) * H) * W;
      double* yp = y.data() + ((n * C + c) * H) * W;
      for (int64_t i = 0; i < H * W; ++i) yp[i] = g * (xp[i] - mean) * invstd + bt;
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Trace& trace, const Tensor& dy) {
  const int64_t N = dy.dim(0), C = dy.dim(1), H = dy.dim(2), W = dy.dim(3);
  const int64_t M = N * H * W;
  Tensor dx({N, C, H, W});
  for (int64_t c = 0; c < C; ++c) {
    // dgamma = sum dy*xhat, dbeta = sum dy; dx via the standard batch-stat
    // chain rule: dx = (g*invstd/M) * (M*dy - sum(dy) - xhat*sum(dy*xhat))
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      const double* dyp = dy.data() + ((n * C + c) * H) * W;
      const double* hp = trace.xhat.data() + ((n * C + c) * H) * W;
      for (int64_t i = 0; i < H * W; ++i) {
        sum_dy += dyp[i];
        sum_dy_xhat += dyp[i] * hp[i];
      }
    }
    ggamma[c] += sum_dy_xhat;
    gbeta[c] += sum_dy;
    const double g = gamma[c];
    const double invstd = trace.invstd[static_cast<size_t>(c)];
    const double scale = g * invstd / static_cast<double>(M);
    for (int64_t n = 0; n < N; ++n) {
      const double* dyp = dy.data() + ((n * C + c) * H) * W;
      const double* hp = trace.xhat.data() + ((n * C + c) * H) * W;
      double* dxp = dx.data() + ((n * C + c) * H) * W;
      for (int64_t i = 0; i < H * W; ++i)
        dxp[i] = scale * (static_cast<double>(M) * dyp[i] - sum_dy -
                          hp[i] * sum_dy_xhat);
    }
  }
  return dx;
}

void BatchNorm2d::collect_params(const std::string& prefix,
                                 std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &gamma, &ggamma});
  out.push_back({prefix + ".beta", &beta, &gbeta});
}

// ------------------------------------------------------------- pointwise

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (int64_t i = 0; i < y.size(); ++i) y[i] = y[i] > 0.0 ? y[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (int64_t i = 0; i < dx.size(); ++i)
    if (y[i] <= 0.0) dx[i] = 0.0;
  return dx;
}

Tensor upsample_nearest(const Tensor& x, int factor) {
  check_4d(x, "upsample");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor y({N, C, H * factor, W * factor});
  kernels::upsample_nearest_forward(x.data(), N, C, H, W, factor, y.data());
  return y;
}

Tensor upsample_nearest_backward(const Tensor& dy, int factor) {
  const int64_t N = dy.dim(0), C = dy.dim(1);
  const int64_t H = dy.dim(2) / factor, W = dy.dim(3) / factor;
  Tensor dx({N, C, H, W});
  kernels::upsample_nearest_backward(dy.data(), N, C, H, W, factor, dx.data());
  return dx;
}

Tensor mean_pool_spatial(const Tensor& x) {
  check_4d(x, "mean_pool");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor v({N, C});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c) {
      const double* xp = x.data() + ((n * C + c) * H) * W;
      double acc = 0.0;
      for (int64_t i = 0; i < H * W; ++i) acc += xp[i];
      v.at(n, c) = acc / static_cast<double>(H * W);
    }
  return v;
}

Tensor mean_pool_spatial_backward(const Tensor& dv, int64_t h, int64_t w) {
  const int64_t N = dv.dim(0), C = dv.dim(1);
  Tensor dx({N, C, h, w});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c) {
      const double g = dv.at(n, c) / static_cast<double>(h * w);
      double* dxp = dx.data() + ((n * C + c) * h) * w;
      for (int64_t i = 0; i < h * w; ++i) dxp[i] = g;
    }
  return dx;
}

// -------------------------------------------------------------- ConvLSTM

ConvLSTM::ConvLSTM(int in_ch_, int out_ch_, int stride_, int ksize)
    : in_ch(in_ch_),
      out_ch(out_ch_),
      stride(stride_),
      conv_x(in_ch_, 4 * out_ch_, ksize, stride_, /*bias=*/true),
      conv_h(out_ch_, 4 * out_ch_, ksize, 1, /*bias=*/false) {}

void ConvLSTM::init(Rng& rng) {
  conv_x.init(rng);
  conv_h.init(rng);
}

std::vector<Tensor> ConvLSTM::forward(const std::vector<Tensor>& xs,
                                      Trace* trace) const {
  if (xs.empty()) throw std::invalid_argument("convlstm: empty sequence");
  const int64_t N = xs[0].dim(0);
  const int64_t Ho = conv_x.out_h(xs[0].dim(2));
  const int64_t Wo = conv_x.out_h(xs[0].dim(3));
  const int64_t plane = Ho * Wo;

  Tensor h({N, out_ch, Ho, Wo}), c({N, out_ch, Ho, Wo});
  std::vector<Tensor> hs;
  hs.reserve(xs.size());
  if (trace) *trace = Trace{};

  for (size_t t = 0; t < xs.size(); ++t) {
    Tensor z = conv_x.forward(xs[t]);
    if (t > 0) {
      const Tensor zh = conv_h.forward(h);
      for (int64_t i = 0; i < z.size(); ++i) z[i] += zh[i];
    }
    Tensor gi({N, out_ch, Ho, Wo}), gf({N, out_ch, Ho, Wo});
    Tensor gg({N, out_ch, Ho, Wo}), go({N, out_ch, Ho, Wo});
    Tensor c_new({N, out_ch, Ho, Wo}), tanh_c({N, out_ch, Ho, Wo});
    Tensor h_new({N, out_ch, Ho, Wo});
    for (int64_t n = 0; n < N; ++n) {
      for (int64_t ch = 0; ch < out_ch; ++ch) {
        const int64_t base = ((n * 4 * out_ch) * plane);
        const double* zi = z.data() + base + (0 * out_ch + ch) * plane;
        const double* zf = z.data() + base + (1 * out_ch + ch) * plane;
        const double* zg = z.data() + base + (2 * out_ch + ch) * plane;
        const double* zo = z.data() + base + (3 * out_ch + ch) * plane;
        const int64_t off = ((n * out_ch + ch) * plane);
        const double* cp = c.data() + off;
        for (int64_t i = 0; i < plane; ++i) {
          const double iv = sigmoid(zi[i]);
          const double fv = sigmoid(zf[i]);
          const double gv = std::tanh(zg[i]);
          const double ov = sigmoid(zo[i]);
          const double cv = fv * cp[i] + iv * gv;
          const double tc = std::tanh(cv);
          gi.data()[off + i] = iv;
          gf.data()[off + i] = fv;
          gg.data()[off + i] = gv;
          go.data()[off + i] = ov;
          c_new.data()[off + i] = cv;
          tanh_c.data()[off + i] = tc;
          h_new.data()[off + i] = ov * tc;
        }
      }
    }
    c = c_new;
    h = h_new;
    hs.push_back(h);
    if (trace) {
      trace->x.push_back(xs[t]);
      trace->gi.push_back(std::move(gi));
      trace->gf.push_back(std::move(gf));
      trace->gg.push_back(std::move(gg));
      trace->go.push_back(std::move(go));
      trace->c.push_back(c_new);
      trace->h.push_back(h);
      trace->tanh_c.push_back(std::move(tanh_c));
    }
  }
  return hs;
}

std::vector<Tensor> ConvLSTM::backward(const Trace& trace,
                                       const std::vector<Tensor>& dh_out) {
  const size_t T = trace.x.size();
  if (dh_out.size() != T)
    throw std::invalid_argument("convlstm backward: per-step gradient count mismatch");
  const Tensor& h0 = trace.h[0];
  const int64_t N = h0.dim(0), Ho = h0.dim(2), Wo = h0.dim(3);
  const int64_t plane = Ho * Wo;

  std::vector<Tensor> dxs(T);
  Tensor dh_rec, dc({N, out_ch, Ho, Wo});
  for (size_t ti = T; ti-- > 0;) {
    // total gradient into h_t: from this step's consumer plus recurrence
    Tensor dh = dh_out[ti].empty() ? Tensor({N, out_ch, Ho, Wo}) : dh_out[ti];
    if (!dh_rec.empty())
      for (int64_t i = 0; i < dh.size(); ++i) dh[i] += dh_rec[i];

    Tensor dz({N, 4 * out_ch, Ho, Wo});
    Tensor dc_prev({N, out_ch, Ho, Wo});
    for (int64_t n = 0; n < N; ++n) {
      for (int64_t ch = 0; ch < out_ch; ++ch) {
        const int64_t off = ((n * out_ch + ch) * plane);
        const int64_t zbase = ((n * 4 * out_ch) * plane);
        double* dzi = dz.data() + zbase + (0 * out_ch + ch) * plane;
        double* dzf = dz.data() + zbase + (1 * out_ch + ch) * plane;
        double* dzg = dz.data() + zbase + (2 * out_ch + ch) * plane;
        double* dzo = dz.data() + zbase + (3 * out_ch + ch) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          const double iv = trace.gi[ti].data()[off + i];
          const double fv = trace.gf[ti].data()[off + i];
          const double gv = trace.gg[ti].data()[off + i];
          const double ov = trace.go[ti].data()[off + i];
          const double tc = trace.tanh_c[ti].data()[off + i];
          const double cprev =
              ti > 0 ? trace.c[ti - 1].data()[off + i] : 0.0;
          const double dhv = dh.data()[off + i];
          const double dov = dhv * tc;
          double dcv = dc.data()[off + i] + dhv * ov * (1.0 - tc * tc);
          const double div = dcv * gv;
          const double dfv = dcv * cprev;
          const double dgv = dcv * iv;
          dzi[i] = div * iv * (1.0 - iv);
          dzf[i] = dfv * fv * (1.0 - fv);
          dzg[i] = dgv * (1.0 - gv * gv);
          dzo[i] = dov * ov * (1.0 - ov);
          dc_prev.data()[off + i] = dcv * fv;
        }
      }
    }
    dxs[ti] = conv_x.backward(trace.x[ti], dz);
    if (ti > 0)
      dh_rec = conv_h.backward(trace.h[ti - 1], dz);
    else
      dh_rec = Tensor();
    dc = std::move(dc_prev);
  }
  return dxs;
}

void ConvLSTM::collect_params(const std::string& prefix,
                              std::vector<ParamRef>& out) {
  conv_x.collect_params(prefix + ".x", out);
  conv_h.collect_params(prefix + ".h", out);
}

}  // namespace pairfeat
