#pragma once

#include <string>
#include <vector>

#include "pairfeat/rng.hpp"
#include "pairfeat/tensor.hpp"

namespace pairfeat {

/// Named handle onto one parameter tensor and its gradient accumulator.
struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

/// 2D convolution, square kernel, zero padding. Weights (Co, Ci, k, k).
struct Conv2d {
  int in_ch = 0, out_ch = 0, ksize = 3, stride = 1, pad = 1;
  bool has_bias = true;
  Tensor w, b, gw, gb;

  Conv2d() = default;
  Conv2d(int in_ch, int out_ch, int ksize, int stride, bool bias = true);

  void init(Rng& rng);  // uniform fan-in scaling
  int64_t out_h(int64_t h) const { return (h + 2 * pad - ksize) / stride + 1; }

  Tensor forward(const Tensor& x) const;
  /// Accumulates gw/gb and returns d(loss)/dx.
  Tensor backward(const Tensor& x, const Tensor& dy);
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out);
};

/// Batch normalization over (N, H, W) per channel.
struct BatchNorm2d {
  int ch = 0;
  double eps = 1e-5;
  double momentum = 0.1;
  Tensor gamma, beta, ggamma, gbeta;
  Tensor running_mean, running_var;

  struct Trace {
    Tensor xhat;
    std::vector<double> invstd;
  };

  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels);

  /// Batch statistics; updates the running averages.
  Tensor forward_train(const Tensor& x, Trace* trace);
  /// Running statistics; never mutates.
  Tensor forward_eval(const Tensor& x) const;
  Tensor backward(const Trace& trace, const Tensor& dy);
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out);
};

Tensor relu(const Tensor& x);
/// dx = dy gated by y > 0 (y is the forward output).
Tensor relu_backward(const Tensor& y, const Tensor& dy);

Tensor upsample_nearest(const Tensor& x, int factor);
Tensor upsample_nearest_backward(const Tensor& dy, int factor);

/// Per-channel spatial mean: (N, C, H, W) -> (N, C).
Tensor mean_pool_spatial(const Tensor& x);
Tensor mean_pool_spatial_backward(const Tensor& dv, int64_t h, int64_t w);

/// Convolutional LSTM cell unrolled over a short sequence. The input-to-gate
/// convolution carries the spatial stride (downsampling happens inside the
/// recurrence); the hidden-to-gate convolution is stride 1 at the reduced
/// resolution. Gate blocks are ordered (input, forget, cell, output) along
/// the channel axis of the fused convolutions.
struct ConvLSTM {
  int in_ch = 0, out_ch = 0, stride = 1;
  Conv2d conv_x;  // in_ch -> 4*out_ch, stride, with bias
  Conv2d conv_h;  // out_ch -> 4*out_ch, stride 1, no bias

  struct Trace {
    std::vector<Tensor> x;       // inputs per step
    std::vector<Tensor> gi, gf, gg, go;  // post-activation gates
    std::vector<Tensor> c, h, tanh_c;
  };

  ConvLSTM() = default;
  ConvLSTM(int in_ch, int out_ch, int stride, int ksize = 3);

  void init(Rng& rng);

  /// Zero initial state. Returns the hidden state per step.
  std::vector<Tensor> forward(const std::vector<Tensor>& xs,
                              Trace* trace = nullptr) const;
  /// dh_out[t] may be empty (no gradient from that step). Returns dxs.
  std::vector<Tensor> backward(const Trace& trace,
                               const std::vector<Tensor>& dh_out);
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out);
};

}  // namespace pairfeat
