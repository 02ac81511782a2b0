#include "pairfeat/model.hpp"

#include <cstring>
#include <stdexcept>

#include "pairfeat/pair_loss.hpp"

namespace pairfeat {

namespace {

Tensor stack_steps(const std::vector<Tensor>& steps) {
  const int64_t T = static_cast<int64_t>(steps.size());
  const int64_t N = steps[0].dim(0), C = steps[0].dim(1);
  const int64_t H = steps[0].dim(2), W = steps[0].dim(3);
  Tensor out({T * N, C, H, W});
  const int64_t chunk = C * H * W;
  for (int64_t t = 0; t < T; ++t)
    std::memcpy(out.data() + t * N * chunk, steps[static_cast<size_t>(t)].data(),
                static_cast<size_t>(N * chunk) * sizeof(double));
  return out;
}

std::vector<Tensor> unstack_steps(const Tensor& stacked, int64_t T) {
  const int64_t NT = stacked.dim(0), C = stacked.dim(1);
  const int64_t H = stacked.dim(2), W = stacked.dim(3);
  const int64_t N = NT / T;
  const int64_t chunk = C * H * W;
  std::vector<Tensor> steps;
  steps.reserve(static_cast<size_t>(T));
  for (int64_t t = 0; t < T; ++t) {
    Tensor s({N, C, H, W});
    std::memcpy(s.data(), stacked.data() + t * N * chunk,
                static_cast<size_t>(N * chunk) * sizeof(double));
    steps.push_back(std::move(s));
  }
  return steps;
}

}  // namespace

ModelConfig ModelConfig::resolved() const {
  ModelConfig c = *this;
  if (c.code_channels < 2)
    throw std::invalid_argument("model: code_channels must be >= 2");
  if (c.encoder.empty())
    c.encoder = {{32, 2}, {64, 2}, {c.code_channels, 2}};
  if (c.decoder.empty()) c.decoder = {{64, 2}, {32, 2}, {32, 2}};
  if (c.encoder.back().channels != c.code_channels)
    throw std::invalid_argument(
        "model: last encoder stage has " +
        std::to_string(c.encoder.back().channels) +
        " channels but code_channels is " + std::to_string(c.code_channels));
  int64_t down = 1, up = 1;
  for (const auto& s : c.encoder) {
    if (s.channels < 1 || s.scale < 1)
      throw std::invalid_argument("model: bad encoder stage spec");
    down *= s.scale;
  }
  for (const auto& s : c.decoder) {
    if (s.channels < 1 || s.scale < 1)
      throw std::invalid_argument("model: bad decoder stage spec");
    up *= s.scale;
  }
  if (down != up)
    throw std::invalid_argument(
        "model: decoder upsampling (" + std::to_string(up) +
        "x) must mirror encoder downsampling (" + std::to_string(down) + "x)");
  if (c.input_time % down != 0 || c.input_mel % down != 0)
    throw std::invalid_argument(
        "model: input grid " + std::to_string(c.input_time) + "x" +
        std::to_string(c.input_mel) + " is not divisible by the total downsampling " +
        std::to_string(down) + "x");
  if (c.kernel_size < 1 || c.kernel_size % 2 == 0)
    throw std::invalid_argument("model: kernel_size must be odd");
  return c;
}

FramePredictor::FramePredictor(const ModelConfig& config)
    : cfg_(config.resolved()) {
  Rng rng(mix_seed(cfg_.init_seed, 0x6d6f64656cULL));
  int in_ch = 1;
  int64_t h = cfg_.input_time, w = cfg_.input_mel;
  for (size_t i = 0; i < cfg_.encoder.size(); ++i) {
    const auto& spec = cfg_.encoder[i];
    EncoderStage st;
    st.cell = ConvLSTM(in_ch, spec.channels, spec.scale, cfg_.kernel_size);
    st.cell.init(rng);
    st.bn = BatchNorm2d(spec.channels);
    st.last = (i + 1 == cfg_.encoder.size());
    enc_.push_back(std::move(st));
    in_ch = spec.channels;
    h /= spec.scale;
    w /= spec.scale;
  }
  code_h_ = h;
  code_w_ = w;
  for (const auto& spec : cfg_.decoder) {
    DecoderStage st;
    st.scale = spec.scale;
    st.recurrent = cfg_.decoder_recurrent;
    if (st.recurrent) {
      st.cell = ConvLSTM(in_ch, spec.channels, 1, cfg_.kernel_size);
      st.cell.init(rng);
    } else {
      st.conv = Conv2d(in_ch, spec.channels, cfg_.kernel_size, 1);
      st.conv.init(rng);
    }
    st.bn = BatchNorm2d(spec.channels);
    dec_.push_back(std::move(st));
    in_ch = spec.channels;
  }
  head_ = Conv2d(in_ch, 1, cfg_.kernel_size, 1);
  head_.init(rng);
}

Tensor FramePredictor::normalize_input(const Tensor& sequence) const {
  Tensor seq = sequence;
  if (seq.ndim() == 3) {
    Tensor batched({1, seq.dim(0), seq.dim(1), seq.dim(2)});
    std::memcpy(batched.data(), seq.data(),
                static_cast<size_t>(seq.size()) * sizeof(double));
    seq = std::move(batched);
  }
  if (seq.ndim() != 4 || seq.dim(1) != 3 || seq.dim(2) != cfg_.input_time ||
      seq.dim(3) != cfg_.input_mel)
    throw std::invalid_argument(
        "model: expected input (N, 3, " + std::to_string(cfg_.input_time) +
        ", " + std::to_string(cfg_.input_mel) + "), got " + sequence.shape_str());
  return seq;
}

std::vector<Tensor> FramePredictor::split_steps(const Tensor& seq) const {
  const int64_t N = seq.dim(0), T = seq.dim(1);
  const int64_t H = seq.dim(2), W = seq.dim(3);
  std::vector<Tensor> steps;
  steps.reserve(static_cast<size_t>(T));
  for (int64_t t = 0; t < T; ++t) {
    Tensor s({N, 1, H, W});
    for (int64_t n = 0; n < N; ++n)
      std::memcpy(s.data() + n * H * W, seq.data() + (n * T + t) * H * W,
                  static_cast<size_t>(H * W) * sizeof(double));
    steps.push_back(std::move(s));
  }
  return steps;
}

Tensor FramePredictor::encode(const Tensor& sequence) const {
  std::vector<Tensor> xs = split_steps(normalize_input(sequence));
  for (const auto& st : enc_) {
    std::vector<Tensor> hs = st.cell.forward(xs);
    if (st.last) {
      return st.bn.forward_eval(relu(hs.back()));
    }
    for (auto& hstep : hs) hstep = st.bn.forward_eval(relu(hstep));
    xs = std::move(hs);
  }
  throw std::logic_error("model: empty encoder");
}

Tensor FramePredictor::predict_next_frame(const Tensor& sequence) const {
  return forward(sequence).prediction;
}

FramePredictor::Output FramePredictor::forward(const Tensor& sequence) const {
  Output out;
  out.code = encode(sequence);
  const int64_t N = out.code.dim(0);

  Tensor u = out.code;
  for (const auto& st : dec_) {
    u = upsample_nearest(u, st.scale);
    Tensor hid = st.recurrent ? st.cell.forward({u}).front() : st.conv.forward(u);
    u = st.bn.forward_eval(relu(hid));
  }
  Tensor pred4 = head_.forward(u);
  out.prediction = Tensor({N, pred4.dim(2), pred4.dim(3)});
  std::memcpy(out.prediction.data(), pred4.data(),
              static_cast<size_t>(pred4.size()) * sizeof(double));

  out.feature_vector = mean_pool_spatial(out.code);
  out.distribution = softmax_rows(out.feature_vector);
  return out;
}

FramePredictor::Output FramePredictor::forward_train(const Tensor& sequence,
                                                     Workspace& ws) {
  ws = Workspace{};
  std::vector<Tensor> xs = split_steps(normalize_input(sequence));
  ws.batch = xs[0].dim(0);
  const int64_t T = static_cast<int64_t>(xs.size());

  ws.enc_cell.resize(enc_.size());
  ws.enc_relu.resize(enc_.size());
  ws.enc_bn.resize(enc_.size());
  for (size_t i = 0; i < enc_.size(); ++i) {
    auto& st = enc_[i];
    std::vector<Tensor> hs = st.cell.forward(xs, &ws.enc_cell[i]);
    std::vector<Tensor> sel =
        st.last ? std::vector<Tensor>{hs.back()} : std::move(hs);
    Tensor r = relu(stack_steps(sel));
    ws.enc_relu[i] = r;
    Tensor y = st.bn.forward_train(r, &ws.enc_bn[i]);
    xs = unstack_steps(y, static_cast<int64_t>(sel.size()));
  }
  Output out;
  ws.code = xs.front();  // final stage emitted exactly one step
  out.code = ws.code;

  Tensor u = ws.code;
  ws.dec_cell.resize(dec_.size());
  ws.dec_conv_in.resize(dec_.size());
  ws.dec_relu.resize(dec_.size());
  ws.dec_bn.resize(dec_.size());
  for (size_t i = 0; i < dec_.size(); ++i) {
    auto& st = dec_[i];
    u = upsample_nearest(u, st.scale);
    Tensor hid;
    if (st.recurrent) {
      hid = st.cell.forward({u}, &ws.dec_cell[i]).front();
    } else {
      ws.dec_conv_in[i] = u;
      hid = st.conv.forward(u);
    }
    Tensor r = relu(hid);
    ws.dec_relu[i] = r;
    u = st.bn.forward_train(r, &ws.dec_bn[i]);
  }
  ws.head_in = u;
  Tensor pred4 = head_.forward(u);
  out.prediction = Tensor({ws.batch, pred4.dim(2), pred4.dim(3)});
  std::memcpy(out.prediction.data(), pred4.data(),
              static_cast<size_t>(pred4.size()) * sizeof(double));

  out.feature_vector = mean_pool_spatial(ws.code);
  out.distribution = softmax_rows(out.feature_vector);
  return out;
}

void FramePredictor::backward(Workspace& ws, const Tensor& d_prediction,
                              const Tensor& d_feature_vector) {
  const int64_t N = ws.batch;

  // decoder head -> gradient w.r.t. the code
  Tensor dcode({N, cfg_.code_channels, code_h_, code_w_});
  if (!d_prediction.empty()) {
    Tensor dy({N, 1, d_prediction.dim(1), d_prediction.dim(2)});
    std::memcpy(dy.data(), d_prediction.data(),
                static_cast<size_t>(d_prediction.size()) * sizeof(double));
    Tensor du = head_.backward(ws.head_in, dy);
    for (size_t ii = dec_.size(); ii-- > 0;) {
      auto& st = dec_[ii];
      Tensor dr = st.bn.backward(ws.dec_bn[ii], du);
      Tensor dhid = relu_backward(ws.dec_relu[ii], dr);
      Tensor dup;
      if (st.recurrent)
        dup = st.cell.backward(ws.dec_cell[ii], {dhid}).front();
      else
        dup = st.conv.backward(ws.dec_conv_in[ii], dhid);
      du = upsample_nearest_backward(dup, st.scale);
    }
    for (int64_t i = 0; i < dcode.size(); ++i) dcode[i] += du[i];
  }

  // pooled feature head -> gradient w.r.t. the code
  if (!d_feature_vector.empty()) {
    Tensor dpool = mean_pool_spatial_backward(d_feature_vector, code_h_, code_w_);
    for (int64_t i = 0; i < dcode.size(); ++i) dcode[i] += dpool[i];
  }

  // encoder, last stage first
  std::vector<Tensor> dxs = {dcode};
  for (size_t ii = enc_.size(); ii-- > 0;) {
    auto& st = enc_[ii];
    const int64_t steps_out = static_cast<int64_t>(dxs.size());
    Tensor dy = stack_steps(dxs);
    Tensor dr = st.bn.backward(ws.enc_bn[ii], dy);
    Tensor dsel_stacked = relu_backward(ws.enc_relu[ii], dr);
    std::vector<Tensor> dsel = unstack_steps(dsel_stacked, steps_out);

    const size_t T = ws.enc_cell[ii].x.size();
    std::vector<Tensor> dh_out(T);
    if (st.last) {
      dh_out[T - 1] = std::move(dsel.front());
    } else {
      for (size_t t = 0; t < T; ++t) dh_out[t] = std::move(dsel[t]);
    }
    dxs = st.cell.backward(ws.enc_cell[ii], dh_out);
  }
}

void FramePredictor::zero_grads() {
  for (auto& p : parameters()) p.grad->zero();
}

std::vector<ParamRef> FramePredictor::parameters() {
  std::vector<ParamRef> out;
  for (size_t i = 0; i < enc_.size(); ++i) {
    const std::string p = "enc" + std::to_string(i);
    enc_[i].cell.collect_params(p + ".cell", out);
    enc_[i].bn.collect_params(p + ".bn", out);
  }
  for (size_t i = 0; i < dec_.size(); ++i) {
    const std::string p = "dec" + std::to_string(i);
    if (dec_[i].recurrent)
      dec_[i].cell.collect_params(p + ".cell", out);
    else
      dec_[i].conv.collect_params(p + ".conv", out);
    dec_[i].bn.collect_params(p + ".bn", out);
  }
  head_.collect_params("head", out);
  return out;
}

std::vector<ParamRef> FramePredictor::buffers() {
  std::vector<ParamRef> out;
  for (size_t i = 0; i < enc_.size(); ++i) {
    const std::string p = "enc" + std::to_string(i) + ".bn";
    out.push_back({p + ".running_mean", &enc_[i].bn.running_mean, nullptr});
    out.push_back({p + ".running_var", &enc_[i].bn.running_var, nullptr});
  }
  for (size_t i = 0; i < dec_.size(); ++i) {
    const std::string p = "dec" + std::to_string(i) + ".bn";
    out.push_back({p + ".running_mean", &dec_[i].bn.running_mean, nullptr});
    out.push_back({p + ".running_var", &dec_[i].bn.running_var, nullptr});
  }
  return out;
}

std::vector<ParamRef> FramePredictor::encoder_parameters() {
  std::vector<ParamRef> out;
  for (size_t i = 0; i < enc_.size(); ++i) {
    const std::string p = "enc" + std::to_string(i);
    enc_[i].cell.collect_params(p + ".cell", out);
    enc_[i].bn.collect_params(p + ".bn", out);
  }
  return out;
}

uint64_t parameter_checksum(const std::vector<ParamRef>& params) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params) {
    for (char ch : p.name) h = (h ^ static_cast<uint8_t>(ch)) * 0x100000001b3ULL;
    const auto* bytes = reinterpret_cast<const uint8_t*>(p.value->data());
    const size_t n = static_cast<size_t>(p.value->size()) * sizeof(double);
    for (size_t i = 0; i < n; ++i) h = (h ^ bytes[i]) * 0x100000001b3ULL;
  }
  return h;
}

}  // namespace pairfeat
