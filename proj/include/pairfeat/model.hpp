#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairfeat/layers.hpp"
#include "pairfeat/tensor.hpp"

namespace pairfeat {

/// One recurrent stage: channel count and spatial scale factor (downsampling
/// stride for encoder stages, upsampling factor for decoder stages).
struct StageSpec {
  int channels = 0;
  int scale = 2;
  bool operator==(const StageSpec&) const = default;
};

struct ModelConfig {
  int code_channels = 128;
  /// Empty means the default stack; the last encoder entry must match
  /// code_channels when given explicitly.
  std::vector<StageSpec> encoder;
  std::vector<StageSpec> decoder;
  int input_time = 80;  // frame grid fed to the model
  int input_mel = 64;
  int kernel_size = 3;
  /// Recurrent decoder stages (gated cells run for one step) when true,
  /// plain convolutional stages when false.
  bool decoder_recurrent = true;
  uint64_t init_seed = 1;

  /// Fills in default stacks and checks consistency; throws on bad configs.
  ModelConfig resolved() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Next-frame predictor: recurrent convolutional encoder consuming 3 frames,
/// a bottleneck code, and two heads sharing that code — a mirrored decoder
/// predicting the following frame and a pooled softmax feature distribution.
class FramePredictor {
 public:
  explicit FramePredictor(const ModelConfig& config);

  const ModelConfig& config() const { return cfg_; }
  int64_t code_time() const { return code_h_; }
  int64_t code_mel() const { return code_w_; }

  struct Output {
    Tensor prediction;      // (N, H, W)
    Tensor feature_vector;  // (N, K), pre-softmax per-channel code means
    Tensor distribution;    // (N, K), softmax rows
    Tensor code;            // (N, K, h', w')
  };

  /// Inference-mode encoder pass: (N, 3, H, W) or (3, H, W) -> code.
  Tensor encode(const Tensor& sequence) const;
  /// Inference-mode decoder head only.
  Tensor predict_next_frame(const Tensor& sequence) const;
  /// Both heads from one shared encoder pass, inference mode.
  Output forward(const Tensor& sequence) const;

  /// Captured activations of one training forward pass.
  struct Workspace;

  /// Training-mode forward (batch-stat normalization, running stats updated).
  Output forward_train(const Tensor& sequence, Workspace& ws);
  /// Accumulates parameter gradients for d(loss)/d(prediction) and
  /// d(loss)/d(feature_vector). Either may be empty (zero gradient).
  void backward(Workspace& ws, const Tensor& d_prediction,
                const Tensor& d_feature_vector);

  void zero_grads();
  std::vector<ParamRef> parameters();
  /// Non-trainable state (normalization running stats); serialized alongside
  /// the parameters.
  std::vector<ParamRef> buffers();
  /// Parameters of the encoder alone (frozen-encoder checks).
  std::vector<ParamRef> encoder_parameters();

 private:
  struct EncoderStage {
    ConvLSTM cell;
    BatchNorm2d bn;
    bool last = false;  // final stage emits only the last step
  };
  struct DecoderStage {
    int scale = 2;
    bool recurrent = true;
    ConvLSTM cell;   // used when recurrent
    Conv2d conv;     // used otherwise
    BatchNorm2d bn;
  };

  Tensor normalize_input(const Tensor& sequence) const;
  std::vector<Tensor> split_steps(const Tensor& sequence) const;

  ModelConfig cfg_;
  std::vector<EncoderStage> enc_;
  std::vector<DecoderStage> dec_;
  Conv2d head_;  // linear projection to one channel
  int64_t code_h_ = 0, code_w_ = 0;
};

struct FramePredictor::Workspace {
  std::vector<ConvLSTM::Trace> enc_cell;
  std::vector<Tensor> enc_relu;        // post-relu, steps stacked along batch
  std::vector<BatchNorm2d::Trace> enc_bn;
  std::vector<ConvLSTM::Trace> dec_cell;
  std::vector<Tensor> dec_conv_in;     // upsampled stage inputs (plain mode)
  std::vector<Tensor> dec_relu;
  std::vector<BatchNorm2d::Trace> dec_bn;
  Tensor head_in;
  Tensor code;
  int64_t batch = 0;
};

/// FNV-1a over the raw bytes of the referenced tensors; order-sensitive.
uint64_t parameter_checksum(const std::vector<ParamRef>& params);

}  // namespace pairfeat
