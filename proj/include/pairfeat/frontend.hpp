#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pairfeat/tensor.hpp"

namespace pairfeat {

struct FrontendConfig {
  double frame_seconds = 2.56;
  double hop_fraction = 0.25;  // frame hop as a fraction of frame_seconds
  int sample_rate = 16000;
  int stft_window = 1024;
  int stft_hop = 512;
  int mel_bins = 64;
  double log_floor = 1e-10;

  int frame_samples() const {
    return static_cast<int>(std::lround(frame_seconds * sample_rate));
  }
  int hop_samples() const {
    return static_cast<int>(std::lround(frame_seconds * hop_fraction * sample_rate));
  }
  /// STFT columns per frame with centered windows at t*stft_hop.
  int time_steps() const {
    return static_cast<int>(
        (frame_samples() + static_cast<int64_t>(stft_hop) - 1) / stft_hop);
  }
  void validate() const;
};

struct WaveformClip {
  std::vector<double> samples;  // mono, [-1, 1]
  int sample_rate = 0;
  std::optional<std::string> label;
  std::string source_id;

  double seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// One log-mel frame: values laid out (time_steps, mel_bins) row-major.
struct MelFrame {
  Tensor values;
  double start_time = 0.0;
  int frame_index = 0;
};

/// Three consecutive input frames plus the frame the model must predict.
struct FrameSequence {
  std::vector<MelFrame> inputs;  // exactly 3
  MelFrame target;
  std::optional<std::string> label;
  std::string source_id;
};

struct NormParams {
  double mean = 0.0;
  double std = 1.0;
};

/// Loads a WAV file, averages channels to mono, resamples to
/// config.sample_rate (windowed-sinc) and scales to [-1, 1].
WaveformClip load_waveform(const std::string& path,
                           const FrontendConfig& config);

/// Windowed-sinc resampler. Output length = round(n * out_rate / in_rate).
std::vector<double> resample(const std::vector<double>& x, int in_rate,
                             int out_rate);

/// Log-mel transform of one frame-length segment. Hann window, centered STFT,
/// triangular mel filterbank (HTK scale, 0..sr/2) over the power spectrum,
/// then log(max(power, log_floor)).
MelFrame mel_spectrogram(const std::vector<double>& segment,
                         const FrontendConfig& config);

/// Slices a clip into hop-spaced frame segments and mel-transforms each.
/// Throws if the clip is shorter than one frame.
std::vector<MelFrame> extract_frames(const WaveformClip& clip,
                                     const FrontendConfig& config);

/// Sliding windows of 4 consecutive frames: 3 inputs + 1 target. Returns an
/// empty list for fewer than 4 frames.
std::vector<FrameSequence> build_sequences(
    const std::vector<MelFrame>& frames,
    const std::optional<std::string>& label = std::nullopt,
    const std::string& source_id = "");

/// Global scalar mean/std over the given frames. Throws on empty input and on
/// std below 1e-12 ("degenerate dataset").
NormParams compute_norm_params(const std::vector<MelFrame>& frames);

/// (x - mean) / std, in place.
void apply_norm(std::vector<MelFrame>& frames, const NormParams& p);
void apply_norm(MelFrame& frame, const NormParams& p);

/// Center frequencies (Hz) of the mel filterbank under `config`; used by the
/// reporting code and exposed for tests.
std::vector<double> mel_center_frequencies(const FrontendConfig& config);

}  // namespace pairfeat
