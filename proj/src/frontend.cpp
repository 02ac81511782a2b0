#include "pairfeat/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pairfeat/kernels.hpp"
#include "pairfeat/wav.hpp"

namespace pairfeat {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Triangular filterbank rows over nfft/2+1 power-spectrum bins.
struct MelBank {
  std::vector<std::vector<double>> weights;  // mel_bins x (nfft/2+1)
  std::vector<double> centers_hz;
};

MelBank build_mel_bank(const FrontendConfig& cfg, int nfft) {
  const int bins = nfft / 2 + 1;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(cfg.sample_rate / 2.0);
  std::vector<double> edges_hz(cfg.mel_bins + 2);
  for (int i = 0; i < cfg.mel_bins + 2; ++i)
    edges_hz[i] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.mel_bins + 1));

  MelBank bank;
  bank.weights.assign(cfg.mel_bins, std::vector<double>(bins, 0.0));
  bank.centers_hz.assign(edges_hz.begin() + 1, edges_hz.end() - 1);
  for (int m = 0; m < cfg.mel_bins; ++m) {
    const double f0 = edges_hz[m], f1 = edges_hz[m + 1], f2 = edges_hz[m + 2];
    for (int b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * cfg.sample_rate / nfft;
      double w = 0.0;
      if (f > f0 && f < f1)
        w = (f - f0) / (f1 - f0);
      else if (f >= f1 && f < f2)
        w = (f2 - f) / (f2 - f1);
      bank.weights[m][b] = w;
    }
  }
  return bank;
}

}  // namespace

void FrontendConfig::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("frontend: sample_rate must be > 0");
  if (frame_seconds <= 0) throw std::invalid_argument("frontend: frame_seconds must be > 0");
  if (hop_fraction <= 0.0 || hop_fraction > 1.0)
    throw std::invalid_argument("frontend: hop_fraction must be in (0, 1]");
  if (stft_window <= 0 || stft_hop <= 0 || stft_hop > stft_window)
    throw std::invalid_argument("frontend: need 0 < stft_hop <= stft_window");
  if (mel_bins < 1) throw std::invalid_argument("frontend: mel_bins must be >= 1");
  if (log_floor <= 0) throw std::invalid_argument("frontend: log_floor must be > 0");
}

std::vector<double> resample(const std::vector<double>& x, int in_rate,
                             int out_rate) {
  if (in_rate == out_rate) return x;
  const double ratio = static_cast<double>(out_rate) / in_rate;
  const size_t n_out = static_cast<size_t>(
      std::llround(static_cast<double>(x.size()) * ratio));
  std::vector<double> y(n_out, 0.0);
  // cutoff at the lower of the two Nyquist rates
  const double scale = std::min(1.0, ratio);
  const int taps = 24;  // per side, in output-domain units / scale
  for (size_t i = 0; i < n_out; ++i) {
    const double center = static_cast<double>(i) / ratio;
    const int lo = static_cast<int>(std::floor(center)) - static_cast<int>(taps / scale);
    const int hi = static_cast<int>(std::ceil(center)) + static_cast<int>(taps / scale);
    double acc = 0.0;
    for (int j = std::max(0, lo); j <= std::min<int>(static_cast<int>(x.size()) - 1, hi); ++j) {
      const double t = (static_cast<double>(j) - center) * scale;
      double w;
      if (t == 0.0) {
        w = 1.0;
      } else {
        const double pt = M_PI * t;
        w = std::sin(pt) / pt;
      }
      // Hann taper over the tap span
      const double u = t / taps;
      if (u <= -1.0 || u >= 1.0) continue;
      w *= 0.5 * (1.0 + std::cos(M_PI * u));
      acc += x[static_cast<size_t>(j)] * w;
    }
    y[i] = acc * scale;
  }
  return y;
}

WaveformClip load_waveform(const std::string& path,
                           const FrontendConfig& config) {
  config.validate();
  const wav::WavData raw = wav::read_wav(path);
  const size_t n = raw.channels[0].size();
  std::vector<double> mono(n, 0.0);
  for (const auto& ch : raw.channels)
    for (size_t i = 0; i < n; ++i) mono[i] += ch[i];
  const double inv = 1.0 / static_cast<double>(raw.channels.size());
  for (double& v : mono) v *= inv;

  WaveformClip clip;
  clip.samples = resample(mono, raw.sample_rate, config.sample_rate);
  clip.sample_rate = config.sample_rate;
  clip.source_id = path;
  if (clip.samples.empty())
    throw std::runtime_error("frontend: zero-length audio after resampling: " + path);
  for (double& v : clip.samples) v = std::clamp(v, -1.0, 1.0);
  return clip;
}

MelFrame mel_spectrogram(const std::vector<double>& segment,
                         const FrontendConfig& config) {
  config.validate();
  const int frame_samples = config.frame_samples();
  if (static_cast<int>(segment.size()) != frame_samples)
    throw std::invalid_argument(
        "mel_spectrogram: segment length " + std::to_string(segment.size()) +
        " != frame length " + std::to_string(frame_samples));

  const int win = config.stft_window;
  const int hop = config.stft_hop;
  const int nfft = next_pow2(win);
  const int bins = nfft / 2 + 1;
  const int cols = config.time_steps();
  const int pad = win / 2;

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / win);

  static thread_local std::vector<double> re, im, power;
  re.assign(static_cast<size_t>(nfft), 0.0);
  im.assign(static_cast<size_t>(nfft), 0.0);
  power.assign(static_cast<size_t>(bins), 0.0);

  const MelBank bank = build_mel_bank(config, nfft);

  MelFrame out;
  out.values = Tensor({cols, config.mel_bins});
  for (int t = 0; t < cols; ++t) {
    // window centered at t*hop: covers original samples [t*hop-pad, t*hop+pad)
    const int start = t * hop - pad;
    for (int i = 0; i < win; ++i) {
      const int s = start + i;
      re[static_cast<size_t>(i)] =
          (s >= 0 && s < frame_samples) ? segment[static_cast<size_t>(s)] * window[i] : 0.0;
    }
    std::fill(re.begin() + win, re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    kernels::fft_radix2(re.data(), im.data(), nfft);
    for (int b = 0; b < bins; ++b) power[b] = re[b] * re[b] + im[b] * im[b];
    for (int m = 0; m < config.mel_bins; ++m) {
      double acc = 0.0;
      const auto& w = bank.weights[static_cast<size_t>(m)];
      for (int b = 0; b < bins; ++b) acc += w[b] * power[b];
      out.values.at(t, m) = std::log(std::max(acc, config.log_floor));
    }
  }
  return out;
}

std::vector<MelFrame> extract_frames(const WaveformClip& clip,
                                     const FrontendConfig& config) {
  config.validate();
  const int64_t frame_samples = config.frame_samples();
  const int64_t hop = config.hop_samples();
  const int64_t len = static_cast<int64_t>(clip.samples.size());
  if (len < frame_samples)
    throw std::invalid_argument(
        "extract_frames: clip of " + std::to_string(len) +
        " samples is shorter than one frame (" + std::to_string(frame_samples) + ")");

  const int64_t count = (len - frame_samples) / hop + 1;
  std::vector<MelFrame> frames;
  frames.reserve(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    const int64_t start = i * hop;
    std::vector<double> segment(
        clip.samples.begin() + start,
        clip.samples.begin() + start + frame_samples);
    MelFrame f = mel_spectrogram(segment, config);
    f.start_time = static_cast<double>(start) / config.sample_rate;
    f.frame_index = static_cast<int>(i);
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<FrameSequence> build_sequences(
    const std::vector<MelFrame>& frames,
    const std::optional<std::string>& label, const std::string& source_id) {
  std::vector<FrameSequence> out;
  if (frames.size() < 4) return out;
  out.reserve(frames.size() - 3);
  for (size_t i = 0; i + 3 < frames.size(); ++i) {
    FrameSequence s;
    s.inputs = {frames[i], frames[i + 1], frames[i + 2]};
    s.target = frames[i + 3];
    s.label = label;
    s.source_id = source_id;
    out.push_back(std::move(s));
  }
  return out;
}

NormParams compute_norm_params(const std::vector<MelFrame>& frames) {
  if (frames.empty())
    throw std::invalid_argument("normalize: empty frame set");
  double sum = 0.0;
  int64_t count = 0;
  for (const auto& f : frames) {
    for (int64_t i = 0; i < f.values.size(); ++i) sum += f.values[i];
    count += f.values.size();
  }
  const double mean = sum / static_cast<double>(count);
  double var = 0.0;
  for (const auto& f : frames)
    for (int64_t i = 0; i < f.values.size(); ++i) {
      const double d = f.values[i] - mean;
      var += d * d;
    }
  var /= static_cast<double>(count);
  const double std = std::sqrt(var);
  if (std < 1e-12)
    throw std::runtime_error("normalize: degenerate dataset (std < 1e-12)");
  return {mean, std};
}

void apply_norm(MelFrame& frame, const NormParams& p) {
  for (int64_t i = 0; i < frame.values.size(); ++i)
    frame.values[i] = (frame.values[i] - p.mean) / p.std;
}

void apply_norm(std::vector<MelFrame>& frames, const NormParams& p) {
  for (auto& f : frames) apply_norm(f, p);
}

std::vector<double> mel_center_frequencies(const FrontendConfig& config) {
  config.validate();
  return build_mel_bank(config, next_pow2(config.stft_window)).centers_hz;
}

}  // namespace pairfeat
