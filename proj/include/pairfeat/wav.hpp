#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pairfeat::wav {

enum class SampleFormat { pcm8, pcm16, pcm24, float32 };

struct WavData {
  std::vector<std::vector<double>> channels;  // per-channel samples in [-1,1]
  int sample_rate = 0;
};

/// Reads a RIFF/WAVE file. Supports 8/16/24-bit integer PCM and 32-bit float,
/// any channel count. Throws std::runtime_error on malformed or unsupported
/// input and on zero-length audio.
WavData read_wav(const std::string& path);

/// Writes mono or multi-channel audio. Values are clamped to [-1,1] before
/// quantization.
void write_wav(const std::string& path,
               const std::vector<std::vector<double>>& channels,
               int sample_rate, SampleFormat format = SampleFormat::pcm16);

inline void write_wav_mono(const std::string& path,
                           const std::vector<double>& samples, int sample_rate,
                           SampleFormat format = SampleFormat::pcm16) {
  write_wav(path, {samples}, sample_rate, format);
}

}  // namespace pairfeat::wav
