#include "pairfeat/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pairfeat::wav {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
  s.push_back(static_cast<char>((v >> 16) & 0xFF));
  s.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
}

double clamp1(double v) { return std::min(1.0, std::max(-1.0, v)); }

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("wav: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("wav: not a RIFF/WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  const uint8_t* data_ptr = nullptr;
  uint32_t data_len = 0;
  bool have_fmt = false;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t len = read_u32(bytes.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + len > bytes.size())
      throw std::runtime_error("wav: truncated chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw std::runtime_error("wav: bad fmt chunk in " + path);
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      sample_rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible && len >= 40)
        format = read_u16(bytes.data() + body + 24);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_ptr = bytes.data() + body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || !data_ptr)
    throw std::runtime_error("wav: missing fmt/data chunk in " + path);
  if (channels == 0 || sample_rate == 0)
    throw std::runtime_error("wav: bad header in " + path);

  const bool pcm = format == kFormatPcm;
  const bool flt = format == kFormatFloat;
  if (!(pcm && (bits == 8 || bits == 16 || bits == 24)) && !(flt && bits == 32))
    throw std::runtime_error("wav: unsupported encoding (format " +
                             std::to_string(format) + ", " +
                             std::to_string(bits) + " bit) in " + path);

  const uint32_t bytes_per_sample = bits / 8;
  const uint32_t frame_size = bytes_per_sample * channels;
  const uint32_t n_frames = data_len / frame_size;
  if (n_frames == 0) throw std::runtime_error("wav: zero-length audio: " + path);

  WavData out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.channels.assign(channels, std::vector<double>(n_frames));
  for (uint32_t f = 0; f < n_frames; ++f) {
    const uint8_t* fp = data_ptr + static_cast<size_t>(f) * frame_size;
    for (uint16_t c = 0; c < channels; ++c) {
      const uint8_t* sp = fp + c * bytes_per_sample;
      double v = 0.0;
      if (flt) {
        float x;
        std::memcpy(&x, sp, 4);
        v = static_cast<double>(x);
      } else if (bits == 16) {
        const int16_t x = static_cast<int16_t>(sp[0] | (sp[1] << 8));
        v = static_cast<double>(x) / 32768.0;
      } else if (bits == 24) {
        int32_t x = static_cast<int32_t>(sp[0] | (sp[1] << 8) | (sp[2] << 16));
        if (x & 0x800000) x |= ~0xFFFFFF;  // sign-extend
        v = static_cast<double>(x) / 8388608.0;
      } else {  // 8-bit PCM is unsigned
        v = (static_cast<double>(sp[0]) - 128.0) / 128.0;
      }
      out.channels[c][f] = v;
    }
  }
  return out;
}

void write_wav(const std::string& path,
               const std::vector<std::vector<double>>& channels,
               int sample_rate, SampleFormat format) {
  if (channels.empty() || channels[0].empty())
    throw std::runtime_error("wav: refusing to write zero-length audio");
  const size_t n_frames = channels[0].size();
  for (const auto& ch : channels)
    if (ch.size() != n_frames)
      throw std::runtime_error("wav: channel length mismatch");

  uint16_t bits = 16, fmt = kFormatPcm;
  switch (format) {
    case SampleFormat::pcm8: bits = 8; break;
    case SampleFormat::pcm16: bits = 16; break;
    case SampleFormat::pcm24: bits = 24; break;
    case SampleFormat::float32: bits = 32; fmt = kFormatFloat; break;
  }
  const uint16_t nch = static_cast<uint16_t>(channels.size());
  const uint32_t bytes_per_sample = bits / 8;
  const uint32_t block_align = bytes_per_sample * nch;
  const uint32_t data_len = static_cast<uint32_t>(n_frames) * block_align;

  std::string s;
  s.reserve(44 + data_len);
  s += "RIFF";
  put_u32(s, 36 + data_len);
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, fmt);
  put_u16(s, nch);
  put_u32(s, static_cast<uint32_t>(sample_rate));
  put_u32(s, static_cast<uint32_t>(sample_rate) * block_align);
  put_u16(s, static_cast<uint16_t>(block_align));
  put_u16(s, bits);
  s += "data";
  put_u32(s, data_len);

  for (size_t f = 0; f < n_frames; ++f) {
    for (uint16_t c = 0; c < nch; ++c) {
      const double v = clamp1(channels[c][f]);
      switch (format) {
        case SampleFormat::pcm8: {
          const int x = static_cast<int>(std::lround(v * 127.0)) + 128;
          s.push_back(static_cast<char>(std::clamp(x, 0, 255)));
          break;
        }
        case SampleFormat::pcm16: {
          const long x = std::clamp(std::lround(v * 32767.0), -32768L, 32767L);
          put_u16(s, static_cast<uint16_t>(static_cast<int16_t>(x)));
          break;
        }
        case SampleFormat::pcm24: {
          const long x =
              std::clamp(std::lround(v * 8388607.0), -8388608L, 8388607L);
          const uint32_t u = static_cast<uint32_t>(x) & 0xFFFFFF;
          s.push_back(static_cast<char>(u & 0xFF));
          s.push_back(static_cast<char>((u >> 8) & 0xFF));
          s.push_back(static_cast<char>((u >> 16) & 0xFF));
          break;
        }
        case SampleFormat::float32: {
          const float x = static_cast<float>(v);
          char buf[4];
          std::memcpy(buf, &x, 4);
          s.append(buf, 4);
          break;
        }
      }
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("wav: cannot write " + path);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw std::runtime_error("wav: write failed for " + path);
}

}  // namespace pairfeat::wav
