#include "pairfeat/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "pairfeat/rng.hpp"

namespace fs = std::filesystem;

namespace pairfeat {

std::vector<ClipRef> scan_dataset(const std::string& root) {
  if (!fs::is_directory(root))
    throw std::runtime_error("dataset: not a directory: " + root);
  std::vector<ClipRef> out;
  std::vector<std::string> categories;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) categories.push_back(e.path().filename().string());
  std::sort(categories.begin(), categories.end());
  for (const auto& cat : categories) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(fs::path(root) / cat)) {
      if (!e.is_regular_file()) continue;
      if (e.path().extension() == ".wav") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      ClipRef ref;
      ref.path = f;
      ref.label = cat;
      ref.source_id = cat + "/" + fs::path(f).stem().string();
      out.push_back(std::move(ref));
    }
  }
  if (out.empty())
    throw std::runtime_error("dataset: no <category>/*.wav files under " + root);
  return out;
}

DatasetSplit split_clips(const std::vector<ClipRef>& clips,
                         double test_fraction, uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0)
    throw std::invalid_argument("split: test_fraction must be in [0, 1)");
  std::map<std::string, std::vector<ClipRef>> by_label;
  for (const auto& c : clips) by_label[c.label].push_back(c);

  DatasetSplit split;
  for (auto& [label, group] : by_label) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : label) h = (h ^ static_cast<uint8_t>(ch)) * 0x100000001b3ULL;
    Rng rng(mix_seed(seed, h));
    rng.shuffle(group);
    const size_t n_test = static_cast<size_t>(
        std::llround(static_cast<double>(group.size()) * test_fraction));
    for (size_t i = 0; i < group.size(); ++i)
      (i < n_test ? split.test : split.train).push_back(group[i]);
  }
  auto by_id = [](const ClipRef& a, const ClipRef& b) {
    return a.source_id < b.source_id;
  };
  std::sort(split.train.begin(), split.train.end(), by_id);
  std::sort(split.test.begin(), split.test.end(), by_id);
  return split;
}

std::vector<ClipFrames> extract_dataset_frames(const std::vector<ClipRef>& clips,
                                               const FrontendConfig& config) {
  std::vector<ClipFrames> out;
  out.reserve(clips.size());
  for (const auto& ref : clips) {
    WaveformClip clip = load_waveform(ref.path, config);
    clip.label = ref.label;
    clip.source_id = ref.source_id;
    ClipFrames cf;
    cf.frames = extract_frames(clip, config);
    cf.source_id = ref.source_id;
    cf.label = ref.label;
    out.push_back(std::move(cf));
  }
  return out;
}

namespace {
void put_u32_le(std::ofstream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF),
               static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}
uint32_t get_u32_le(std::ifstream& in) {
  uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("frame cache: truncated header");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}
}  // namespace

void write_frame_cache(const std::string& path,
                       const std::vector<ClipFrames>& clips,
                       const FrontendConfig& config) {
  uint32_t n_frames = 0;
  for (const auto& c : clips) n_frames += static_cast<uint32_t>(c.frames.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("frame cache: cannot write " + path);
  out.write("PFFR", 4);
  put_u32_le(out, 1);  // version
  put_u32_le(out, n_frames);
  put_u32_le(out, 0);  // reserved

  const int64_t cells =
      static_cast<int64_t>(config.time_steps()) * config.mel_bins;
  std::vector<float> buf(static_cast<size_t>(cells));
  for (const auto& c : clips) {
    for (const auto& f : c.frames) {
      if (f.values.size() != cells)
        throw std::runtime_error("frame cache: frame shape does not match config");
      for (int64_t i = 0; i < cells; ++i)
        buf[static_cast<size_t>(i)] = static_cast<float>(f.values[i]);
      out.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
  }
  if (!out) throw std::runtime_error("frame cache: write failed for " + path);

  std::ofstream idx(path + ".idx", std::ios::trunc);
  if (!idx) throw std::runtime_error("frame cache: cannot write " + path + ".idx");
  uint32_t start = 0;
  for (const auto& c : clips) {
    const uint32_t end = start + static_cast<uint32_t>(c.frames.size());
    idx << start << '\t' << end << '\t' << c.source_id << '\t' << c.label << '\n';
    start = end;
  }
}

std::vector<ClipFrames> read_frame_cache(const std::string& path,
                                         const FrontendConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("frame cache: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PFFR", 4) != 0)
    throw std::runtime_error("frame cache: bad magic in " + path);
  const uint32_t version = get_u32_le(in);
  if (version != 1)
    throw std::runtime_error("frame cache: unsupported version " +
                             std::to_string(version));
  const uint32_t n_frames = get_u32_le(in);
  get_u32_le(in);  // reserved

  const int time_steps = config.time_steps();
  const int64_t cells = static_cast<int64_t>(time_steps) * config.mel_bins;

  std::ifstream idx(path + ".idx");
  if (!idx) throw std::runtime_error("frame cache: missing sidecar " + path + ".idx");

  std::vector<ClipFrames> out;
  std::vector<float> buf(static_cast<size_t>(cells));
  uint32_t expected_start = 0;
  std::string line;
  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    ClipFrames cf;
    uint32_t start = 0, end = 0;
    {
      size_t p1 = line.find('\t');
      size_t p2 = line.find('\t', p1 + 1);
      size_t p3 = line.find('\t', p2 + 1);
      if (p1 == std::string::npos || p2 == std::string::npos ||
          p3 == std::string::npos)
        throw std::runtime_error("frame cache: malformed index line: " + line);
      start = static_cast<uint32_t>(std::stoul(line.substr(0, p1)));
      end = static_cast<uint32_t>(std::stoul(line.substr(p1 + 1, p2 - p1 - 1)));
      cf.source_id = line.substr(p2 + 1, p3 - p2 - 1);
      cf.label = line.substr(p3 + 1);
    }
    if (start != expected_start || end < start || end > n_frames)
      throw std::runtime_error("frame cache: inconsistent index ranges");
    expected_start = end;
    for (uint32_t i = start; i < end; ++i) {
      in.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
      if (!in) throw std::runtime_error("frame cache: truncated data in " + path);
      MelFrame f;
      f.values = Tensor({time_steps, config.mel_bins});
      for (int64_t j = 0; j < cells; ++j)
        f.values[j] = static_cast<double>(buf[static_cast<size_t>(j)]);
      f.frame_index = static_cast<int>(i - start);
      f.start_time = static_cast<double>(f.frame_index) * config.frame_seconds *
                     config.hop_fraction;
      cf.frames.push_back(std::move(f));
    }
    out.push_back(std::move(cf));
  }
  if (expected_start != n_frames)
    throw std::runtime_error("frame cache: index does not cover all frames");
  return out;
}

std::vector<FrameSequence> sequences_from_clips(
    const std::vector<ClipFrames>& clips) {
  std::vector<FrameSequence> out;
  for (const auto& c : clips) {
    auto seqs = build_sequences(c.frames, c.label, c.source_id);
    out.insert(out.end(), std::make_move_iterator(seqs.begin()),
               std::make_move_iterator(seqs.end()));
  }
  return out;
}

std::vector<MelFrame> gather_frames(const std::vector<ClipFrames>& clips) {
  std::vector<MelFrame> out;
  for (const auto& c : clips)
    out.insert(out.end(), c.frames.begin(), c.frames.end());
  return out;
}

std::vector<std::string> category_names(const std::vector<ClipRef>& clips) {
  std::set<std::string> labels;
  for (const auto& c : clips) labels.insert(c.label);
  return {labels.begin(), labels.end()};
}

}  // namespace pairfeat
