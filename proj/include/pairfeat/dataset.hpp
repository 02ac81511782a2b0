#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pairfeat/frontend.hpp"

namespace pairfeat {

/// A WAV file inside a `<root>/<category>/<file>.wav` tree. The category
/// (directory name) is the label.
struct ClipRef {
  std::string path;
  std::string label;
  std::string source_id;  // "<category>/<stem>"
};

/// Scans a dataset root for `<category>/*.wav`, sorted by category then file
/// name so ordering never depends on directory enumeration order.
std::vector<ClipRef> scan_dataset(const std::string& root);

/// Clip-level stratified split: within each label the clips are shuffled with
/// a seed derived from `seed` and the label, then the first
/// round(n * test_fraction) go to test. Splitting whole clips keeps
/// overlapping frames of one clip out of both sides.
struct DatasetSplit {
  std::vector<ClipRef> train;
  std::vector<ClipRef> test;
};
DatasetSplit split_clips(const std::vector<ClipRef>& clips,
                         double test_fraction, uint64_t seed);

/// Frames of one clip plus bookkeeping, the unit the cache stores.
struct ClipFrames {
  std::vector<MelFrame> frames;
  std::string source_id;
  std::string label;
};

/// Runs the frontend over a list of clips. Clips shorter than one frame are
/// an error (the corpus is expected to be well-formed).
std::vector<ClipFrames> extract_dataset_frames(const std::vector<ClipRef>& clips,
                                               const FrontendConfig& config);

/// Binary frame cache. Layout: 16-byte header (magic "PFFR", u32 version,
/// u32 n_frames, u32 reserved) followed by little-endian float32 frames in
/// row-major (time, mel) order. A text sidecar at `<path>.idx` maps frame
/// ranges back to source_id and label, one `start<TAB>end<TAB>source_id<TAB>label`
/// line per clip (end exclusive).
void write_frame_cache(const std::string& path,
                       const std::vector<ClipFrames>& clips,
                       const FrontendConfig& config);
std::vector<ClipFrames> read_frame_cache(const std::string& path,
                                         const FrontendConfig& config);

/// Sequences for a set of clips; frames must already be normalized.
std::vector<FrameSequence> sequences_from_clips(
    const std::vector<ClipFrames>& clips);

/// All frames of a clip set flattened, for normalization statistics.
std::vector<MelFrame> gather_frames(const std::vector<ClipFrames>& clips);

/// Sorted unique labels of a clip set.
std::vector<std::string> category_names(const std::vector<ClipRef>& clips);

}  // namespace pairfeat
