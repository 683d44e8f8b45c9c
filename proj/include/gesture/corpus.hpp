#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gesture/audio.hpp"
#include "gesture/constants.hpp"
#include "gesture/records.hpp"

namespace gesture {

struct ManifestEntry {
  std::string clip_id;
  std::string dataset_id;
  std::string audio_path;   // resolved against the manifest directory
  std::string bvh_path;
  std::string labels_path;
  double scale_factor = 1.0;
};

struct Manifest {
  std::string path;
  std::vector<ManifestEntry> entries;

  const ManifestEntry& find(std::string_view clip_id) const;
};

/// Columns: clip_id, dataset_id, audio_path, bvh_path, labels_path,
/// scale_factor. Paths are relative to `base_dir`. With `check_files`,
/// every referenced file must exist.
Manifest parse_manifest(std::string_view text, const std::string& base_dir, bool check_files = true);
Manifest load_manifest(const std::string& path);

using ClipDurations = std::map<std::string, double, std::less<>>;

/// Columns: stroke_id, clip_id, start_s, end_s, source (hand|automatic).
/// Rejects strokes longer than the input cap allows and strokes overlapping
/// within a clip; with `durations`, also strokes outside their clip.
/// Result is sorted by (clip_id, start_s).
std::vector<StrokeRecord> parse_labels(std::string_view text, const ClipDurations* durations = nullptr);
std::vector<StrokeRecord> load_labels(const std::string& path, const ClipDurations* durations = nullptr);

/// Re-applies the cap, overlap and bounds checks to an in-memory stroke list.
void validate_strokes(std::vector<StrokeRecord>& strokes, const ClipDurations* durations);

struct StrokeWindow {
  std::string stroke_id;
  FeatureMatrix features;  // kWindowFrames rows, tail zero-padded
  int valid_len = 0;
  std::optional<GestureParams> targets;
};

/// Slice [start - 1 s, end + 1 s] clamped to the clip, tail padded to
/// `total_len` frames.
StrokeWindow window_for_stroke(const StrokeRecord& stroke, const FeatureMatrix& clip_features,
                               int total_len = constants::kWindowFrames);

/// Frame index nearest to a time, at the given hop.
int frame_at(double seconds, double hop);

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
};

/// Seeded uniform partition. Stroke ids are sorted before shuffling so the
/// result depends only on the id set and the seed.
Split make_split(std::vector<std::string> stroke_ids, std::uint64_t seed,
                 double val_frac = constants::kValidationFraction, double test_frac = constants::kTestFraction);

}  // namespace gesture
