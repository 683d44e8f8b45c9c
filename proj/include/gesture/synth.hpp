#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gesture/audio.hpp"
#include "gesture/mocap.hpp"
#include "gesture/records.hpp"

namespace gesture {

// Seeded mini-corpus: closed-form arm and finger motion per stroke, harmonic
// "speech" at a per-clip recording level, independent of the motion.

struct SynthOptions {
  int strokes = 500;
  int strokes_per_clip = 10;
  int datasets = 2;
  std::uint64_t seed = 0;
  int sample_rate = 16000;
  double frame_time = 0.02;
  double bvh_scale = 0.01;  // BVH is written in centimeters
};

struct SynthClip {
  std::string clip_id;
  std::string dataset_id;
  AudioBuffer audio;
  MotionClip motion;  // centimeters
  std::vector<StrokeRecord> strokes;
  std::vector<double> loudness_db;  // per stroke, a clip level plus up to 3 dB jitter
};

struct SynthCorpus {
  SynthOptions options;
  Skeleton skeleton;  // centimeters
  std::vector<SynthClip> clips;
};

Skeleton synth_skeleton();
JointMap synth_joint_map();

SynthCorpus generate_corpus(const SynthOptions& options);

/// Writes wav/, bvh/, labels/, manifest.csv and joint_map.csv under `dir`.
/// Returns the manifest path.
std::string write_corpus(const SynthCorpus& corpus, const std::string& dir);

/// "role,hand,name" rows.
std::string joint_map_csv(const JointMap& map);
JointMap parse_joint_map_csv(std::string_view text);

/// Mean of the log_energy column over a clip's unpadded frames.
double clip_mean_energy(const FeatureMatrix& clip_features);

}  // namespace gesture
