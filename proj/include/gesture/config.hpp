#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "gesture/audio.hpp"
#include "gesture/model.hpp"
#include "gesture/params.hpp"

namespace gesture {

/// Run configuration, read from a sectioned INI file. Relative paths resolve
/// against the directory of the config file.
struct RunConfig {
  std::string manifest;
  std::string joint_map;
  std::string external_features;  // directory of <clip_id>.csv, external_precomputed only
  std::string out = "out";

  FeatureSet feature_set = FeatureSet::MfccPitchEnergy;
  ModelConfig model;
  int epochs = 0;  // 0: per-parameter default

  std::uint64_t seed = 0;
  int jobs = 1;
  double validation_fraction = constants::kValidationFraction;
  double test_fraction = constants::kTestFraction;

  int baseline_repeats = constants::kBaselineRepeats;
  bool length_only = true;

  ExtractionOptions extraction;

  int sequences = constants::kSequencesPerCondition;
  double sequence_seconds = constants::kSequenceSeconds;
  double grid_seconds = constants::kSequenceGridSeconds;

  void validate() const;
};

RunConfig parse_config(std::string_view ini_text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Seed streams derived from the run seed.
enum class SeedStream : std::uint64_t { Split = 1, Train = 2, LengthOnly = 3, Baseline = 4, Stimuli = 5 };
std::uint64_t stream_seed(std::uint64_t run_seed, SeedStream stream, std::uint64_t sub = 0);

}  // namespace gesture
