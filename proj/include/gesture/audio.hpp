#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gesture/constants.hpp"

namespace gesture {

/// Mono samples in [-1, 1].
struct AudioBuffer {
  std::string clip_id;
  std::vector<double> samples;
  int sample_rate = 16000;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

bool supported_sample_rate(int rate);

/// RIFF/WAVE, PCM16 or IEEE float32, 1-2 channels. Stereo is mean-downmixed.
AudioBuffer parse_wav(std::span<const std::uint8_t> bytes, std::string clip_id = {});
/// 16-bit PCM mono encoder (values clipped to [-1, 1)).
std::vector<std::uint8_t> encode_wav_pcm16(const AudioBuffer& audio);

using FeatureRows = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// T x D frame features at a fixed hop. Rows >= valid_len are zero.
struct FeatureMatrix {
  std::string clip_id;
  double hop = constants::kHopSeconds;
  FeatureRows frame_features;
  std::vector<std::string> feature_names;
  int valid_len = 0;

  int frames() const { return static_cast<int>(frame_features.rows()); }
  int dims() const { return static_cast<int>(frame_features.cols()); }
  bool operator==(const FeatureMatrix& o) const {
    return clip_id == o.clip_id && hop == o.hop && frame_features == o.frame_features &&
           feature_names == o.feature_names && valid_len == o.valid_len;
  }
};

/// Analysis frame layout shared by every built-in feature: frame t starts at
/// round(t * hop * rate) and spans one 25 ms window.
struct FrameLayout {
  int window = 0;  // samples
  int frames = 0;
  std::vector<std::size_t> starts;
};
FrameLayout frame_layout(std::size_t n_samples, int sample_rate, double window_s = constants::kMfccWindowSeconds,
                         double hop_s = constants::kHopSeconds);

struct MfccOptions {
  int n_coeffs = constants::kMfccCoeffs;
  double window_s = constants::kMfccWindowSeconds;
  double hop_s = constants::kHopSeconds;
  int n_mels = constants::kMelFilters;
  double log_floor = constants::kLogFloor;
};

/// Hann window -> |FFT| (zero-padded to the next power of two) -> triangular
/// mel filterbank (0 Hz to Nyquist) -> floored log -> orthonormal DCT-II,
/// coefficients 1..n_coeffs. Returns frames x n_coeffs.
FeatureRows mfcc(const AudioBuffer& audio, const MfccOptions& options = {});

double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct PitchOptions {
  double window_s = constants::kPitchWindowSeconds;
  double hop_s = constants::kHopSeconds;
  double min_hz = constants::kPitchMinHz;
  double max_hz = constants::kPitchMaxHz;
  double voicing_threshold = constants::kVoicingThreshold;
  double octave_guard = constants::kOctaveGuard;
};

struct PitchTrack {
  std::vector<double> f0;      // Hz, 0 when unvoiced
  std::vector<double> delta;   // Hz/s
  std::vector<double> delta2;  // Hz/s^2
  std::vector<double> peak;    // normalized autocorrelation peak per frame
};

/// Normalized autocorrelation pitch on 40 ms windows centred on the 25 ms
/// feature frames, with parabolic peak interpolation.
PitchTrack f0_with_derivatives(const AudioBuffer& audio, const PitchOptions& options = {});

/// Central differences; first and last frames use one-sided differences.
std::vector<double> central_difference(std::span<const double> x, double dt);

/// log(max(sum of squares, floor)) per 25 ms frame.
std::vector<double> log_energy(const AudioBuffer& audio, double log_floor = constants::kLogFloor);

enum class FeatureSet { MfccPitchEnergy, ExternalPrecomputed, LengthOnly };
FeatureSet parse_feature_set(std::string_view tag);
std::string_view to_string(FeatureSet set);

/// Column order of the built-in set.
const std::vector<std::string>& builtin_feature_names();

/// Full-clip features (no padding; valid_len == frames). For
/// ExternalPrecomputed, `external_csv` holds the header row plus one row per frame.
FeatureMatrix assemble_features(const AudioBuffer& audio, FeatureSet set, std::string_view external_csv = {});

/// D = 1; ones before valid_len, zeros after.
FeatureMatrix length_only_features(int valid_len, int total_len = constants::kWindowFrames);

/// Per-dimension z-normalization fitted on valid rows of the training split.
struct FeatureStandardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // standard deviation, 1 where degenerate

  bool fitted() const { return !mean.empty(); }
  static FeatureStandardizer fit(std::span<const FeatureMatrix* const> training);
  /// Normalizes rows < valid_len in place; padding stays zero.
  void apply(FeatureMatrix& m) const;
};

std::string write_feature_cache(const FeatureMatrix& m);
FeatureMatrix read_feature_cache(std::string_view text);

}  // namespace gesture
