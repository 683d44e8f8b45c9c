#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gesture {

enum class ErrorCode {
  // mocap
  BvhMalformedHeader,
  BvhFrameCountMismatch,
  BvhChannelCountMismatch,
  BvhNonNumeric,
  BvhBadFrameTime,
  UnmappedRole,
  UnknownJoint,
  // audio
  WavUnsupportedEncoding,
  WavTruncated,
  WavEmpty,
  AudioTooShort,
  FeatureFrameMismatch,
  UnknownFeatureSet,
  OutOfRange,
  // corpus
  ManifestInvalid,
  LabelsInvalid,
  StrokeOverlap,
  StrokeOutOfBounds,
  StrokeExceedsCap,
  SplitInvalid,
  // params
  IntervalTooShort,
  DegenerateGeometry,
  MissingFingertip,
  // model
  ShapeMismatch,
  NonFinite,
  Divergence,
  CheckpointInvalid,
  NormalizerMissing,
  // eval
  EmptySet,
  NoEligibleDonor,
  ZeroBaseline,
  NoNonzeroDifferences,
  MissingRows,
  // stimuli
  TooFewSamples,
  TooFewWindows,
  UndefinedRatio,
  TargetOutsideLimits,
  // cli / io
  ConfigInvalid,
  MissingInput,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class Hand { Left = 0, Right = 1 };
inline constexpr std::array<Hand, 2> kHands{Hand::Left, Hand::Right};
inline constexpr std::size_t index(Hand h) { return static_cast<std::size_t>(h); }
inline constexpr char hand_suffix(Hand h) { return h == Hand::Left ? 'L' : 'R'; }

enum class ParamKind {
  Velocity = 0,
  InitialAcceleration,
  PathLength,
  MajorAxisLength,
  ArmSwivel,
  HandOpening,
};
inline constexpr std::size_t kParamCount = 6;
inline constexpr std::array<ParamKind, kParamCount> kAllParams{
    ParamKind::Velocity,        ParamKind::InitialAcceleration, ParamKind::PathLength,
    ParamKind::MajorAxisLength, ParamKind::ArmSwivel,           ParamKind::HandOpening};
inline constexpr std::size_t index(ParamKind p) { return static_cast<std::size_t>(p); }

std::string_view param_name(ParamKind p);
/// Throws ConfigInvalid listing the six valid names.
ParamKind parse_param(std::string_view name);
std::string valid_param_names();

}  // namespace gesture
