#include "gesture/common.hpp"

namespace gesture {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BvhMalformedHeader: return "bvh-malformed-header";
    case ErrorCode::BvhFrameCountMismatch: return "bvh-frame-count-mismatch";
    case ErrorCode::BvhChannelCountMismatch: return "bvh-channel-count-mismatch";
    case ErrorCode::BvhNonNumeric: return "bvh-non-numeric";
    case ErrorCode::BvhBadFrameTime: return "bvh-bad-frame-time";
    case ErrorCode::UnmappedRole: return "unmapped-role";
    case ErrorCode::UnknownJoint: return "unknown-joint";
    case ErrorCode::WavUnsupportedEncoding: return "wav-unsupported-encoding";
    case ErrorCode::WavTruncated: return "wav-truncated";
    case ErrorCode::WavEmpty: return "wav-empty";
    case ErrorCode::AudioTooShort: return "audio-too-short";
    case ErrorCode::FeatureFrameMismatch: return "feature-frame-mismatch";
    case ErrorCode::UnknownFeatureSet: return "unknown-feature-set";
    case ErrorCode::OutOfRange: return "out-of-range";
    case ErrorCode::ManifestInvalid: return "manifest-invalid";
    case ErrorCode::LabelsInvalid: return "labels-invalid";
    case ErrorCode::StrokeOverlap: return "stroke-overlap";
    case ErrorCode::StrokeOutOfBounds: return "stroke-out-of-bounds";
    case ErrorCode::StrokeExceedsCap: return "stroke-exceeds-cap";
    case ErrorCode::SplitInvalid: return "split-invalid";
    case ErrorCode::IntervalTooShort: return "interval-too-short";
    case ErrorCode::DegenerateGeometry: return "degenerate-geometry";
    case ErrorCode::MissingFingertip: return "missing-fingertip";
    case ErrorCode::ShapeMismatch: return "shape-mismatch";
    case ErrorCode::NonFinite: return "non-finite";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::CheckpointInvalid: return "checkpoint-invalid";
    case ErrorCode::NormalizerMissing: return "normalizer-missing";
    case ErrorCode::EmptySet: return "empty-set";
    case ErrorCode::NoEligibleDonor: return "no-eligible-donor";
    case ErrorCode::ZeroBaseline: return "zero-baseline";
    case ErrorCode::NoNonzeroDifferences: return "no-nonzero-differences";
    case ErrorCode::MissingRows: return "missing-rows";
    case ErrorCode::TooFewSamples: return "too-few-samples";
    case ErrorCode::TooFewWindows: return "too-few-windows";
    case ErrorCode::UndefinedRatio: return "undefined-ratio";
    case ErrorCode::TargetOutsideLimits: return "target-outside-limits";
    case ErrorCode::ConfigInvalid: return "config-invalid";
    case ErrorCode::MissingInput: return "missing-input";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

std::string_view param_name(ParamKind p) {
  switch (p) {
    case ParamKind::Velocity: return "velocity";
    case ParamKind::InitialAcceleration: return "initial_acceleration";
    case ParamKind::PathLength: return "path_length";
    case ParamKind::MajorAxisLength: return "major_axis_length";
    case ParamKind::ArmSwivel: return "arm_swivel";
    case ParamKind::HandOpening: return "hand_opening";
  }
  return "?";
}

std::string valid_param_names() {
  std::string out;
  for (ParamKind p : kAllParams) {
    if (!out.empty()) out += ", ";
    out += param_name(p);
  }
  return out;
}

ParamKind parse_param(std::string_view name) {
  for (ParamKind p : kAllParams) {
    if (param_name(p) == name) return p;
  }
  throw Error(ErrorCode::ConfigInvalid,
              "unknown parameter '" + std::string(name) + "'; valid names: " + valid_param_names());
}

}  // namespace gesture
