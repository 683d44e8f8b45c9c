#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gesture/constants.hpp"
#include "gesture/corpus.hpp"
#include "gesture/mocap.hpp"
#include "gesture/params.hpp"
#include "gesture/records.hpp"

namespace gesture {

enum class Direction { Increase, Decrease };
std::string_view to_string(Direction d);
Direction parse_direction(std::string_view s);

enum class ExpressionClass { Low, Medium, High };
std::string_view to_string(ExpressionClass c);

struct Band {
  double p25 = 0.0;
  double p75 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Nearest-rank percentile: sorted ascending, index ceil(q n) - 1.
double nearest_rank(std::vector<double> values, double q);

struct PercentileBands {
  std::array<std::array<Band, 2>, kParamCount> bands{};
  const Band& at(ParamKind p, Hand h) const { return bands[index(p)][index(h)]; }
};

/// Requires at least 4 strokes.
PercentileBands compute_bands(std::span<const GestureParams> params);

/// Low iff value < p25, high iff value > p75.
ExpressionClass classify(double value, const Band& band);

/// Midpoint between the band edge and the observed extreme on the target side.
double default_target(const Band& band, Direction d);
ExpressionClass target_class(Direction d);

// ---- sequence selection ----

struct ClassifiedStroke {
  StrokeRecord stroke;
  std::array<ExpressionClass, 2> cls{ExpressionClass::Medium, ExpressionClass::Medium};
};

struct SequenceWindow {
  std::string clip_id;
  int grid_index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double fraction_low = 0.0;   // over (stroke, hand) samples
  double fraction_high = 0.0;
  double score = 0.0;          // fraction in the preferred class
  std::uint64_t tie_key = 0;
  std::vector<std::string> stroke_ids;
};

/// Stable seeded key used to break score ties between windows.
std::uint64_t window_tie_key(std::uint64_t seed, std::string_view clip_id, int grid_index);

/// All grid windows holding at least one whole stroke and no stroke of the
/// opposite extreme, scored for `d`.
std::vector<SequenceWindow> candidate_windows(std::span<const ClassifiedStroke> strokes,
                                              const ClipDurations& durations, Direction d, std::uint64_t seed,
                                              double window_s = constants::kSequenceSeconds,
                                              double grid_s = constants::kSequenceGridSeconds);

/// Highest-scoring non-overlapping windows. Throws TooFewWindows.
std::vector<SequenceWindow> select_sequences(std::span<const ClassifiedStroke> strokes,
                                             const ClipDurations& durations, Direction d,
                                             int k = constants::kSequencesPerCondition, std::uint64_t seed = 0,
                                             double window_s = constants::kSequenceSeconds,
                                             double grid_s = constants::kSequenceGridSeconds);

// ---- trajectory transforms ----

/// Replaces the interval of the chosen tracks by samples at fractional source
/// frames (linear interpolation). Frames after the interval shift when the
/// sample count differs; that requires all tracks.
JointTrajectory resample_interval(const JointTrajectory& traj, FrameInterval interval,
                                  std::span<const double> source_frames, std::optional<Hand> only_hand = {});

/// Uniform time-warp of the stroke: the interval lasts `duration_factor` times
/// as long afterwards. Returns the new interval through `out_interval`.
JointTrajectory time_warp(const JointTrajectory& traj, FrameInterval interval, double duration_factor,
                          FrameInterval* out_interval = nullptr);
JointTrajectory time_warp_frames(const JointTrajectory& traj, FrameInterval interval, int new_count,
                                 FrameInterval* out_interval = nullptr);

/// Piecewise-linear monotone warp moving the first major speed peak from
/// frame tp to tp * peak_ratio; frame count and endpoints are kept.
JointTrajectory reshape_onset(const JointTrajectory& traj, FrameInterval interval, Hand hand, double peak_ratio);

/// Scales the wrist about its stroke centroid. Hand roles follow the wrist;
/// the elbow keeps its coordinates in the shoulder-wrist frame, so upper arm
/// length and swivel are preserved.
JointTrajectory scale_size(const JointTrajectory& traj, FrameInterval interval, Hand hand, double factor,
                           const SwivelOptions& swivel = {});

/// Rotates the elbow about the shoulder-wrist axis by `delta_deg` every frame.
JointTrajectory rotate_swivel(const JointTrajectory& traj, FrameInterval interval, Hand hand, double delta_deg);

/// Scales fingertip offsets from the wrist base.
JointTrajectory scale_opening(const JointTrajectory& traj, FrameInterval interval, Hand hand, double factor);

// ---- manipulation ----

struct ManipulationOptions {
  std::optional<std::array<Band, 2>> limits;  // natural limits the target must respect
  ExtractionOptions extraction;
  int refine_iterations = 4;
};

struct ManipulationResult {
  std::string stroke_id;
  ParamKind param = ParamKind::Velocity;
  std::array<double, 2> original{};
  std::array<double, 2> target{};
  std::array<double, 2> achieved{};
  std::array<double, 2> applied{};  // factor, peak ratio or degrees per hand
  GestureParams before;
  GestureParams after;
  JointTrajectory edited;
  FrameInterval interval;          // stroke frames before the edit
  FrameInterval edited_interval;   // stroke frames after the edit
  std::array<double, 2> border_jump{};  // largest wrist step entering or leaving the stroke
};

/// Edits the stroke so that `param` reaches `target` per hand; the achieved
/// values are re-extracted from the edited trajectory.
ManipulationResult apply_manipulation(const StrokeRecord& stroke, const JointTrajectory& traj, ParamKind param,
                                      const std::array<double, 2>& target, const ManipulationOptions& options = {});

// ---- verification ----

struct VerificationItem {
  std::string stroke_id;
  Hand hand = Hand::Left;
  double original = 0.0;
  double target = 0.0;
  double achieved = 0.0;
  ExpressionClass original_class = ExpressionClass::Medium;
  ExpressionClass achieved_class = ExpressionClass::Medium;
  bool pass = false;
  double residual = 0.0;  // distance from the achieved value into the target band, 0 when inside
};

struct VerificationReport {
  std::vector<VerificationItem> items;
  int passed = 0;
  int total = 0;
  double pass_rate() const { return total ? static_cast<double>(passed) / total : 0.0; }
};

VerificationReport verify_results(std::span<const ManipulationResult> results, const PercentileBands& bands,
                                  Direction d);
std::string verification_csv(const VerificationReport& report);

// ---- BVH export ----

/// Resamples the interval's channel rows at fractional source frames; Euler
/// angles are unwrapped before interpolation.
MotionClip resample_motion(const MotionClip& motion, FrameInterval interval, std::span<const double> source_frames,
                           const Skeleton& skeleton);

/// Swivel edit on the channels: the upper-arm joint turns about the
/// shoulder-wrist axis and the hand joint compensates, so the wrist pose is
/// kept. Needs shoulder -> elbow -> wrist to be a direct joint chain with
/// three rotation channels on the shoulder and wrist joints.
void apply_swivel_to_motion(const Skeleton& skeleton, MotionClip& motion, const JointMap& joint_map, Hand hand,
                            FrameInterval interval, double delta_deg);

/// Per-frame CSV of every mapped track (frame, role, hand, x, y, z).
std::string trajectory_csv(const JointTrajectory& traj);

}  // namespace gesture
