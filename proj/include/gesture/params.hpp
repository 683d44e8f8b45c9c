#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gesture/constants.hpp"
#include "gesture/mocap.hpp"
#include "gesture/records.hpp"

namespace gesture {

/// Inclusive frame range.
struct FrameInterval {
  int first = 0;
  int last = 0;
  int count() const { return last - first + 1; }
};

/// Frames nearest to the stroke bounds, clamped to the clip.
FrameInterval stroke_frames(const StrokeRecord& stroke, double frame_time, int frames);

using Positions = std::span<const Eigen::Vector3d>;

/// Centred moving average whose half-width shrinks symmetrically at the ends,
/// so linear motion passes through unchanged.
std::vector<Eigen::Vector3d> smooth_positions(Positions p, int window = constants::kSmoothingFrames);

/// |s[t+1] - s[t]| / frame_time on smoothed positions; length = frames - 1.
std::vector<double> speed_series(Positions p, double frame_time);
std::vector<double> wrist_speed(const JointTrajectory& traj, Hand hand, FrameInterval interval);

double max_velocity(std::span<const double> speed);

/// Index of the first local maximum reaching `fraction` of the global maximum.
std::size_t first_major_peak(std::span<const double> speed, double fraction = constants::kMajorPeakFraction);
/// Mean acceleration from the series start to the first major peak; 0 when the
/// peak is at the first sample.
double initial_acceleration(std::span<const double> speed, double frame_time,
                            double fraction = constants::kMajorPeakFraction);

double path_length(Positions p);
double path_length(const JointTrajectory& traj, Hand hand, FrameInterval interval);

enum class MajorAxisMode { FarthestPair, BoundingBoxDiagonal };
double major_axis_length(Positions p, MajorAxisMode mode = MajorAxisMode::FarthestPair);
double major_axis_length(const JointTrajectory& traj, Hand hand, FrameInterval interval,
                         MajorAxisMode mode = MajorAxisMode::FarthestPair);

struct SwivelOptions {
  Eigen::Vector3d down = Eigen::Vector3d(0.0, -1.0, 0.0);
  double min_arm_length = constants::kSwivelMinArmLength;
};

/// Signed elbow rotation about the shoulder->wrist axis, measured from the
/// world-down direction projected off that axis. Degrees in (-180, 180];
/// nullopt for degenerate geometry.
std::optional<double> swivel_angle(const Eigen::Vector3d& shoulder, const Eigen::Vector3d& elbow,
                                   const Eigen::Vector3d& wrist, const SwivelOptions& options = {});
/// Mean swivel over non-degenerate frames. Throws DegenerateGeometry when fewer
/// than half the frames are usable.
double arm_swivel(const JointTrajectory& traj, Hand hand, FrameInterval interval, const SwivelOptions& options = {});

/// Mean over frames of the mean fingertip (index..pinky) distance from the wrist base.
double hand_opening(const JointTrajectory& traj, Hand hand, FrameInterval interval);

struct ExtractionOptions {
  MajorAxisMode major_axis = MajorAxisMode::FarthestPair;
  SwivelOptions swivel;
};

HandParams extract_hand(const JointTrajectory& traj, Hand hand, FrameInterval interval,
                        const ExtractionOptions& options = {});
/// All six parameters for both hands over exactly the stroke interval.
GestureParams extract_all(const StrokeRecord& stroke, const JointTrajectory& traj,
                          const ExtractionOptions& options = {});
GestureParams extract_interval(const std::string& stroke_id, const JointTrajectory& traj, FrameInterval interval,
                               const ExtractionOptions& options = {});

/// stroke_id then velocity_L, velocity_R, initial_acceleration_L, ... (SI units,
/// swivel in degrees).
std::string write_params_csv(std::span<const GestureParams> params);
std::vector<GestureParams> parse_params_csv(std::string_view text);
std::vector<std::string> params_csv_columns();

}  // namespace gesture
