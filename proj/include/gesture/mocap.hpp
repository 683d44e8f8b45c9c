#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gesture/common.hpp"

namespace gesture {

enum class ChannelTag { Xposition, Yposition, Zposition, Xrotation, Yrotation, Zrotation };

std::string_view to_string(ChannelTag tag);
inline bool is_rotation(ChannelTag t) { return t >= ChannelTag::Xrotation; }
/// Axis index 0..2 of a channel tag.
inline int axis_of(ChannelTag t) { return static_cast<int>(t) % 3; }

struct Joint {
  std::string name;
  std::optional<int> parent;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  std::vector<ChannelTag> channels;
  int first_channel = 0;  // column of this joint's first channel in a frame row
};

/// BVH "End Site" leaf. Addressable by name as "<parent name>_End".
struct EndSite {
  std::string name;
  int parent = 0;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
};

/// Joint hierarchy in topological order (parent index < child index).
class Skeleton {
 public:
  Skeleton() = default;
  Skeleton(std::vector<Joint> joints, std::vector<EndSite> end_sites);

  const std::vector<Joint>& joints() const { return joints_; }
  const std::vector<EndSite>& end_sites() const { return end_sites_; }
  int channel_count() const { return channel_count_; }

  std::optional<int> find_joint(std::string_view name) const;
  std::optional<int> find_end_site(std::string_view name) const;

  bool operator==(const Skeleton& other) const;

 private:
  std::vector<Joint> joints_;
  std::vector<EndSite> end_sites_;
  int channel_count_ = 0;
};

using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-frame channel values: rotations in degrees, translations in meters.
struct MotionClip {
  std::string clip_id;
  double frame_time = 0.0;
  FrameMatrix frames;  // F x C

  int frame_count() const { return static_cast<int>(frames.rows()); }
  double duration() const { return frame_time * (frame_count() - 1); }
  bool operator==(const MotionClip& other) const {
    return clip_id == other.clip_id && frame_time == other.frame_time && frames == other.frames;
  }
};

struct BvhDocument {
  Skeleton skeleton;
  MotionClip motion;
};

struct BvhOptions {
  std::string clip_id;
  double scale = 1.0;  // multiplies offsets and translation channels
};

/// Parses a BVH document. Errors carry the 1-based line number.
BvhDocument parse_bvh(std::string_view text, const BvhOptions& options = {});
/// Serializes with shortest round-trip number formatting.
std::string write_bvh(const Skeleton& skeleton, const MotionClip& motion);

// Joint roles used by the parameter extractor.
enum class JointRole {
  Shoulder = 0,
  Elbow,
  Wrist,
  WristBase,
  FingerIndex,
  FingerMiddle,
  FingerRing,
  FingerPinky,
};
inline constexpr std::size_t kRoleCount = 8;
inline constexpr std::array<JointRole, 4> kFingertips{JointRole::FingerIndex, JointRole::FingerMiddle,
                                                      JointRole::FingerRing, JointRole::FingerPinky};
inline constexpr std::array<JointRole, 3> kArmRoles{JointRole::Shoulder, JointRole::Elbow,
                                                    JointRole::Wrist};

std::string_view role_name(JointRole role);
std::optional<JointRole> parse_role(std::string_view name);

inline constexpr std::size_t track_slot(JointRole role, Hand hand) {
  return static_cast<std::size_t>(role) * 2 + index(hand);
}

/// role x hand -> joint or end-site name.
using JointMap = std::map<std::pair<JointRole, Hand>, std::string>;

struct Glitch {
  JointRole role;
  Hand hand;
  int frame;  // displacement measured from frame-1 to frame
  double displacement;
};

/// World positions (meters) of the mapped roles for every frame.
struct JointTrajectory {
  std::string clip_id;
  double frame_time = 0.0;
  int frames = 0;
  std::array<std::vector<Eigen::Vector3d>, kRoleCount * 2> tracks;
  std::vector<Glitch> glitches;

  bool has(JointRole role, Hand hand) const { return !tracks[track_slot(role, hand)].empty(); }
  const std::vector<Eigen::Vector3d>& at(JointRole role, Hand hand) const;
  std::vector<Eigen::Vector3d>& at(JointRole role, Hand hand);
};

inline constexpr double kGlitchDisplacement = 2.0;  // meters per frame

/// Shoulder, elbow and wrist are required for both hands; the remaining roles
/// are optional and produce empty tracks when unmapped.
JointTrajectory forward_kinematics(const Skeleton& skeleton, const MotionClip& motion,
                                   const JointMap& joint_map);

/// Flags inter-frame displacements >= kGlitchDisplacement.
std::vector<Glitch> find_glitches(const JointTrajectory& traj);

// Lower-level kinematics shared with the motion editor.

/// Local rotation of a joint from its channel values (intrinsic, declared order).
Eigen::Matrix3d joint_rotation(const Joint& joint, const double* row);

struct Pose {
  std::vector<Eigen::Matrix3d> rotation;  // world rotation per joint
  std::vector<Eigen::Vector3d> position;  // world position per joint
};
Pose compute_pose(const Skeleton& skeleton, const double* row);

/// Euler angles (degrees) reproducing `r` when applied intrinsically in the
/// given axis order (each 0..2, all distinct).
Eigen::Vector3d euler_from_matrix(const Eigen::Matrix3d& r, const std::array<int, 3>& order);

}  // namespace gesture
