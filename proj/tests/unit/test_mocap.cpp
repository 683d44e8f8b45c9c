#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <sstream>

#include "gesture/mocap.hpp"
#include "gesture/rng.hpp"
#include "oracles.hpp"

using namespace gesture;

namespace {

const char* kArmBvh = R"(HIERARCHY
ROOT Hips
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT LShoulder
  {
    OFFSET 10 40 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    JOINT LElbow
    {
      OFFSET 28 0 0
      CHANNELS 3 Xrotation Yrotation Zrotation
      JOINT LWrist
      {
        OFFSET 25 0 0
        CHANNELS 3 Yrotation Zrotation Xrotation
        End Site
        {
          OFFSET 8 0 0
        }
      }
    }
  }
  JOINT RShoulder
  {
    OFFSET -10 40 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    JOINT RElbow
    {
      OFFSET -28 0 0
      CHANNELS 3 Zrotation Yrotation Xrotation
      JOINT RWrist
      {
        OFFSET -25 0 0
        CHANNELS 3 Xrotation Zrotation Yrotation
        End Site
        {
          OFFSET -8 0 0
        }
      }
    }
  }
}
MOTION
Frames: 3
Frame Time: 0.02
1 90 2 0 0 0 10 20 30 -15 5 40 7 -8 9 -10 -20 -30 15 -5 -40 -7 8 -9
1.5 91 2.5 5 -3 2 11 21 31 -14 6 41 8 -7 10 -11 -21 -31 16 -4 -39 -6 9 -8
2 92 3 10 -6 4 12 22 32 -13 7 42 9 -6 11 -12 -22 -32 17 -3 -38 -5 10 -7
)";

JointMap arm_map() {
  JointMap m;
  m[{JointRole::Shoulder, Hand::Left}] = "LShoulder";
  m[{JointRole::Elbow, Hand::Left}] = "LElbow";
  m[{JointRole::Wrist, Hand::Left}] = "LWrist";
  m[{JointRole::FingerIndex, Hand::Left}] = "LWrist_End";
  m[{JointRole::Shoulder, Hand::Right}] = "RShoulder";
  m[{JointRole::Elbow, Hand::Right}] = "RElbow";
  m[{JointRole::Wrist, Hand::Right}] = "RWrist";
  return m;
}

ErrorCode parse_error(const std::string& text) {
  try {
    parse_bvh(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::Io;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return s.replace(at, from.size(), to);
}

}  // namespace

TEST(Bvh, HierarchyMatchesSecondParser) {
  const BvhDocument doc = parse_bvh(kArmBvh);
  const oracle::BvhData ref = oracle::read_bvh(kArmBvh);
  std::size_t joints = 0;
  for (const auto& n : ref.nodes) {
    if (n.end_site) {
      const auto e = doc.skeleton.find_end_site(n.name);
      ASSERT_TRUE(e) << n.name;
      const EndSite& site = doc.skeleton.end_sites()[static_cast<std::size_t>(*e)];
      EXPECT_EQ(doc.skeleton.joints()[static_cast<std::size_t>(site.parent)].name, ref.nodes[static_cast<std::size_t>(n.parent)].name);
      continue;
    }
    ++joints;
    const auto j = doc.skeleton.find_joint(n.name);
    ASSERT_TRUE(j) << n.name;
    const Joint& joint = doc.skeleton.joints()[static_cast<std::size_t>(*j)];
    for (int d = 0; d < 3; ++d) EXPECT_EQ(joint.offset[d], n.offset[static_cast<std::size_t>(d)]);
    ASSERT_EQ(joint.channels.size(), n.channels.size());
    for (std::size_t c = 0; c < n.channels.size(); ++c) EXPECT_EQ(to_string(joint.channels[c]), n.channels[c]);
    if (n.parent >= 0) {
      ASSERT_TRUE(joint.parent);
      EXPECT_EQ(doc.skeleton.joints()[static_cast<std::size_t>(*joint.parent)].name,
                ref.nodes[static_cast<std::size_t>(n.parent)].name);
    }
  }
  EXPECT_EQ(doc.skeleton.joints().size(), joints);
  EXPECT_EQ(doc.skeleton.channel_count(), 24);
  EXPECT_DOUBLE_EQ(doc.motion.frame_time, ref.frame_time);
  ASSERT_EQ(doc.motion.frame_count(), 3);
  for (int f = 0; f < 3; ++f) {
    for (int c = 0; c < 24; ++c) EXPECT_EQ(doc.motion.frames(f, c), ref.frames[static_cast<std::size_t>(f)][static_cast<std::size_t>(c)]);
  }
}

TEST(Bvh, WriteParseRoundTrip) {
  const BvhDocument a = parse_bvh(kArmBvh, {"clip", 1.0});
  const BvhDocument b = parse_bvh(write_bvh(a.skeleton, a.motion), {"clip", 1.0});
  EXPECT_TRUE(a.skeleton == b.skeleton);
  EXPECT_TRUE(a.motion == b.motion);
}

TEST(Bvh, ScaleAppliesToOffsetsAndTranslations) {
  const BvhDocument doc = parse_bvh(kArmBvh, {"clip", 0.01});
  EXPECT_DOUBLE_EQ(doc.skeleton.joints()[1].offset.y(), 0.4);
  EXPECT_DOUBLE_EQ(doc.motion.frames(0, 1), 0.9);
  EXPECT_DOUBLE_EQ(doc.motion.frames(0, 3), 0.0);
  EXPECT_DOUBLE_EQ(doc.motion.frames(0, 6), 10.0);  // rotations untouched
}

TEST(Bvh, MalformedInputsCarryCodes) {
  EXPECT_EQ(parse_error("HIERARCHY\nROOT\n"), ErrorCode::BvhMalformedHeader);
  EXPECT_EQ(parse_error(replace(kArmBvh, "Frames: 3", "Frames: 4")), ErrorCode::BvhFrameCountMismatch);
  EXPECT_EQ(parse_error(replace(kArmBvh, "1 90 2 0 0 0", "1 90 2 0 0")), ErrorCode::BvhChannelCountMismatch);
  EXPECT_EQ(parse_error(replace(kArmBvh, "1 90 2 0 0 0", "1 90 2 0 x 0")), ErrorCode::BvhNonNumeric);
  EXPECT_EQ(parse_error(replace(kArmBvh, "Frame Time: 0.02", "Frame Time: 0")), ErrorCode::BvhBadFrameTime);
}

TEST(Bvh, ErrorsNameTheLine) {
  try {
    parse_bvh(replace(kArmBvh, "1.5 91 2.5", "1.5 91 oops"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("49"), std::string::npos) << e.what();
  }
}

TEST(ForwardKinematics, MatchesMatrixStackOnFixedSkeleton) {
  const BvhDocument doc = parse_bvh(kArmBvh);
  const oracle::BvhData ref = oracle::read_bvh(kArmBvh);
  const JointTrajectory traj = forward_kinematics(doc.skeleton, doc.motion, arm_map());
  for (int f = 0; f < 3; ++f) {
    const auto pos = oracle::matrix_stack_fk(ref, ref.frames[static_cast<std::size_t>(f)]);
    for (const auto& [key, name] : arm_map()) {
      const Eigen::Vector3d p = traj.at(key.first, key.second)[static_cast<std::size_t>(f)];
      const auto& q = pos.at(name);
      for (int d = 0; d < 3; ++d) EXPECT_NEAR(p[d], q[static_cast<std::size_t>(d)], 1e-9) << name;
    }
  }
}

TEST(ForwardKinematics, MatchesMatrixStackOnRandomOrders) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::string text = oracle::random_chain_bvh(seed, 7, 4);
    const BvhDocument doc = parse_bvh(text, {"c", 0.01});
    const oracle::BvhData ref = oracle::read_bvh(text);
    for (int f = 0; f < doc.motion.frame_count(); ++f) {
      const Pose pose = compute_pose(doc.skeleton, doc.motion.frames.row(f).data());
      const auto pos = oracle::matrix_stack_fk(ref, ref.frames[static_cast<std::size_t>(f)], 0.01);
      for (std::size_t j = 0; j < doc.skeleton.joints().size(); ++j) {
        const auto& q = pos.at(doc.skeleton.joints()[j].name);
        for (int d = 0; d < 3; ++d) ASSERT_NEAR(pose.position[j][d], q[static_cast<std::size_t>(d)], 1e-9);
      }
    }
  }
}

TEST(ForwardKinematics, UnmappedRequiredRoleAndUnknownJoint) {
  const BvhDocument doc = parse_bvh(kArmBvh);
  JointMap m = arm_map();
  m.erase({JointRole::Elbow, Hand::Right});
  try {
    forward_kinematics(doc.skeleton, doc.motion, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnmappedRole);
  }
  m = arm_map();
  m[{JointRole::FingerPinky, Hand::Left}] = "Nope";
  try {
    forward_kinematics(doc.skeleton, doc.motion, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownJoint);
  }
}

TEST(ForwardKinematics, OptionalRolesStayEmpty) {
  const BvhDocument doc = parse_bvh(kArmBvh);
  const JointTrajectory traj = forward_kinematics(doc.skeleton, doc.motion, arm_map());
  EXPECT_TRUE(traj.has(JointRole::FingerIndex, Hand::Left));
  EXPECT_FALSE(traj.has(JointRole::FingerIndex, Hand::Right));
  EXPECT_FALSE(traj.has(JointRole::WristBase, Hand::Left));
}

TEST(Glitches, FlagsLargeJumpsOnly) {
  const BvhDocument doc = parse_bvh(kArmBvh, {"c", 0.01});
  MotionClip motion = doc.motion;
  JointTrajectory traj = forward_kinematics(doc.skeleton, motion, arm_map());
  EXPECT_TRUE(traj.glitches.empty());
  motion.frames(2, 0) += 3.0;  // channels are already in meters
  traj = forward_kinematics(doc.skeleton, motion, arm_map());
  ASSERT_FALSE(traj.glitches.empty());
  for (const Glitch& g : traj.glitches) {
    EXPECT_EQ(g.frame, 2);
    const auto& track = traj.at(g.role, g.hand);
    EXPECT_DOUBLE_EQ(g.displacement, (track[2] - track[1]).norm());
    EXPECT_GE(g.displacement, kGlitchDisplacement);
  }
}

TEST(Euler, RecoversEveryOrder) {
  Rng rng(7);
  const std::array<std::array<int, 3>, 6> orders{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  const std::array<ChannelTag, 3> tags{ChannelTag::Xrotation, ChannelTag::Yrotation, ChannelTag::Zrotation};
  for (const auto& order : orders) {
    Joint j;
    for (int a : order) j.channels.push_back(tags[static_cast<std::size_t>(a)]);
    for (int trial = 0; trial < 50; ++trial) {
      const double row[3] = {rng.uniform(-170, 170), rng.uniform(-80, 80), rng.uniform(-170, 170)};
      const Eigen::Matrix3d r = joint_rotation(j, row);
      const Eigen::Vector3d angles = euler_from_matrix(r, order);
      const double back[3] = {angles[0], angles[1], angles[2]};
      EXPECT_LT((joint_rotation(j, back) - r).norm(), 1e-10);
    }
  }
}
