#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gesture/params.hpp"
#include "gesture/rng.hpp"
#include "oracles.hpp"

using namespace gesture;

namespace {

std::vector<oracle::Vec3> wrist_of(const JointTrajectory& t, Hand h, FrameInterval iv) {
  const auto& w = t.at(JointRole::Wrist, h);
  return oracle::to_vec3(std::vector<Eigen::Vector3d>(w.begin() + iv.first, w.begin() + iv.last + 1));
}

}  // namespace

TEST(Params, MatchOraclesOnRandomFixtures) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const JointTrajectory traj = oracle::random_trajectory(seed, 120);
    const FrameInterval iv{10, 90};
    for (Hand h : kHands) {
      const HandParams p = extract_hand(traj, h, iv);
      const auto w = wrist_of(traj, h, iv);
      EXPECT_NEAR(p.path_length, oracle::path_length(w), 1e-9);
      EXPECT_NEAR(p.max_velocity, oracle::max_velocity(w, 0.02), 1e-9);
      EXPECT_NEAR(p.initial_acceleration, oracle::initial_acceleration(w, 0.02), 1e-9);
      EXPECT_NEAR(p.major_axis_length, oracle::farthest_pair(w), 1e-9);
      double sw = 0.0;
      std::vector<oracle::Vec3> base;
      std::array<std::vector<oracle::Vec3>, 4> tips;
      for (int f = iv.first; f <= iv.last; ++f) {
        const auto i = static_cast<std::size_t>(f);
        sw += oracle::swivel_deg(oracle::to_vec3(traj.at(JointRole::Shoulder, h)[i]),
                                 oracle::to_vec3(traj.at(JointRole::Elbow, h)[i]),
                                 oracle::to_vec3(traj.at(JointRole::Wrist, h)[i]));
        base.push_back(oracle::to_vec3(traj.at(JointRole::WristBase, h)[i]));
        for (std::size_t k = 0; k < 4; ++k) tips[k].push_back(oracle::to_vec3(traj.at(kFingertips[k], h)[i]));
      }
      EXPECT_NEAR(p.arm_swivel, sw / iv.count(), 1e-6);
      EXPECT_NEAR(p.hand_opening, oracle::hand_opening(base, tips), 1e-9);
    }
  }
}

TEST(Smoothing, LinearMotionPassesUnchanged) {
  std::vector<Eigen::Vector3d> p;
  for (int i = 0; i < 12; ++i) p.emplace_back(0.1 * i, -0.05 * i, 2.0);
  const auto s = smooth_positions(p);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_LT((s[i] - p[i]).norm(), 1e-12);
}

TEST(Speed, ConstantVelocityLine) {
  std::vector<Eigen::Vector3d> p;
  for (int i = 0; i < 20; ++i) p.emplace_back(0.03 * i, 0.04 * i, 0.0);
  const auto v = speed_series(p, 0.01);
  ASSERT_EQ(v.size(), 19U);
  for (double x : v) EXPECT_NEAR(x, 5.0, 1e-9);
}

TEST(Peaks, FirstMajorPeakRule) {
  const std::vector<double> v{0.0, 3.0, 1.0, 10.0, 2.0, 6.0, 1.0};
  EXPECT_EQ(first_major_peak(v), 3U);   // 3 < 0.5 * 10
  EXPECT_EQ(first_major_peak(v, 0.3), 1U);
  EXPECT_EQ(first_major_peak(std::vector<double>{9.0, 5.0, 1.0}), 0U);
  EXPECT_EQ(first_major_peak(std::vector<double>{1.0, 4.0, 4.0, 2.0}), 1U);  // plateau: first sample
  EXPECT_EQ(initial_acceleration(std::vector<double>{9.0, 5.0, 1.0}, 0.01), 0.0);
}

TEST(Peaks, MatchesEnumerationOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(2 + rng.below(30)));
    for (double& x : v) x = std::floor(rng.uniform(0.0, 6.0));  // plenty of ties
    for (double f : {0.2, 0.5, 0.9}) EXPECT_EQ(first_major_peak(v, f), oracle::first_major_peak(v, f));
  }
}

TEST(MajorAxis, BoundingBoxMode) {
  const std::vector<Eigen::Vector3d> p{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0, 0, 2}};
  EXPECT_DOUBLE_EQ(major_axis_length(p, MajorAxisMode::BoundingBoxDiagonal), 3.0);
  EXPECT_DOUBLE_EQ(major_axis_length(p), std::sqrt(8.0));
}

TEST(Swivel, SignAndDegenerateCases) {
  const Eigen::Vector3d s(0, 0, 0), w(0, 0, 0.5);
  // elbow straight below the arm axis -> 0
  EXPECT_NEAR(*swivel_angle(s, Eigen::Vector3d(0, -0.1, 0.25), w), 0.0, 1e-12);
  const double a = *swivel_angle(s, Eigen::Vector3d(0.1, 0, 0.25), w);
  const double b = *swivel_angle(s, Eigen::Vector3d(-0.1, 0, 0.25), w);
  EXPECT_NEAR(std::abs(a), 90.0, 1e-9);
  EXPECT_NEAR(a, -b, 1e-9);
  EXPECT_NEAR(*swivel_angle(s, Eigen::Vector3d(0, 0.1, 0.25), w), 180.0, 1e-9);
  EXPECT_FALSE(swivel_angle(s, Eigen::Vector3d(0.1, 0, 0), Eigen::Vector3d(0, 0, 0.005)));  // wrist at shoulder
  EXPECT_FALSE(swivel_angle(s, Eigen::Vector3d(0.1, -0.2, 0), Eigen::Vector3d(0, -0.5, 0)));  // vertical arm
  EXPECT_FALSE(swivel_angle(s, Eigen::Vector3d(0, 0, 0.25), w));  // straight arm
}

TEST(Swivel, MostlyDegenerateIntervalThrows) {
  JointTrajectory t = oracle::random_trajectory(5, 20);
  for (int f = 0; f < 15; ++f) t.at(JointRole::Wrist, Hand::Left)[static_cast<std::size_t>(f)] = t.at(JointRole::Shoulder, Hand::Left)[static_cast<std::size_t>(f)];
  try {
    arm_swivel(t, Hand::Left, {0, 19});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
  }
}

TEST(HandOpening, MissingFingertip) {
  JointTrajectory t = oracle::random_trajectory(5, 20);
  t.at(JointRole::FingerRing, Hand::Right).clear();
  EXPECT_NO_THROW(hand_opening(t, Hand::Left, {0, 19}));
  try {
    hand_opening(t, Hand::Right, {0, 19});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingFingertip);
  }
}

TEST(Intervals, StrokeFramesAndShortStrokes) {
  const FrameInterval iv = stroke_frames(StrokeRecord{"s", "c", "d", 1.011, 2.0}, 0.02, 200);
  EXPECT_EQ(iv.first, 51);
  EXPECT_EQ(iv.last, 100);
  const FrameInterval clamped = stroke_frames(StrokeRecord{"s", "c", "d", 3.0, 9.0}, 0.02, 200);
  EXPECT_EQ(clamped.last, 199);
  const JointTrajectory t = oracle::random_trajectory(1, 50);
  try {
    extract_all(StrokeRecord{"s", "c", "d", 0.10, 0.105}, t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IntervalTooShort);
  }
}

TEST(ParamsCsv, RoundTripIsExact) {
  const JointTrajectory t = oracle::random_trajectory(9, 80);
  std::vector<GestureParams> rows{extract_interval("a", t, {0, 40}), extract_interval("b", t, {30, 79})};
  const std::string text = write_params_csv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "stroke_id,velocity_L,velocity_R,initial_acceleration_L,initial_acceleration_R,path_length_L,path_length_R,"
            "major_axis_length_L,major_axis_length_R,arm_swivel_L,arm_swivel_R,hand_opening_L,hand_opening_R");
  EXPECT_EQ(parse_params_csv(text), rows);
}
