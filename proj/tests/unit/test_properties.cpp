#include <gtest/gtest.h>

#include <cmath>

#include "gesture/model.hpp"
#include "gesture/rng.hpp"
#include "gesture/stimuli.hpp"
#include "oracles.hpp"

using namespace gesture;

namespace {

constexpr int kSeeds = 12;

void expect_outside_untouched(const JointTrajectory& a, const JointTrajectory& b, FrameInterval iv) {
  ASSERT_EQ(a.frames, b.frames);
  for (std::size_t k = 0; k < a.tracks.size(); ++k) {
    ASSERT_EQ(a.tracks[k].size(), b.tracks[k].size());
    for (int f = 0; f < a.frames; ++f) {
      if (f >= iv.first && f <= iv.last) continue;
      EXPECT_EQ(a.tracks[k][static_cast<std::size_t>(f)], b.tracks[k][static_cast<std::size_t>(f)]) << k << " " << f;
    }
  }
}

FrameInterval random_interval(Rng& rng, int frames) {
  const int first = static_cast<int>(rng.below(static_cast<std::uint64_t>(frames / 3)));
  const int len = 20 + static_cast<int>(rng.below(static_cast<std::uint64_t>(frames / 2)));
  return {first, std::min(frames - 2, first + len)};
}

}  // namespace

TEST(Properties, EditsStayInsideTheStroke) {
  Rng rng(31);
  for (int s = 0; s < kSeeds; ++s) {
    const JointTrajectory t = oracle::random_trajectory(static_cast<std::uint64_t>(s), 150);
    const FrameInterval iv = random_interval(rng, 150);
    const Hand h = s % 2 ? Hand::Right : Hand::Left;
    expect_outside_untouched(t, scale_size(t, iv, h, rng.uniform(0.5, 2.0)), iv);
    expect_outside_untouched(t, rotate_swivel(t, iv, h, rng.uniform(-40.0, 40.0)), iv);
    expect_outside_untouched(t, scale_opening(t, iv, h, rng.uniform(0.5, 1.5)), iv);
    try {
      expect_outside_untouched(t, reshape_onset(t, iv, h, rng.uniform(0.7, 1.3)), iv);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::UndefinedRatio);
    }
  }
}

TEST(Properties, SwivelEditKeepsSegmentLengths) {
  Rng rng(32);
  for (int s = 0; s < kSeeds; ++s) {
    const JointTrajectory t = oracle::random_trajectory(100 + static_cast<std::uint64_t>(s), 80);
    const FrameInterval iv{0, 79};
    for (Hand h : kHands) {
      const JointTrajectory r = rotate_swivel(t, iv, h, rng.uniform(-90.0, 90.0));
      for (int f = 0; f < 80; ++f) {
        const auto k = static_cast<std::size_t>(f);
        EXPECT_NEAR((r.at(JointRole::Elbow, h)[k] - r.at(JointRole::Shoulder, h)[k]).norm(),
                    (t.at(JointRole::Elbow, h)[k] - t.at(JointRole::Shoulder, h)[k]).norm(), 1e-9);
        EXPECT_NEAR((r.at(JointRole::Wrist, h)[k] - r.at(JointRole::Elbow, h)[k]).norm(),
                    (t.at(JointRole::Wrist, h)[k] - t.at(JointRole::Elbow, h)[k]).norm(), 1e-9);
      }
    }
  }
}

TEST(Properties, SizeScalingKeepsSwivel) {
  Rng rng(33);
  for (int s = 0; s < kSeeds; ++s) {
    const JointTrajectory t = oracle::random_trajectory(200 + static_cast<std::uint64_t>(s), 100);
    const FrameInterval iv = random_interval(rng, 100);
    for (Hand h : kHands) {
      const JointTrajectory r = scale_size(t, iv, h, rng.uniform(0.6, 1.6));
      EXPECT_NEAR(arm_swivel(r, h, iv), arm_swivel(t, h, iv), 1e-6);
    }
  }
}

TEST(Properties, InverseEditsRestoreParameters) {
  Rng rng(34);
  for (int s = 0; s < kSeeds; ++s) {
    const JointTrajectory t = oracle::random_trajectory(300 + static_cast<std::uint64_t>(s), 200, 0.01);
    const FrameInterval iv{40, 160};
    const Hand h = s % 2 ? Hand::Right : Hand::Left;
    const double k = rng.uniform(0.6, 1.6);
    const JointTrajectory back = scale_size(scale_size(t, iv, h, k), iv, h, 1.0 / k);
    EXPECT_NEAR(path_length(back, h, iv) / path_length(t, h, iv), 1.0, 0.005);
    const double d = rng.uniform(-30.0, 30.0);
    const JointTrajectory sw = rotate_swivel(rotate_swivel(t, iv, h, d), iv, h, -d);
    EXPECT_NEAR(arm_swivel(sw, h, iv), arm_swivel(t, h, iv), 1e-6);
    FrameInterval mid{}, end{};
    const double f = rng.uniform(0.7, 1.5);
    const JointTrajectory warped = time_warp(t, iv, f, &mid);
    const JointTrajectory restored = time_warp_frames(warped, mid, iv.count(), &end);
    const double v0 = max_velocity(wrist_speed(t, h, iv));
    EXPECT_NEAR(max_velocity(wrist_speed(restored, h, end)) / v0, 1.0, 0.005);
  }
}

TEST(Properties, InferenceIgnoresBatchComposition) {
  Rng rng(35);
  ModelConfig c;
  c.input_dim = 5;
  c.ff_size = 6;
  c.hidden_size = 7;
  c.seed = 4;
  const Network net = Network::initialize(c);
  std::vector<FeatureRows> xs;
  for (int i = 0; i < 6; ++i) {
    FeatureRows x(10, 5);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
    xs.push_back(x);
  }
  std::vector<const FeatureRows*> all;
  for (const auto& x : xs) all.push_back(&x);
  const Eigen::Matrix2Xd batch = forward(net, all);
  for (int i = 0; i < 6; ++i) {
    const FeatureRows* one[] = {&xs[static_cast<std::size_t>(i)]};
    const Eigen::Matrix2Xd y = forward(net, one);
    EXPECT_NEAR(y(0, 0), batch(0, i), 1e-12);
    EXPECT_NEAR(y(1, 0), batch(1, i), 1e-12);
  }
}

TEST(Properties, CheckpointRoundTripIsLossless) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    ModelConfig c;
    c.input_dim = 3 + static_cast<int>(s);
    c.ff_size = 4;
    c.hidden_size = 2 + static_cast<int>(s);
    c.seed = s;
    Checkpoint ck;
    ck.net = Network::initialize(c);
    ck.target = "velocity";
    ck.feature_set = "mfcc_pitch_energy";
    ck.standardizer.mean.assign(static_cast<std::size_t>(c.input_dim), 0.25 * static_cast<double>(s));
    ck.standardizer.scale.assign(static_cast<std::size_t>(c.input_dim), 1.0 / 3.0);
    ck.normalizer = Normalizer::fit(std::vector<std::array<double, 2>>{{0.0, 1.0 / 7.0}, {1e-3, 2.0}});
    EXPECT_TRUE(decode_checkpoint(encode_checkpoint(ck)) == ck);
  }
}
