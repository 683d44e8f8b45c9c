#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "gesture/corpus.hpp"
#include "gesture/csv.hpp"
#include "gesture/synth.hpp"

using namespace gesture;

namespace {

SynthOptions tiny(std::uint64_t seed) {
  SynthOptions o;
  o.strokes = 24;
  o.strokes_per_clip = 6;
  o.seed = seed;
  return o;
}

}  // namespace

TEST(Synth, DeterministicPerSeed) {
  const SynthCorpus a = generate_corpus(tiny(3));
  const SynthCorpus b = generate_corpus(tiny(3));
  const SynthCorpus c = generate_corpus(tiny(4));
  ASSERT_EQ(a.clips.size(), 4U);
  for (std::size_t i = 0; i < a.clips.size(); ++i) {
    EXPECT_EQ(a.clips[i].audio.samples, b.clips[i].audio.samples);
    EXPECT_EQ(a.clips[i].motion, b.clips[i].motion);
    EXPECT_EQ(a.clips[i].strokes, b.clips[i].strokes);
  }
  EXPECT_NE(a.clips[0].motion, c.clips[0].motion);
}

TEST(Synth, StrokesAreUniqueOrderedAndInsideClips) {
  const SynthCorpus c = generate_corpus(tiny(1));
  std::set<std::string> ids, datasets;
  int total = 0;
  for (const SynthClip& clip : c.clips) {
    datasets.insert(clip.dataset_id);
    EXPECT_EQ(clip.loudness_db.size(), clip.strokes.size());
    EXPECT_NEAR(clip.audio.duration(), clip.motion.duration(), 0.05);
    for (std::size_t i = 0; i < clip.strokes.size(); ++i) {
      const StrokeRecord& s = clip.strokes[i];
      ids.insert(s.stroke_id);
      ++total;
      EXPECT_EQ(s.clip_id, clip.clip_id);
      EXPECT_GE(s.start_s, 0.0);
      EXPECT_LE(s.end_s, clip.motion.duration());
      EXPECT_LE(s.duration(), constants::kMaxStrokeSeconds);
      if (i > 0) EXPECT_LE(clip.strokes[i - 1].end_s, s.start_s);
    }
  }
  EXPECT_EQ(total, 24);
  EXPECT_EQ(ids.size(), 24U);
  EXPECT_EQ(datasets.size(), 2U);
}

TEST(Synth, JointMapCsvRoundTrip) {
  const JointMap m = synth_joint_map();
  EXPECT_EQ(parse_joint_map_csv(joint_map_csv(m)), m);
  const Skeleton sk = synth_skeleton();
  for (const auto& [key, name] : m) {
    EXPECT_TRUE(sk.find_joint(name).has_value() || sk.find_end_site(name).has_value()) << name;
  }
  EXPECT_THROW(parse_joint_map_csv("role,hand,name\nknee,L,LeftKnee\n"), Error);
}

TEST(Synth, WriteCorpusProducesLoadableTree) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gesture_synth_test";
  fs::remove_all(dir);
  const std::string manifest = write_corpus(generate_corpus(tiny(2)), dir.string());
  const Manifest m = load_manifest(manifest);
  ASSERT_EQ(m.entries.size(), 4U);
  for (const ManifestEntry& e : m.entries) {
    EXPECT_TRUE(fs::exists(e.audio_path));
    EXPECT_TRUE(fs::exists(e.bvh_path));
    EXPECT_EQ(load_labels(e.labels_path).size(), 6U);
    EXPECT_DOUBLE_EQ(e.scale_factor, 0.01);
  }
  EXPECT_TRUE(fs::exists(dir / "joint_map.csv"));
  fs::remove_all(dir);
}
