#include "gesture/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "gesture/corpus.hpp"
#include "gesture/csv.hpp"
#include "gesture/rng.hpp"

namespace gesture {

namespace {

constexpr double kPi = std::numbers::pi;
const std::vector<ChannelTag> kRot{ChannelTag::Zrotation, ChannelTag::Xrotation, ChannelTag::Yrotation};
const std::vector<ChannelTag> kRoot{ChannelTag::Xposition, ChannelTag::Yposition, ChannelTag::Zposition,
                                    ChannelTag::Zrotation, ChannelTag::Xrotation, ChannelTag::Yrotation};
constexpr std::array<const char*, 4> kFingerNames{"Index", "Middle", "Ring", "Pinky"};

struct ArmJoints {
  int arm = 0, fore = 0, hand = 0;
  std::array<int, 4> fingers{};
};

// Joint indices fixed by the construction order in synth_skeleton().
ArmJoints arm_joints(const Skeleton& sk, Hand h) {
  const std::string side = h == Hand::Left ? "Left" : "Right";
  ArmJoints a;
  a.arm = *sk.find_joint(side + "Arm");
  a.fore = *sk.find_joint(side + "ForeArm");
  a.hand = *sk.find_joint(side + "Hand");
  for (std::size_t i = 0; i < 4; ++i) a.fingers[i] = *sk.find_joint(side + "Hand" + kFingerNames[i]);
  return a;
}

struct StrokeShape {
  double start = 0.0, end = 0.0;
  double cycles = 1.0, skew = 1.0;
  std::array<double, 2> abduct{}, forward{}, twist{}, flex{}, curl{};
};

double envelope(double s, double skew) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double v = std::sin(kPi * std::pow(s, skew));
  return v * v;
}

}  // namespace

Skeleton synth_skeleton() {
  std::vector<Joint> joints;
  std::vector<EndSite> ends;
  auto add = [&](std::string name, std::optional<int> parent, Eigen::Vector3d offset,
                 const std::vector<ChannelTag>& ch) {
    joints.push_back(Joint{std::move(name), parent, offset, ch, 0});
    return static_cast<int>(joints.size()) - 1;
  };
  auto end = [&](int parent, Eigen::Vector3d offset) {
    ends.push_back(EndSite{joints[static_cast<std::size_t>(parent)].name + "_End", parent, offset});
  };
  const int hips = add("Hips", std::nullopt, {0, 0, 0}, kRoot);
  const int spine = add("Spine", hips, {0, 10, 0}, kRot);
  const int chest = add("Chest", spine, {0, 25, 0}, kRot);
  const int neck = add("Neck", chest, {0, 20, 0}, kRot);
  const int head = add("Head", neck, {0, 10, 0}, kRot);
  end(head, {0, 12, 0});
  for (Hand h : kHands) {
    const double sx = h == Hand::Left ? 1.0 : -1.0;
    const std::string side = h == Hand::Left ? "Left" : "Right";
    const int sh = add(side + "Shoulder", chest, {4 * sx, 18, 0}, kRot);
    const int arm = add(side + "Arm", sh, {14 * sx, 0, 0}, kRot);
    const int fore = add(side + "ForeArm", arm, {28 * sx, 0, 0}, kRot);
    const int hand = add(side + "Hand", fore, {25 * sx, 0, 0}, kRot);
    const std::array<double, 4> lateral{3, 1, -1, -3};
    const std::array<double, 4> length{5, 5.5, 5, 4};
    for (std::size_t i = 0; i < 4; ++i) {
      const int f = add(side + "Hand" + kFingerNames[i], hand, {(i == 3 ? 8 : 9) * sx, 0, lateral[i]}, kRot);
      end(f, {length[i] * sx, 0, 0});
    }
  }
  return Skeleton(std::move(joints), std::move(ends));
}

JointMap synth_joint_map() {
  JointMap m;
  for (Hand h : kHands) {
    const std::string side = h == Hand::Left ? "Left" : "Right";
    m[{JointRole::Shoulder, h}] = side + "Arm";
    m[{JointRole::Elbow, h}] = side + "ForeArm";
    m[{JointRole::Wrist, h}] = side + "Hand";
    m[{JointRole::WristBase, h}] = side + "Hand";
    m[{JointRole::FingerIndex, h}] = side + "HandIndex_End";
    m[{JointRole::FingerMiddle, h}] = side + "HandMiddle_End";
    m[{JointRole::FingerRing, h}] = side + "HandRing_End";
    m[{JointRole::FingerPinky, h}] = side + "HandPinky_End";
  }
  return m;
}

SynthCorpus generate_corpus(const SynthOptions& o) {
  if (o.strokes < 1 || o.strokes_per_clip < 1 || o.datasets < 1 || !(o.frame_time > 0.0) ||
      !supported_sample_rate(o.sample_rate)) {
    throw Error(ErrorCode::ConfigInvalid, "invalid synthetic corpus options");
  }
  SynthCorpus corpus;
  corpus.options = o;
  corpus.skeleton = synth_skeleton();
  const Skeleton& sk = corpus.skeleton;
  const std::array<ArmJoints, 2> arms{arm_joints(sk, Hand::Left), arm_joints(sk, Hand::Right)};
  const int hips = 0;

  const int n_clips = (o.strokes + o.strokes_per_clip - 1) / o.strokes_per_clip;
  for (int c = 0; c < n_clips; ++c) {
    Rng rng(derive_seed(o.seed, static_cast<std::uint64_t>(c)));
    SynthClip clip;
    char id[16];
    std::snprintf(id, sizeof id, "c%03d", c);
    clip.clip_id = id;
    clip.dataset_id = std::string("synth") + static_cast<char>('A' + c % o.datasets);
    const int count = std::min(o.strokes_per_clip, o.strokes - c * o.strokes_per_clip);

    std::vector<StrokeShape> shapes;
    const double level_db = rng.uniform(-30.0, -6.0);
    double t = rng.uniform(0.5, 1.0);
    for (int k = 0; k < count; ++k) {
      StrokeShape s;
      s.start = std::round(t / o.frame_time) * o.frame_time;
      s.end = s.start + std::round(rng.uniform(0.5, 1.5) / o.frame_time) * o.frame_time;
      s.cycles = rng.uniform(0.5, 1.5);
      s.skew = rng.uniform(0.8, 1.6);
      const double u = rng.uniform(0.3, 1.0);
      const double twist = rng.uniform(-35.0, 35.0);
      const double curl = rng.uniform(0.0, 70.0);
      for (std::size_t h = 0; h < 2; ++h) {
        s.abduct[h] = 25.0 * u * rng.uniform(0.85, 1.15);
        s.forward[h] = 35.0 * u * rng.uniform(0.85, 1.15);
        s.twist[h] = twist + rng.uniform(-5.0, 5.0);
        s.flex[h] = 30.0 * u * rng.uniform(0.85, 1.15);
        s.curl[h] = curl + rng.uniform(-5.0, 5.0);
      }
      shapes.push_back(s);

      StrokeRecord rec;
      char sid[32];
      std::snprintf(sid, sizeof sid, "%s_s%02d", id, k);
      rec.stroke_id = sid;
      rec.clip_id = clip.clip_id;
      rec.dataset_id = clip.dataset_id;
      rec.start_s = s.start;
      rec.end_s = s.end;
      rec.source = rng.bernoulli(0.5) ? StrokeSource::Hand : StrokeSource::Automatic;
      clip.strokes.push_back(rec);
      clip.loudness_db.push_back(level_db + rng.uniform(-3.0, 3.0));
      t = s.end + rng.uniform(0.8, 2.0);
    }
    const double last_end = shapes.back().end;
    const int frames = static_cast<int>(std::lround((last_end + rng.uniform(0.8, 1.5)) / o.frame_time)) + 1;
    const double duration = (frames - 1) * o.frame_time;

    // motion
    clip.motion.clip_id = clip.clip_id;
    clip.motion.frame_time = o.frame_time;
    clip.motion.frames = FrameMatrix::Zero(frames, sk.channel_count());
    const double sway_phase = rng.uniform(0.0, 2.0 * kPi);
    for (int f = 0; f < frames; ++f) {
      const double time = f * o.frame_time;
      double* row = clip.motion.frames.row(f).data();
      const int rc = sk.joints()[hips].first_channel;
      row[rc + 1] = 100.0 + 0.5 * std::sin(2.0 * kPi * 0.2 * time);
      row[rc + 5] = 3.0 * std::sin(2.0 * kPi * 0.1 * time + sway_phase);
      const StrokeShape* active = nullptr;
      for (const auto& s : shapes) {
        if (time > s.start && time < s.end) active = &s;
      }
      for (Hand h : kHands) {
        const std::size_t hi = index(h);
        const double sx = h == Hand::Left ? 1.0 : -1.0;
        double abd = 75.0 + 2.0 * std::sin(2.0 * kPi * 0.25 * time + sway_phase + static_cast<double>(hi));
        double fwd = 10.0, tw = 0.0, flex = 70.0, curl = 15.0;
        if (active) {
          const double s = (time - active->start) / (active->end - active->start);
          const double b = envelope(s, active->skew);
          abd += active->abduct[hi] * b * std::sin(2.0 * kPi * active->cycles * s);
          fwd += active->forward[hi] * b;
          tw += active->twist[hi] * b;
          flex += active->flex[hi] * b;
          curl += active->curl[hi] * b;
        }
        const ArmJoints& a = arms[hi];
        const auto& J = sk.joints();
        // channel order per joint: Z, X, Y
        double* arm = row + J[static_cast<std::size_t>(a.arm)].first_channel;
        arm[0] = -sx * abd;
        arm[1] = sx * tw;
        arm[2] = -sx * fwd;
        double* fore = row + J[static_cast<std::size_t>(a.fore)].first_channel;
        fore[2] = -sx * flex;
        for (int fj : a.fingers) row[J[static_cast<std::size_t>(fj)].first_channel] = -sx * curl;
      }
    }

    // audio
    Rng noise(derive_seed(o.seed ^ 0x5eedau, static_cast<std::uint64_t>(c)));
    clip.audio.clip_id = clip.clip_id;
    clip.audio.sample_rate = o.sample_rate;
    const auto n_samples = static_cast<std::size_t>(std::llround(duration * o.sample_rate));
    clip.audio.samples.resize(n_samples);
    for (auto& x : clip.audio.samples) x = noise.uniform(-1e-3, 1e-3);
    for (std::size_t k = 0; k < shapes.size(); ++k) {
      const double from = k == 0 ? 0.1 : 0.5 * (shapes[k - 1].end + shapes[k].start);
      const double to = k + 1 == shapes.size() ? duration - 0.1 : 0.5 * (shapes[k].end + shapes[k + 1].start);
      const double gain = std::pow(10.0, clip.loudness_db[k] / 20.0) / 2.3;
      const double f_base = rng.uniform(100.0, 200.0);
      const auto i0 = static_cast<std::size_t>(std::llround(from * o.sample_rate));
      const auto i1 = std::min(n_samples, static_cast<std::size_t>(std::llround(to * o.sample_rate)));
      double phase = 0.0;
      for (std::size_t i = i0; i < i1; ++i) {
        const double tt = static_cast<double>(i - i0) / o.sample_rate;
        const double f0 = f_base * (1.0 + 0.1 * std::sin(2.0 * kPi * 3.0 * tt));
        phase += 2.0 * kPi * f0 / o.sample_rate;
        const double ramp = std::min({1.0, tt / 0.02, (to - from - tt) / 0.02});
        const double env = std::max(0.0, ramp) * (0.75 + 0.25 * std::cos(2.0 * kPi * 4.0 * tt));
        double v = 0.0;
        for (int hmn = 1; hmn <= 5; ++hmn) v += std::sin(hmn * phase) / hmn;
        clip.audio.samples[i] += gain * env * v;
      }
    }
    corpus.clips.push_back(std::move(clip));
  }
  return corpus;
}

std::string joint_map_csv(const JointMap& map) {
  std::ostringstream out;
  out << "role,hand,name\n";
  for (const auto& [key, name] : map) {
    out << role_name(key.first) << "," << hand_suffix(key.second) << "," << name << "\n";
  }
  return out.str();
}

JointMap parse_joint_map_csv(std::string_view text) {
  const csv::Table t = csv::parse(text);
  const int cr = t.column("role"), ch = t.column("hand"), cn = t.column("name");
  if (cr < 0 || ch < 0 || cn < 0) {
    throw Error(ErrorCode::ConfigInvalid, "joint map needs columns role, hand, name");
  }
  JointMap map;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row.size() != t.header.size()) {
      throw Error(ErrorCode::ConfigInvalid, "joint map line " + std::to_string(t.lines[i]) + ": wrong field count");
    }
    const auto role = parse_role(row[static_cast<std::size_t>(cr)]);
    if (!role) {
      throw Error(ErrorCode::ConfigInvalid, "joint map line " + std::to_string(t.lines[i]) + ": unknown role '" +
                                                row[static_cast<std::size_t>(cr)] + "'");
    }
    const std::string& hs = row[static_cast<std::size_t>(ch)];
    if (hs != "L" && hs != "R") {
      throw Error(ErrorCode::ConfigInvalid,
                  "joint map line " + std::to_string(t.lines[i]) + ": hand must be L or R, got '" + hs + "'");
    }
    map[{*role, hs == "L" ? Hand::Left : Hand::Right}] = row[static_cast<std::size_t>(cn)];
  }
  return map;
}

std::string write_corpus(const SynthCorpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  for (const char* sub : {"wav", "bvh", "labels"}) fs::create_directories(fs::path(dir) / sub);
  std::ostringstream manifest;
  manifest << "clip_id,dataset_id,audio_path,bvh_path,labels_path,scale_factor\n";
  for (const SynthClip& clip : corpus.clips) {
    const std::string wav = "wav/" + clip.clip_id + ".wav";
    const std::string bvh = "bvh/" + clip.clip_id + ".bvh";
    const std::string lab = "labels/" + clip.clip_id + ".csv";
    const auto bytes = encode_wav_pcm16(clip.audio);
    io::write_file((fs::path(dir) / wav).string(),
                   std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    io::write_file((fs::path(dir) / bvh).string(), write_bvh(corpus.skeleton, clip.motion));
    std::ostringstream labels;
    labels << "stroke_id,clip_id,start_s,end_s,source\n";
    for (const StrokeRecord& s : clip.strokes) {
      labels << s.stroke_id << "," << s.clip_id << "," << csv::format_double(s.start_s) << ","
             << csv::format_double(s.end_s) << "," << (s.source == StrokeSource::Hand ? "hand" : "automatic")
             << "\n";
    }
    io::write_file((fs::path(dir) / lab).string(), labels.str());
    manifest << clip.clip_id << "," << clip.dataset_id << "," << wav << "," << bvh << "," << lab << ","
             << csv::format_double(corpus.options.bvh_scale) << "\n";
  }
  const std::string path = (fs::path(dir) / "manifest.csv").string();
  io::write_file(path, manifest.str());
  io::write_file((fs::path(dir) / "joint_map.csv").string(), joint_map_csv(synth_joint_map()));
  return path;
}

double clip_mean_energy(const FeatureMatrix& clip_features) {
  const auto& names = clip_features.feature_names;
  const auto it = std::find(names.begin(), names.end(), "log_energy");
  if (it == names.end()) {
    throw Error(ErrorCode::UnknownFeatureSet, "features of clip '" + clip_features.clip_id + "' have no log_energy");
  }
  const auto col = static_cast<Eigen::Index>(it - names.begin());
  return clip_features.frame_features.col(col).head(clip_features.valid_len).mean();
}

}  // namespace gesture
