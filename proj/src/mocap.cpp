#include "gesture/mocap.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "gesture/csv.hpp"

namespace gesture {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

struct Token {
  std::string_view text;
  int line;
};

std::vector<Token> tokenize(std::string_view text, int first_line) {
  std::vector<Token> out;
  int line = first_line;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else {
      const std::size_t start = i;
      while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\r' &&
             text[i] != '\n') {
        ++i;
      }
      out.push_back({text.substr(start, i - start), line});
    }
  }
  return out;
}

[[noreturn]] void fail(ErrorCode code, int line, const std::string& msg) {
  throw Error(code, "BVH line " + std::to_string(line) + ": " + msg);
}

double parse_number(std::string_view s, int line, ErrorCode code = ErrorCode::BvhNonNumeric) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    fail(code, line, "non-numeric value '" + std::string(s) + "'");
  }
  return v;
}

std::optional<ChannelTag> parse_channel(std::string_view s) {
  static constexpr std::array<std::pair<std::string_view, ChannelTag>, 6> kTags{{
      {"Xposition", ChannelTag::Xposition},
      {"Yposition", ChannelTag::Yposition},
      {"Zposition", ChannelTag::Zposition},
      {"Xrotation", ChannelTag::Xrotation},
      {"Yrotation", ChannelTag::Yrotation},
      {"Zrotation", ChannelTag::Zrotation},
  }};
  for (const auto& [name, tag] : kTags) {
    if (name == s) return tag;
  }
  return std::nullopt;
}

class HierarchyParser {
 public:
  HierarchyParser(std::vector<Token> tokens, double scale) : toks_(std::move(tokens)), scale_(scale) {}

  void parse() {
    expect("HIERARCHY");
    expect("ROOT");
    parse_joint(std::nullopt);
    if (pos_ < toks_.size()) {
      fail(ErrorCode::BvhMalformedHeader, toks_[pos_].line,
           "unexpected token '" + std::string(toks_[pos_].text) + "' after root joint");
    }
  }

  std::vector<Joint> joints;
  std::vector<EndSite> end_sites;

 private:
  const Token& next(std::string_view what) {
    if (pos_ >= toks_.size()) {
      const int line = toks_.empty() ? 1 : toks_.back().line;
      fail(ErrorCode::BvhMalformedHeader, line, "unexpected end of HIERARCHY, expected " + std::string(what));
    }
    return toks_[pos_++];
  }

  void expect(std::string_view word) {
    const Token& t = next(word);
    if (t.text != word) {
      fail(ErrorCode::BvhMalformedHeader, t.line,
           "expected '" + std::string(word) + "', found '" + std::string(t.text) + "'");
    }
  }

  Eigen::Vector3d parse_offset() {
    expect("OFFSET");
    Eigen::Vector3d v;
    for (int k = 0; k < 3; ++k) {
      const Token& t = next("offset component");
      v[k] = parse_number(t.text, t.line, ErrorCode::BvhMalformedHeader) * scale_;
    }
    return v;
  }

  void parse_joint(std::optional<int> parent) {
    const Token& name = next("joint name");
    Joint joint;
    joint.name = std::string(name.text);
    joint.parent = parent;
    expect("{");
    joint.offset = parse_offset();
    const Token& ch = next("CHANNELS");
    if (ch.text != "CHANNELS") {
      fail(ErrorCode::BvhMalformedHeader, ch.line, "expected CHANNELS for joint '" + joint.name + "'");
    }
    const Token& count_tok = next("channel count");
    int count = 0;
    const auto res = std::from_chars(count_tok.text.data(), count_tok.text.data() + count_tok.text.size(), count);
    if (res.ec != std::errc() || count < 0 || count > 6) {
      fail(ErrorCode::BvhMalformedHeader, count_tok.line, "invalid channel count");
    }
    for (int k = 0; k < count; ++k) {
      const Token& t = next("channel tag");
      const auto tag = parse_channel(t.text);
      if (!tag) fail(ErrorCode::BvhMalformedHeader, t.line, "unknown channel tag '" + std::string(t.text) + "'");
      joint.channels.push_back(*tag);
    }
    const int self = static_cast<int>(joints.size());
    joints.push_back(std::move(joint));
    while (true) {
      const Token& t = next("JOINT, End Site or }");
      if (t.text == "}") return;
      if (t.text == "JOINT") {
        parse_joint(self);
      } else if (t.text == "End") {
        expect("Site");
        expect("{");
        EndSite site;
        site.parent = self;
        site.name = joints[static_cast<std::size_t>(self)].name + "_End";
        site.offset = parse_offset();
        expect("}");
        end_sites.push_back(std::move(site));
      } else {
        fail(ErrorCode::BvhMalformedHeader, t.line, "unexpected token '" + std::string(t.text) + "'");
      }
    }
  }

  std::vector<Token> toks_;
  double scale_;
  std::size_t pos_ = 0;
};

std::string_view next_line(std::string_view text, std::size_t& pos) {
  std::size_t nl = text.find('\n', pos);
  if (nl == std::string_view::npos) nl = text.size();
  std::string_view line = text.substr(pos, nl - pos);
  pos = nl + 1;
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
  while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
  return line;
}

Eigen::Matrix3d axis_rotation(int axis, double degrees) {
  return Eigen::AngleAxisd(degrees * kDegToRad, Eigen::Vector3d::Unit(axis)).toRotationMatrix();
}

}  // namespace

std::string_view to_string(ChannelTag tag) {
  switch (tag) {
    case ChannelTag::Xposition: return "Xposition";
    case ChannelTag::Yposition: return "Yposition";
    case ChannelTag::Zposition: return "Zposition";
    case ChannelTag::Xrotation: return "Xrotation";
    case ChannelTag::Yrotation: return "Yrotation";
    case ChannelTag::Zrotation: return "Zrotation";
  }
  return "?";
}

Skeleton::Skeleton(std::vector<Joint> joints, std::vector<EndSite> end_sites)
    : joints_(std::move(joints)), end_sites_(std::move(end_sites)) {
  int roots = 0;
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    Joint& j = joints_[i];
    if (!j.parent) {
      ++roots;
    } else if (*j.parent < 0 || static_cast<std::size_t>(*j.parent) >= i) {
      throw Error(ErrorCode::BvhMalformedHeader, "joint '" + j.name + "' is not in topological order");
    }
    if (!j.offset.allFinite()) throw Error(ErrorCode::BvhMalformedHeader, "non-finite offset for '" + j.name + "'");
    j.first_channel = channel_count_;
    channel_count_ += static_cast<int>(j.channels.size());
  }
  if (roots != 1) throw Error(ErrorCode::BvhMalformedHeader, "skeleton must have exactly one root");
  for (const EndSite& e : end_sites_) {
    if (e.parent < 0 || static_cast<std::size_t>(e.parent) >= joints_.size() || !e.offset.allFinite()) {
      throw Error(ErrorCode::BvhMalformedHeader, "invalid end site '" + e.name + "'");
    }
  }
}

std::optional<int> Skeleton::find_joint(std::string_view name) const {
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    if (joints_[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<int> Skeleton::find_end_site(std::string_view name) const {
  for (std::size_t i = 0; i < end_sites_.size(); ++i) {
    if (end_sites_[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

bool Skeleton::operator==(const Skeleton& other) const {
  if (joints_.size() != other.joints_.size() || end_sites_.size() != other.end_sites_.size()) return false;
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const Joint& a = joints_[i];
    const Joint& b = other.joints_[i];
    if (a.name != b.name || a.parent != b.parent || a.offset != b.offset || a.channels != b.channels) return false;
  }
  for (std::size_t i = 0; i < end_sites_.size(); ++i) {
    const EndSite& a = end_sites_[i];
    const EndSite& b = other.end_sites_[i];
    if (a.name != b.name || a.parent != b.parent || a.offset != b.offset) return false;
  }
  return true;
}

BvhDocument parse_bvh(std::string_view text, const BvhOptions& options) {
  // Split at the MOTION keyword (must start a line).
  std::size_t motion_pos = std::string_view::npos;
  int motion_line = 1;
  {
    std::size_t pos = 0;
    int line = 1;
    while (pos < text.size()) {
      const std::size_t start = pos;
      const std::string_view l = next_line(text, pos);
      if (l == "MOTION") {
        motion_pos = start;
        motion_line = line;
        break;
      }
      ++line;
    }
  }
  if (motion_pos == std::string_view::npos) fail(ErrorCode::BvhMalformedHeader, 1, "missing MOTION section");

  HierarchyParser hp(tokenize(text.substr(0, motion_pos), 1), options.scale);
  hp.parse();
  Skeleton skeleton(std::move(hp.joints), std::move(hp.end_sites));
  const int channels = skeleton.channel_count();

  std::size_t pos = motion_pos;
  next_line(text, pos);  // MOTION
  int line = motion_line + 1;

  auto header_value = [&](std::string_view key) {
    while (pos < text.size()) {
      const std::string_view l = next_line(text, pos);
      const int this_line = line++;
      if (l.empty()) continue;
      if (l.substr(0, key.size()) != key) {
        fail(ErrorCode::BvhMalformedHeader, this_line,
             "MOTION section: expected '" + std::string(key) + "', found '" + std::string(l) + "'");
      }
      std::string_view v = l.substr(key.size());
      while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
      return std::pair{v, this_line};
    }
    fail(ErrorCode::BvhMalformedHeader, line, "MOTION section: missing '" + std::string(key) + "'");
  };

  const auto [frames_text, frames_line] = header_value("Frames:");
  int declared = 0;
  {
    const auto res = std::from_chars(frames_text.data(), frames_text.data() + frames_text.size(), declared);
    if (res.ec != std::errc() || res.ptr != frames_text.data() + frames_text.size() || declared < 0) {
      fail(ErrorCode::BvhMalformedHeader, frames_line, "MOTION section: invalid frame count");
    }
  }
  if (declared < 2) fail(ErrorCode::BvhMalformedHeader, frames_line, "MOTION section: at least 2 frames required");
  const auto [ft_text, ft_line] = header_value("Frame Time:");
  const double frame_time = parse_number(ft_text, ft_line, ErrorCode::BvhMalformedHeader);
  if (!(frame_time > 0.0)) fail(ErrorCode::BvhBadFrameTime, ft_line, "frame time must be positive");

  std::vector<std::pair<std::string_view, int>> rows;
  while (pos < text.size()) {
    const std::string_view l = next_line(text, pos);
    const int this_line = line++;
    if (!l.empty()) rows.emplace_back(l, this_line);
  }
  if (static_cast<int>(rows.size()) != declared) {
    fail(ErrorCode::BvhFrameCountMismatch, frames_line,
         "MOTION section declares Frames: " + std::to_string(declared) + " but contains " +
             std::to_string(rows.size()) + " data rows");
  }

  MotionClip motion;
  motion.clip_id = options.clip_id;
  motion.frame_time = frame_time;
  motion.frames.resize(declared, channels);
  std::vector<double> is_translation(static_cast<std::size_t>(channels), 0.0);
  for (const Joint& j : skeleton.joints()) {
    for (std::size_t k = 0; k < j.channels.size(); ++k) {
      if (!is_rotation(j.channels[k])) is_translation[static_cast<std::size_t>(j.first_channel) + k] = 1.0;
    }
  }
  for (int f = 0; f < declared; ++f) {
    const auto toks = tokenize(rows[static_cast<std::size_t>(f)].first, rows[static_cast<std::size_t>(f)].second);
    if (static_cast<int>(toks.size()) != channels) {
      fail(ErrorCode::BvhChannelCountMismatch, rows[static_cast<std::size_t>(f)].second,
           "frame has " + std::to_string(toks.size()) + " values, skeleton declares " +
               std::to_string(channels) + " channels");
    }
    for (int c = 0; c < channels; ++c) {
      double v = parse_number(toks[static_cast<std::size_t>(c)].text, toks[static_cast<std::size_t>(c)].line);
      if (is_translation[static_cast<std::size_t>(c)] != 0.0) v *= options.scale;
      motion.frames(f, c) = v;
    }
  }
  return {std::move(skeleton), std::move(motion)};
}

std::string write_bvh(const Skeleton& skeleton, const MotionClip& motion) {
  std::ostringstream out;
  const auto& joints = skeleton.joints();
  auto vec = [](const Eigen::Vector3d& v) {
    return csv::format_double(v.x()) + " " + csv::format_double(v.y()) + " " + csv::format_double(v.z());
  };
  // Recursive emit in index order; children follow their parent.
  auto emit = [&](auto&& self, int j, int depth) -> void {
    const std::string ind(static_cast<std::size_t>(depth) * 2, ' ');
    const Joint& joint = joints[static_cast<std::size_t>(j)];
    out << ind << (joint.parent ? "JOINT " : "ROOT ") << joint.name << "\n" << ind << "{\n";
    out << ind << "  OFFSET " << vec(joint.offset) << "\n";
    out << ind << "  CHANNELS " << joint.channels.size();
    for (ChannelTag t : joint.channels) out << ' ' << to_string(t);
    out << "\n";
    for (std::size_t c = 0; c < joints.size(); ++c) {
      if (joints[c].parent && *joints[c].parent == j) self(self, static_cast<int>(c), depth + 1);
    }
    for (const EndSite& e : skeleton.end_sites()) {
      if (e.parent == j) {
        out << ind << "  End Site\n" << ind << "  {\n" << ind << "    OFFSET " << vec(e.offset) << "\n"
            << ind << "  }\n";
      }
    }
    out << ind << "}\n";
  };
  out << "HIERARCHY\n";
  for (std::size_t j = 0; j < joints.size(); ++j) {
    if (!joints[j].parent) emit(emit, static_cast<int>(j), 0);
  }
  out << "MOTION\nFrames: " << motion.frame_count() << "\nFrame Time: " << csv::format_double(motion.frame_time)
      << "\n";
  for (int f = 0; f < motion.frame_count(); ++f) {
    for (int c = 0; c < motion.frames.cols(); ++c) {
      if (c) out << ' ';
      out << csv::format_double(motion.frames(f, c));
    }
    out << "\n";
  }
  return out.str();
}

std::string_view role_name(JointRole role) {
  switch (role) {
    case JointRole::Shoulder: return "shoulder";
    case JointRole::Elbow: return "elbow";
    case JointRole::Wrist: return "wrist";
    case JointRole::WristBase: return "wrist_base";
    case JointRole::FingerIndex: return "index_tip";
    case JointRole::FingerMiddle: return "middle_tip";
    case JointRole::FingerRing: return "ring_tip";
    case JointRole::FingerPinky: return "pinky_tip";
  }
  return "?";
}

std::optional<JointRole> parse_role(std::string_view name) {
  for (std::size_t r = 0; r < kRoleCount; ++r) {
    if (role_name(static_cast<JointRole>(r)) == name) return static_cast<JointRole>(r);
  }
  return std::nullopt;
}

const std::vector<Eigen::Vector3d>& JointTrajectory::at(JointRole role, Hand hand) const {
  const auto& t = tracks[track_slot(role, hand)];
  if (t.empty()) {
    throw Error(ErrorCode::UnmappedRole, "role " + std::string(hand == Hand::Left ? "left." : "right.") +
                                             std::string(role_name(role)) + " has no trajectory");
  }
  return t;
}

std::vector<Eigen::Vector3d>& JointTrajectory::at(JointRole role, Hand hand) {
  return const_cast<std::vector<Eigen::Vector3d>&>(std::as_const(*this).at(role, hand));
}

Eigen::Matrix3d joint_rotation(const Joint& joint, const double* row) {
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  for (std::size_t k = 0; k < joint.channels.size(); ++k) {
    const ChannelTag t = joint.channels[k];
    if (is_rotation(t)) r = r * axis_rotation(axis_of(t), row[joint.first_channel + static_cast<int>(k)]);
  }
  return r;
}

Pose compute_pose(const Skeleton& skeleton, const double* row) {
  const auto& joints = skeleton.joints();
  Pose pose;
  pose.rotation.resize(joints.size());
  pose.position.resize(joints.size());
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const Joint& joint = joints[j];
    Eigen::Vector3d t = joint.offset;
    for (std::size_t k = 0; k < joint.channels.size(); ++k) {
      const ChannelTag tag = joint.channels[k];
      if (!is_rotation(tag)) t[axis_of(tag)] += row[joint.first_channel + static_cast<int>(k)];
    }
    const Eigen::Matrix3d local = joint_rotation(joint, row);
    if (joint.parent) {
      const auto p = static_cast<std::size_t>(*joint.parent);
      pose.position[j] = pose.position[p] + pose.rotation[p] * t;
      pose.rotation[j] = pose.rotation[p] * local;
    } else {
      pose.position[j] = t;
      pose.rotation[j] = local;
    }
  }
  return pose;
}

JointTrajectory forward_kinematics(const Skeleton& skeleton, const MotionClip& motion, const JointMap& joint_map) {
  if (motion.frames.cols() != skeleton.channel_count()) {
    throw Error(ErrorCode::BvhChannelCountMismatch, "motion clip channel count does not match skeleton");
  }
  struct Target {
    std::size_t slot;
    int joint = -1;     // joint index, or
    int end_site = -1;  // end-site index
  };
  std::vector<Target> targets;
  for (Hand h : kHands) {
    for (JointRole r : kArmRoles) {
      if (!joint_map.count({r, h})) {
        throw Error(ErrorCode::UnmappedRole, std::string("required role ") + (h == Hand::Left ? "left." : "right.") +
                                                 std::string(role_name(r)) + " is not mapped");
      }
    }
  }
  for (const auto& [key, name] : joint_map) {
    Target t{track_slot(key.first, key.second)};
    if (auto j = skeleton.find_joint(name)) {
      t.joint = *j;
    } else if (auto e = skeleton.find_end_site(name)) {
      t.end_site = *e;
    } else {
      throw Error(ErrorCode::UnknownJoint, "joint map refers to unknown joint '" + name + "'");
    }
    targets.push_back(t);
  }

  JointTrajectory traj;
  traj.clip_id = motion.clip_id;
  traj.frame_time = motion.frame_time;
  traj.frames = motion.frame_count();
  for (const Target& t : targets) traj.tracks[t.slot].resize(static_cast<std::size_t>(traj.frames));

  for (int f = 0; f < traj.frames; ++f) {
    const Pose pose = compute_pose(skeleton, motion.frames.row(f).data());
    for (const Target& t : targets) {
      Eigen::Vector3d p;
      if (t.joint >= 0) {
        p = pose.position[static_cast<std::size_t>(t.joint)];
      } else {
        const EndSite& e = skeleton.end_sites()[static_cast<std::size_t>(t.end_site)];
        const auto parent = static_cast<std::size_t>(e.parent);
        p = pose.position[parent] + pose.rotation[parent] * e.offset;
      }
      traj.tracks[t.slot][static_cast<std::size_t>(f)] = p;
    }
  }
  traj.glitches = find_glitches(traj);
  return traj;
}

std::vector<Glitch> find_glitches(const JointTrajectory& traj) {
  std::vector<Glitch> out;
  for (std::size_t r = 0; r < kRoleCount; ++r) {
    for (Hand h : kHands) {
      const auto& track = traj.tracks[track_slot(static_cast<JointRole>(r), h)];
      for (std::size_t f = 1; f < track.size(); ++f) {
        const double d = (track[f] - track[f - 1]).norm();
        if (!(d < kGlitchDisplacement)) {
          out.push_back({static_cast<JointRole>(r), h, static_cast<int>(f), d});
        }
      }
    }
  }
  return out;
}

Eigen::Vector3d euler_from_matrix(const Eigen::Matrix3d& r, const std::array<int, 3>& order) {
  const int i = order[0];
  const int j = order[1];
  const int k = order[2];
  const bool cyclic = (j == (i + 1) % 3) && (k == (j + 1) % 3);
  const double s = cyclic ? 1.0 : -1.0;
  const double sin_b = std::clamp(s * r(i, k), -1.0, 1.0);
  double a = 0.0;
  double b = std::asin(sin_b);
  double c = 0.0;
  if (std::abs(sin_b) < 1.0 - 1e-12) {
    a = std::atan2(-s * r(j, k), r(k, k));
    c = std::atan2(-s * r(i, j), r(i, i));
  } else {
    a = std::atan2(s * r(k, j), r(j, j));
  }
  return Eigen::Vector3d(a, b, c) / kDegToRad;
}

}  // namespace gesture
