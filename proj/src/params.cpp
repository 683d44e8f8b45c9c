#include "gesture/params.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gesture/csv.hpp"

namespace gesture {

namespace {

Positions slice(const JointTrajectory& traj, JointRole role, Hand hand, FrameInterval interval) {
  const auto& track = traj.at(role, hand);
  if (interval.first < 0 || interval.last >= static_cast<int>(track.size()) || interval.count() < 1) {
    throw Error(ErrorCode::IntervalTooShort, "frame interval [" + std::to_string(interval.first) + ", " +
                                                 std::to_string(interval.last) + "] outside the clip");
  }
  return Positions(track).subspan(static_cast<std::size_t>(interval.first),
                                  static_cast<std::size_t>(interval.count()));
}

void require_frames(FrameInterval interval, int n) {
  if (interval.count() < n) {
    throw Error(ErrorCode::IntervalTooShort,
                "interval spans " + std::to_string(interval.count()) + " frames, need at least " + std::to_string(n));
  }
}

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

}  // namespace

FrameInterval stroke_frames(const StrokeRecord& stroke, double frame_time, int frames) {
  FrameInterval iv;
  iv.first = std::clamp(static_cast<int>(std::llround(stroke.start_s / frame_time)), 0, frames - 1);
  iv.last = std::clamp(static_cast<int>(std::llround(stroke.end_s / frame_time)), 0, frames - 1);
  return iv;
}

std::vector<Eigen::Vector3d> smooth_positions(Positions p, int window) {
  const int n = static_cast<int>(p.size());
  const int half = window / 2;
  std::vector<Eigen::Vector3d> out(p.size());
  for (int t = 0; t < n; ++t) {
    const int h = std::min({half, t, n - 1 - t});
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (int k = t - h; k <= t + h; ++k) acc += p[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(t)] = acc / (2 * h + 1);
  }
  return out;
}

std::vector<double> speed_series(Positions p, double frame_time) {
  if (p.size() < 2) throw Error(ErrorCode::IntervalTooShort, "speed needs at least 2 frames");
  const auto s = smooth_positions(p);
  std::vector<double> v(p.size() - 1);
  for (std::size_t t = 0; t + 1 < s.size(); ++t) v[t] = (s[t + 1] - s[t]).norm() / frame_time;
  return v;
}

std::vector<double> wrist_speed(const JointTrajectory& traj, Hand hand, FrameInterval interval) {
  require_frames(interval, 2);
  return speed_series(slice(traj, JointRole::Wrist, hand, interval), traj.frame_time);
}

double max_velocity(std::span<const double> speed) {
  if (speed.empty()) throw Error(ErrorCode::IntervalTooShort, "empty speed series");
  return *std::max_element(speed.begin(), speed.end());
}

std::size_t first_major_peak(std::span<const double> speed, double fraction) {
  const std::size_t n = speed.size();
  const auto max_it = std::max_element(speed.begin(), speed.end());
  const double threshold = fraction * *max_it;
  for (std::size_t t = 0; t < n; ++t) {
    const bool rises = t == 0 || speed[t - 1] < speed[t];
    const bool falls = t + 1 == n || speed[t + 1] <= speed[t];
    if (rises && falls && speed[t] >= threshold) return t;
  }
  return static_cast<std::size_t>(max_it - speed.begin());
}

double initial_acceleration(std::span<const double> speed, double frame_time, double fraction) {
  if (speed.size() < 2) throw Error(ErrorCode::IntervalTooShort, "acceleration needs at least 2 speed samples");
  const std::size_t peak = first_major_peak(speed, fraction);
  if (peak == 0) return 0.0;
  return (speed[peak] - speed[0]) / (static_cast<double>(peak) * frame_time);
}

double path_length(Positions p) {
  double total = 0.0;
  for (std::size_t t = 1; t < p.size(); ++t) total += (p[t] - p[t - 1]).norm();
  return total;
}

double path_length(const JointTrajectory& traj, Hand hand, FrameInterval interval) {
  require_frames(interval, 2);
  return path_length(slice(traj, JointRole::Wrist, hand, interval));
}

double major_axis_length(Positions p, MajorAxisMode mode) {
  if (p.empty()) return 0.0;
  if (mode == MajorAxisMode::BoundingBoxDiagonal) {
    Eigen::Vector3d lo = p[0];
    Eigen::Vector3d hi = p[0];
    for (const auto& q : p) {
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    return (hi - lo).norm();
  }
  double best = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) best = std::max(best, (p[i] - p[j]).squaredNorm());
  }
  return std::sqrt(best);
}

double major_axis_length(const JointTrajectory& traj, Hand hand, FrameInterval interval, MajorAxisMode mode) {
  require_frames(interval, 1);
  return major_axis_length(slice(traj, JointRole::Wrist, hand, interval), mode);
}

std::optional<double> swivel_angle(const Eigen::Vector3d& shoulder, const Eigen::Vector3d& elbow,
                                   const Eigen::Vector3d& wrist, const SwivelOptions& options) {
  Eigen::Vector3d a = wrist - shoulder;
  const double len = a.norm();
  if (!(len > options.min_arm_length)) return std::nullopt;
  a /= len;
  const Eigen::Vector3d u = elbow - shoulder;
  const Eigen::Vector3d e = u - u.dot(a) * a;
  Eigen::Vector3d r = options.down - options.down.dot(a) * a;
  if (e.norm() < 1e-9 || r.norm() < 1e-9) return std::nullopt;
  r.normalize();
  double deg = std::atan2(a.dot(r.cross(e)), r.dot(e)) * kRadToDeg;
  if (deg <= -180.0) deg = 180.0;
  return deg;
}

double arm_swivel(const JointTrajectory& traj, Hand hand, FrameInterval interval, const SwivelOptions& options) {
  require_frames(interval, 1);
  const Positions s = slice(traj, JointRole::Shoulder, hand, interval);
  const Positions e = slice(traj, JointRole::Elbow, hand, interval);
  const Positions w = slice(traj, JointRole::Wrist, hand, interval);
  double sum = 0.0;
  int used = 0;
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (auto angle = swivel_angle(s[t], e[t], w[t], options)) {
      sum += *angle;
      ++used;
    }
  }
  if (used == 0 || 2 * used < static_cast<int>(s.size())) {
    throw Error(ErrorCode::DegenerateGeometry,
                std::string("arm swivel undefined for ") + (hand == Hand::Left ? "left" : "right") + " arm in clip '" +
                    traj.clip_id + "': " + std::to_string(s.size() - static_cast<std::size_t>(used)) + " of " +
                    std::to_string(s.size()) + " frames have the wrist at the shoulder or a vertical straight arm");
  }
  return sum / used;
}

double hand_opening(const JointTrajectory& traj, Hand hand, FrameInterval interval) {
  require_frames(interval, 1);
  for (JointRole tip : kFingertips) {
    if (!traj.has(tip, hand)) {
      throw Error(ErrorCode::MissingFingertip, std::string("fingertip role ") + (hand == Hand::Left ? "left." : "right.") +
                                                   std::string(role_name(tip)) + " is not mapped");
    }
  }
  if (!traj.has(JointRole::WristBase, hand)) {
    throw Error(ErrorCode::MissingFingertip,
                std::string("wrist_base role is not mapped for the ") + (hand == Hand::Left ? "left" : "right") + " hand");
  }
  const Positions base = slice(traj, JointRole::WristBase, hand, interval);
  double total = 0.0;
  for (std::size_t t = 0; t < base.size(); ++t) {
    double frame = 0.0;
    for (JointRole tip : kFingertips) {
      frame += (slice(traj, tip, hand, interval)[t] - base[t]).norm();
    }
    total += frame / static_cast<double>(kFingertips.size());
  }
  return total / static_cast<double>(base.size());
}

HandParams extract_hand(const JointTrajectory& traj, Hand hand, FrameInterval interval,
                        const ExtractionOptions& options) {
  require_frames(interval, 2);
  HandParams p;
  const std::vector<double> speed = wrist_speed(traj, hand, interval);
  p.max_velocity = max_velocity(speed);
  p.initial_acceleration = initial_acceleration(speed, traj.frame_time);
  p.path_length = path_length(traj, hand, interval);
  p.major_axis_length = major_axis_length(traj, hand, interval, options.major_axis);
  p.arm_swivel = arm_swivel(traj, hand, interval, options.swivel);
  p.hand_opening = hand_opening(traj, hand, interval);
  return p;
}

GestureParams extract_interval(const std::string& stroke_id, const JointTrajectory& traj, FrameInterval interval,
                               const ExtractionOptions& options) {
  GestureParams g;
  g.stroke_id = stroke_id;
  for (Hand h : kHands) g.hand(h) = extract_hand(traj, h, interval, options);
  return g;
}

GestureParams extract_all(const StrokeRecord& stroke, const JointTrajectory& traj, const ExtractionOptions& options) {
  const FrameInterval iv = stroke_frames(stroke, traj.frame_time, traj.frames);
  if (iv.count() < 2) {
    throw Error(ErrorCode::IntervalTooShort, "stroke '" + stroke.stroke_id + "' covers fewer than 2 motion frames");
  }
  return extract_interval(stroke.stroke_id, traj, iv, options);
}

std::vector<std::string> params_csv_columns() {
  std::vector<std::string> cols{"stroke_id"};
  for (ParamKind p : kAllParams) {
    for (Hand h : kHands) cols.push_back(std::string(param_name(p)) + "_" + hand_suffix(h));
  }
  return cols;
}

std::string write_params_csv(std::span<const GestureParams> params) {
  std::ostringstream out;
  const auto cols = params_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const GestureParams& g : params) {
    out << g.stroke_id;
    for (ParamKind p : kAllParams) {
      for (Hand h : kHands) out << "," << csv::format_double(g.value(p, h));
    }
    out << "\n";
  }
  return out.str();
}

std::vector<GestureParams> parse_params_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  if (table.header != params_csv_columns()) throw Error(ErrorCode::Io, "parameter CSV has unexpected columns");
  std::vector<GestureParams> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size()) {
      throw Error(ErrorCode::Io, "parameter CSV line " + std::to_string(table.lines[r]) + ": wrong column count");
    }
    GestureParams g;
    g.stroke_id = row[0];
    std::size_t c = 1;
    for (ParamKind p : kAllParams) {
      for (Hand h : kHands) g.hand(h).set(p, csv::to_double(row[c++], table.lines[r], param_name(p)));
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace gesture
