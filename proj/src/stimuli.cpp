#include "gesture/stimuli.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "gesture/csv.hpp"
#include "gesture/rng.hpp"

namespace gesture {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

const char* hand_word(Hand h) { return h == Hand::Left ? "left" : "right"; }

std::vector<Hand> hands_of(std::optional<Hand> only) {
  if (only) return {*only};
  return {Hand::Left, Hand::Right};
}

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::Increase ? "increase" : "decrease"; }

Direction parse_direction(std::string_view s) {
  if (s == "increase") return Direction::Increase;
  if (s == "decrease") return Direction::Decrease;
  throw Error(ErrorCode::ConfigInvalid, "unknown direction '" + std::string(s) + "' (increase or decrease)");
}

std::string_view to_string(ExpressionClass c) {
  switch (c) {
    case ExpressionClass::Low: return "low";
    case ExpressionClass::Medium: return "medium";
    case ExpressionClass::High: return "high";
  }
  return "";
}

double nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::TooFewSamples, "percentile of an empty set");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<long>(values.size());
  const long i = std::clamp(static_cast<long>(std::ceil(q * static_cast<double>(n))) - 1, 0L, n - 1);
  return values[static_cast<std::size_t>(i)];
}

PercentileBands compute_bands(std::span<const GestureParams> params) {
  if (params.size() < 4) {
    throw Error(ErrorCode::TooFewSamples,
                "percentile bands need at least 4 strokes, got " + std::to_string(params.size()));
  }
  PercentileBands b;
  for (ParamKind p : kAllParams) {
    for (Hand h : kHands) {
      std::vector<double> v;
      v.reserve(params.size());
      for (const auto& g : params) v.push_back(g.value(p, h));
      Band& band = b.bands[index(p)][index(h)];
      band.p25 = nearest_rank(v, constants::kLowerPercentile);
      band.p75 = nearest_rank(v, constants::kUpperPercentile);
      band.min = *std::min_element(v.begin(), v.end());
      band.max = *std::max_element(v.begin(), v.end());
    }
  }
  return b;
}

ExpressionClass classify(double value, const Band& band) {
  if (value < band.p25) return ExpressionClass::Low;
  if (value > band.p75) return ExpressionClass::High;
  return ExpressionClass::Medium;
}

double default_target(const Band& band, Direction d) {
  return d == Direction::Increase ? 0.5 * (band.p75 + band.max) : 0.5 * (band.min + band.p25);
}

ExpressionClass target_class(Direction d) {
  return d == Direction::Increase ? ExpressionClass::High : ExpressionClass::Low;
}

// ---- sequence selection ----

std::uint64_t window_tie_key(std::uint64_t seed, std::string_view clip_id, int grid_index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : clip_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(seed ^ h, static_cast<std::uint64_t>(grid_index));
}

std::vector<SequenceWindow> candidate_windows(std::span<const ClassifiedStroke> strokes,
                                              const ClipDurations& durations, Direction d, std::uint64_t seed,
                                              double window_s, double grid_s) {
  const ExpressionClass preferred = d == Direction::Increase ? ExpressionClass::Low : ExpressionClass::High;
  const ExpressionClass opposite = d == Direction::Increase ? ExpressionClass::High : ExpressionClass::Low;
  std::map<std::string, std::vector<const ClassifiedStroke*>> by_clip;
  for (const auto& s : strokes) {
    if (durations.find(s.stroke.clip_id) == durations.end()) {
      throw Error(ErrorCode::StrokeOutOfBounds,
                  "stroke '" + s.stroke.stroke_id + "' refers to unknown clip '" + s.stroke.clip_id + "'");
    }
    by_clip[s.stroke.clip_id].push_back(&s);
  }
  constexpr double kSlack = 1e-9;
  std::vector<SequenceWindow> out;
  for (const auto& [clip, list] : by_clip) {
    const double duration = durations.find(clip)->second;
    for (int g = 0; g * grid_s + window_s <= duration + kSlack; ++g) {
      SequenceWindow w;
      w.clip_id = clip;
      w.grid_index = g;
      w.start_s = g * grid_s;
      w.end_s = w.start_s + window_s;
      int total = 0, low = 0, high = 0, pref = 0, opp = 0;
      for (const ClassifiedStroke* s : list) {
        if (s->stroke.start_s < w.start_s - kSlack || s->stroke.end_s > w.end_s + kSlack) continue;
        w.stroke_ids.push_back(s->stroke.stroke_id);
        for (ExpressionClass c : s->cls) {
          ++total;
          low += c == ExpressionClass::Low;
          high += c == ExpressionClass::High;
          pref += c == preferred;
          opp += c == opposite;
        }
      }
      if (total == 0 || opp > 0) continue;
      w.fraction_low = static_cast<double>(low) / total;
      w.fraction_high = static_cast<double>(high) / total;
      w.score = static_cast<double>(pref) / total;
      w.tie_key = window_tie_key(seed, clip, g);
      out.push_back(std::move(w));
    }
  }
  return out;
}

std::vector<SequenceWindow> select_sequences(std::span<const ClassifiedStroke> strokes,
                                             const ClipDurations& durations, Direction d, int k, std::uint64_t seed,
                                             double window_s, double grid_s) {
  std::vector<SequenceWindow> cand = candidate_windows(strokes, durations, d, seed, window_s, grid_s);
  std::sort(cand.begin(), cand.end(), [](const SequenceWindow& a, const SequenceWindow& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.tie_key != b.tie_key) return a.tie_key < b.tie_key;
    if (a.clip_id != b.clip_id) return a.clip_id < b.clip_id;
    return a.grid_index < b.grid_index;
  });
  std::vector<SequenceWindow> chosen;
  for (auto& w : cand) {
    if (static_cast<int>(chosen.size()) == k) break;
    const bool overlaps = std::any_of(chosen.begin(), chosen.end(), [&](const SequenceWindow& c) {
      return c.clip_id == w.clip_id && c.start_s < w.end_s && w.start_s < c.end_s;
    });
    if (!overlaps) chosen.push_back(std::move(w));
  }
  if (static_cast<int>(chosen.size()) < k) {
    throw Error(ErrorCode::TooFewWindows, "only " + std::to_string(chosen.size()) +
                                              " non-overlapping eligible windows for direction '" +
                                              std::string(to_string(d)) + "', need " + std::to_string(k));
  }
  return chosen;
}

// ---- trajectory transforms ----

JointTrajectory resample_interval(const JointTrajectory& traj, FrameInterval interval,
                                  std::span<const double> source_frames, std::optional<Hand> only_hand) {
  const int m = static_cast<int>(source_frames.size());
  if (interval.first < 0 || interval.last >= traj.frames || interval.count() < 2 || m < 2) {
    throw Error(ErrorCode::IntervalTooShort, "resampling needs an interval of at least 2 frames inside the clip");
  }
  if (only_hand && m != interval.count()) {
    throw Error(ErrorCode::ShapeMismatch, "a single-hand warp must keep the frame count");
  }
  JointTrajectory out = traj;
  out.frames = traj.frames - interval.count() + m;
  for (JointRole role : {JointRole::Shoulder, JointRole::Elbow, JointRole::Wrist, JointRole::WristBase,
                         JointRole::FingerIndex, JointRole::FingerMiddle, JointRole::FingerRing,
                         JointRole::FingerPinky}) {
    for (Hand h : hands_of(only_hand)) {
      if (!traj.has(role, h)) continue;
      const auto& src = traj.at(role, h);
      std::vector<Eigen::Vector3d> dst;
      dst.reserve(static_cast<std::size_t>(out.frames));
      dst.insert(dst.end(), src.begin(), src.begin() + interval.first);
      for (double u : source_frames) {
        const double uc = std::clamp(u, 0.0, static_cast<double>(traj.frames - 1));
        const int f = std::min(static_cast<int>(std::floor(uc)), traj.frames - 2);
        const double a = uc - f;
        dst.push_back(a == 0.0 ? src[static_cast<std::size_t>(f)]
                               : Eigen::Vector3d((1.0 - a) * src[static_cast<std::size_t>(f)] +
                                                 a * src[static_cast<std::size_t>(f + 1)]));
      }
      dst.insert(dst.end(), src.begin() + interval.last + 1, src.end());
      out.at(role, h) = std::move(dst);
    }
  }
  out.glitches = find_glitches(out);
  return out;
}

JointTrajectory time_warp_frames(const JointTrajectory& traj, FrameInterval interval, int new_count,
                                 FrameInterval* out_interval) {
  if (new_count < 2) throw Error(ErrorCode::OutOfRange, "a warped stroke needs at least 2 frames");
  const double span = interval.count() - 1;
  std::vector<double> src(static_cast<std::size_t>(new_count));
  for (int j = 0; j < new_count; ++j) src[static_cast<std::size_t>(j)] = interval.first + j * span / (new_count - 1);
  src.back() = interval.last;
  if (out_interval) *out_interval = {interval.first, interval.first + new_count - 1};
  return resample_interval(traj, interval, src);
}

JointTrajectory time_warp(const JointTrajectory& traj, FrameInterval interval, double duration_factor,
                          FrameInterval* out_interval) {
  if (!(duration_factor > 0.0)) throw Error(ErrorCode::OutOfRange, "time-warp factor must be > 0");
  const int m = std::max(2, static_cast<int>(std::lround((interval.count() - 1) * duration_factor)) + 1);
  return time_warp_frames(traj, interval, m, out_interval);
}

JointTrajectory reshape_onset(const JointTrajectory& traj, FrameInterval interval, Hand hand, double peak_ratio) {
  const std::vector<double> speed = wrist_speed(traj, hand, interval);
  const double tp = static_cast<double>(first_major_peak(speed));
  const double L = interval.count() - 1;
  if (tp <= 0.0 || tp >= L) {
    throw Error(ErrorCode::UndefinedRatio, std::string("the ") + hand_word(hand) +
                                               " wrist has no speed ramp before its first major peak");
  }
  const double tq = std::clamp(tp * peak_ratio, 0.5, L - 0.5);
  std::vector<double> src(static_cast<std::size_t>(interval.count()));
  for (int j = 0; j < interval.count(); ++j) {
    const double tau = j;
    const double u = tau <= tq ? tau * tp / tq : tp + (tau - tq) * (L - tp) / (L - tq);
    src[static_cast<std::size_t>(j)] = interval.first + u;
  }
  src.front() = interval.first;
  src.back() = interval.last;
  return resample_interval(traj, interval, src, hand);
}

namespace {

struct ArmFrame {
  Eigen::Vector3d a, r, b;
};

std::optional<ArmFrame> arm_frame(const Eigen::Vector3d& s, const Eigen::Vector3d& w, const SwivelOptions& o) {
  Eigen::Vector3d a = w - s;
  const double len = a.norm();
  if (!(len > o.min_arm_length)) return std::nullopt;
  a /= len;
  Eigen::Vector3d r = o.down - o.down.dot(a) * a;
  if (r.norm() < 1e-9) return std::nullopt;
  r.normalize();
  return ArmFrame{a, r, a.cross(r)};
}

}  // namespace

JointTrajectory scale_size(const JointTrajectory& traj, FrameInterval interval, Hand hand, double factor,
                           const SwivelOptions& swivel) {
  JointTrajectory out = traj;
  auto& wrist = out.at(JointRole::Wrist, hand);
  const auto& shoulder = traj.at(JointRole::Shoulder, hand);
  auto& elbow = out.at(JointRole::Elbow, hand);
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (int t = interval.first; t <= interval.last; ++t) c += wrist[static_cast<std::size_t>(t)];
  c /= interval.count();
  for (int t = interval.first; t <= interval.last; ++t) {
    const auto k = static_cast<std::size_t>(t);
    const Eigen::Vector3d w0 = wrist[k];
    const Eigen::Vector3d w1 = c + factor * (w0 - c);
    const Eigen::Vector3d shift = w1 - w0;
    wrist[k] = w1;
    for (JointRole role : {JointRole::WristBase, JointRole::FingerIndex, JointRole::FingerMiddle,
                           JointRole::FingerRing, JointRole::FingerPinky}) {
      if (out.has(role, hand)) out.at(role, hand)[k] += shift;
    }
    const auto f0 = arm_frame(shoulder[k], w0, swivel);
    const auto f1 = arm_frame(shoulder[k], w1, swivel);
    if (f0 && f1) {
      const Eigen::Vector3d u = elbow[k] - shoulder[k];
      elbow[k] = shoulder[k] + u.dot(f0->a) * f1->a + u.dot(f0->r) * f1->r + u.dot(f0->b) * f1->b;
    }
  }
  out.glitches = find_glitches(out);
  return out;
}

JointTrajectory rotate_swivel(const JointTrajectory& traj, FrameInterval interval, Hand hand, double delta_deg) {
  JointTrajectory out = traj;
  const auto& shoulder = traj.at(JointRole::Shoulder, hand);
  const auto& wrist = traj.at(JointRole::Wrist, hand);
  auto& elbow = out.at(JointRole::Elbow, hand);
  for (int t = interval.first; t <= interval.last; ++t) {
    const auto k = static_cast<std::size_t>(t);
    const Eigen::Vector3d axis = wrist[k] - shoulder[k];
    if (axis.norm() < 1e-12) continue;
    const Eigen::AngleAxisd rot(delta_deg * kDegToRad, axis.normalized());
    elbow[k] = shoulder[k] + rot * (elbow[k] - shoulder[k]);
  }
  out.glitches = find_glitches(out);
  return out;
}

JointTrajectory scale_opening(const JointTrajectory& traj, FrameInterval interval, Hand hand, double factor) {
  if (!traj.has(JointRole::WristBase, hand)) {
    throw Error(ErrorCode::MissingFingertip, std::string("wrist_base is not mapped for the ") + hand_word(hand) + " hand");
  }
  JointTrajectory out = traj;
  const auto& base = traj.at(JointRole::WristBase, hand);
  for (JointRole tip : kFingertips) {
    if (!traj.has(tip, hand)) {
      throw Error(ErrorCode::MissingFingertip,
                  std::string(role_name(tip)) + " is not mapped for the " + hand_word(hand) + " hand");
    }
    auto& track = out.at(tip, hand);
    for (int t = interval.first; t <= interval.last; ++t) {
      const auto k = static_cast<std::size_t>(t);
      track[k] = base[k] + factor * (track[k] - base[k]);
    }
  }
  out.glitches = find_glitches(out);
  return out;
}

// ---- manipulation ----

namespace {

double ratio_or_throw(double target, double current, ParamKind p, Hand h) {
  if (std::abs(current) < 1e-12) {
    throw Error(ErrorCode::UndefinedRatio, std::string(param_name(p)) + " of the " + hand_word(h) +
                                               " hand is zero, so a scaling edit is undefined");
  }
  const double k = target / current;
  if (!(k > 0.0)) {
    throw Error(ErrorCode::UndefinedRatio, std::string(param_name(p)) + " target and current value of the " +
                                               hand_word(h) + " hand differ in sign");
  }
  return k;
}

double wrist_step(const std::vector<Eigen::Vector3d>& p, int a, int b) {
  if (a < 0 || b >= static_cast<int>(p.size())) return 0.0;
  return (p[static_cast<std::size_t>(b)] - p[static_cast<std::size_t>(a)]).norm();
}

}  // namespace

ManipulationResult apply_manipulation(const StrokeRecord& stroke, const JointTrajectory& traj, ParamKind param,
                                      const std::array<double, 2>& target, const ManipulationOptions& options) {
  ManipulationResult r;
  r.stroke_id = stroke.stroke_id;
  r.param = param;
  r.target = target;
  r.interval = stroke_frames(stroke, traj.frame_time, traj.frames);
  if (r.interval.count() < 3) {
    throw Error(ErrorCode::IntervalTooShort, "stroke '" + stroke.stroke_id + "' is too short to edit");
  }
  const FrameInterval iv = r.interval;
  r.before = extract_interval(stroke.stroke_id, traj, iv, options.extraction);
  for (Hand h : kHands) {
    r.original[index(h)] = r.before.value(param, h);
    if (options.limits) {
      const Band& b = (*options.limits)[index(h)];
      const double t = target[index(h)];
      if (t < b.min || t > b.max) {
        throw Error(ErrorCode::TargetOutsideLimits,
                    std::string(param_name(param)) + " target " + csv::format_double(t) + " for the " + hand_word(h) +
                        " hand lies outside the natural limits [" + csv::format_double(b.min) + ", " +
                        csv::format_double(b.max) + "]");
      }
    }
  }
  r.edited_interval = iv;

  switch (param) {
    case ParamKind::Velocity: {
      // one warp moves both hands; pick the frame count closest to both targets in log terms
      const double k = std::sqrt(ratio_or_throw(target[0], r.original[0], param, Hand::Left) *
                                 ratio_or_throw(target[1], r.original[1], param, Hand::Right));
      const int n = iv.count();
      const int m0 = std::max(2, static_cast<int>(std::lround((n - 1) / k)) + 1);
      const int spread = std::max(3, m0 / 10);
      double best_cost = std::numeric_limits<double>::infinity();
      for (int m = std::max(2, m0 - spread); m <= m0 + spread; ++m) {
        FrameInterval out_iv;
        JointTrajectory cand = time_warp_frames(traj, iv, m, &out_iv);
        double cost = 0.0;
        for (Hand h : kHands) {
          const double v = max_velocity(wrist_speed(cand, h, out_iv));
          cost += std::abs(std::log(v / target[index(h)]));
        }
        if (cost < best_cost) {
          best_cost = cost;
          r.edited = std::move(cand);
          r.edited_interval = out_iv;
          r.applied = {static_cast<double>(m - 1) / (n - 1), static_cast<double>(m - 1) / (n - 1)};
        }
      }
      break;
    }
    case ParamKind::InitialAcceleration: {
      r.edited = traj;
      for (Hand h : kHands) {
        const double goal = target[index(h)];
        ratio_or_throw(goal, r.original[index(h)], param, h);
        const std::vector<double> speed = wrist_speed(traj, h, iv);
        const double tp = static_cast<double>(first_major_peak(speed));
        const double L = iv.count() - 1;
        if (tp <= 0.0) {
          throw Error(ErrorCode::UndefinedRatio, std::string("the ") + hand_word(h) +
                                                     " wrist has no speed ramp before its first major peak");
        }
        auto achieved = [&](double rho, JointTrajectory* keep) {
          JointTrajectory cand = reshape_onset(r.edited, iv, h, rho);
          const double a = initial_acceleration(wrist_speed(cand, h, iv), cand.frame_time);
          if (keep) *keep = std::move(cand);
          return a;
        };
        // acceleration falls as the peak moves later; bisect in log(ratio)
        double lo = std::log(0.5 / tp), hi = std::log((L - 0.5) / tp);
        double best_rho = 1.0, best_err = std::abs(r.original[index(h)] - goal);
        auto consider = [&](double log_rho) {
          const double a = achieved(std::exp(log_rho), nullptr);
          if (std::abs(a - goal) < best_err) {
            best_err = std::abs(a - goal);
            best_rho = std::exp(log_rho);
          }
          return a;
        };
        consider(lo);
        consider(hi);
        for (int it = 0; it < 40; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (consider(mid) > goal) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        if (best_rho != 1.0) achieved(best_rho, &r.edited);
        r.applied[index(h)] = best_rho;
      }
      break;
    }
    case ParamKind::PathLength:
    case ParamKind::MajorAxisLength: {
      r.edited = traj;
      for (Hand h : kHands) {
        const double k = ratio_or_throw(target[index(h)], r.original[index(h)], param, h);
        r.edited = scale_size(r.edited, iv, h, k, options.extraction.swivel);
        r.applied[index(h)] = k;
      }
      break;
    }
    case ParamKind::ArmSwivel: {
      r.edited = traj;
      for (Hand h : kHands) {
        double delta = target[index(h)] - r.original[index(h)];
        JointTrajectory cand = rotate_swivel(traj, iv, h, delta);
        for (int it = 0; it < options.refine_iterations; ++it) {
          const double got = arm_swivel(cand, h, iv, options.extraction.swivel);
          if (std::abs(got - target[index(h)]) < 1e-9) break;
          delta += target[index(h)] - got;
          cand = rotate_swivel(traj, iv, h, delta);
        }
        const auto slot_e = track_slot(JointRole::Elbow, h);
        r.edited.tracks[slot_e] = cand.tracks[slot_e];
        r.applied[index(h)] = delta;
      }
      r.edited.glitches = find_glitches(r.edited);
      break;
    }
    case ParamKind::HandOpening: {
      r.edited = traj;
      for (Hand h : kHands) {
        const double k = ratio_or_throw(target[index(h)], r.original[index(h)], param, h);
        r.edited = scale_opening(r.edited, iv, h, k);
        r.applied[index(h)] = k;
      }
      break;
    }
  }

  r.after = extract_interval(stroke.stroke_id, r.edited, r.edited_interval, options.extraction);
  for (Hand h : kHands) {
    r.achieved[index(h)] = r.after.value(param, h);
    const auto& w = r.edited.at(JointRole::Wrist, h);
    r.border_jump[index(h)] = std::max(wrist_step(w, r.edited_interval.first - 1, r.edited_interval.first),
                                       wrist_step(w, r.edited_interval.last, r.edited_interval.last + 1));
  }
  return r;
}

// ---- verification ----

VerificationReport verify_results(std::span<const ManipulationResult> results, const PercentileBands& bands,
                                  Direction d) {
  VerificationReport rep;
  const ExpressionClass want = target_class(d);
  for (const ManipulationResult& r : results) {
    for (Hand h : kHands) {
      const Band& b = bands.at(r.param, h);
      VerificationItem it;
      it.stroke_id = r.stroke_id;
      it.hand = h;
      it.original = r.original[index(h)];
      it.target = r.target[index(h)];
      it.achieved = r.achieved[index(h)];
      it.original_class = classify(it.original, b);
      it.achieved_class = classify(it.achieved, b);
      it.pass = it.achieved_class == want;
      if (!it.pass) it.residual = d == Direction::Increase ? b.p75 - it.achieved : it.achieved - b.p25;
      rep.passed += it.pass;
      ++rep.total;
      rep.items.push_back(std::move(it));
    }
  }
  return rep;
}

std::string verification_csv(const VerificationReport& report) {
  std::ostringstream out;
  out << "stroke_id,hand,original,target,achieved,original_class,achieved_class,pass,residual\n";
  for (const auto& it : report.items) {
    out << it.stroke_id << "," << hand_suffix(it.hand) << "," << csv::format_double(it.original) << ","
        << csv::format_double(it.target) << "," << csv::format_double(it.achieved) << ","
        << to_string(it.original_class) << "," << to_string(it.achieved_class) << "," << (it.pass ? 1 : 0) << ","
        << csv::format_double(it.residual) << "\n";
  }
  return out.str();
}

// ---- BVH export ----

MotionClip resample_motion(const MotionClip& motion, FrameInterval interval, std::span<const double> source_frames,
                           const Skeleton& skeleton) {
  const int F = motion.frame_count();
  const int m = static_cast<int>(source_frames.size());
  if (interval.first < 0 || interval.last >= F || interval.count() < 2 || m < 2) {
    throw Error(ErrorCode::IntervalTooShort, "resampling needs an interval of at least 2 frames inside the clip");
  }
  const auto C = motion.frames.cols();
  std::vector<bool> rotation(static_cast<std::size_t>(C), false);
  for (const Joint& j : skeleton.joints()) {
    for (std::size_t c = 0; c < j.channels.size(); ++c) {
      rotation[static_cast<std::size_t>(j.first_channel) + c] = is_rotation(j.channels[c]);
    }
  }
  // unwrap rotation channels across the clip so interpolation takes the short way round
  FrameMatrix unwrapped = motion.frames;
  for (Eigen::Index c = 0; c < C; ++c) {
    if (!rotation[static_cast<std::size_t>(c)]) continue;
    for (int f = 1; f < F; ++f) {
      double v = unwrapped(f, c);
      const double prev = unwrapped(f - 1, c);
      while (v - prev > 180.0) v -= 360.0;
      while (v - prev < -180.0) v += 360.0;
      unwrapped(f, c) = v;
    }
  }
  MotionClip out;
  out.clip_id = motion.clip_id;
  out.frame_time = motion.frame_time;
  out.frames.resize(F - interval.count() + m, C);
  out.frames.topRows(interval.first) = motion.frames.topRows(interval.first);
  for (int j = 0; j < m; ++j) {
    const double u = std::clamp(source_frames[static_cast<std::size_t>(j)], 0.0, static_cast<double>(F - 1));
    const int f = std::min(static_cast<int>(std::floor(u)), F - 2);
    const double a = u - f;
    for (Eigen::Index c = 0; c < C; ++c) {
      const auto& src = rotation[static_cast<std::size_t>(c)] ? unwrapped : motion.frames;
      out.frames(interval.first + j, c) = a == 0.0 ? src(f, c) : (1.0 - a) * src(f, c) + a * src(f + 1, c);
    }
  }
  const int tail = F - interval.last - 1;
  out.frames.bottomRows(tail) = motion.frames.bottomRows(tail);
  return out;
}

namespace {

int mapped_joint(const Skeleton& sk, const JointMap& map, JointRole role, Hand hand) {
  const auto it = map.find({role, hand});
  if (it == map.end()) {
    throw Error(ErrorCode::UnmappedRole,
                std::string(role_name(role)) + " is not mapped for the " + hand_word(hand) + " hand");
  }
  const auto j = sk.find_joint(it->second);
  if (!j) throw Error(ErrorCode::UnknownJoint, "'" + it->second + "' is not a joint with channels");
  return *j;
}

std::array<int, 3> rotation_layout(const Joint& j, std::array<int, 3>& order) {
  std::array<int, 3> cols{};
  int n = 0;
  for (std::size_t c = 0; c < j.channels.size(); ++c) {
    if (!is_rotation(j.channels[c])) continue;
    if (n == 3) break;
    order[static_cast<std::size_t>(n)] = axis_of(j.channels[c]);
    cols[static_cast<std::size_t>(n)] = j.first_channel + static_cast<int>(c);
    ++n;
  }
  if (n != 3) {
    throw Error(ErrorCode::DegenerateGeometry, "joint '" + j.name + "' needs three rotation channels for a swivel edit");
  }
  return cols;
}

}  // namespace

void apply_swivel_to_motion(const Skeleton& skeleton, MotionClip& motion, const JointMap& joint_map, Hand hand,
                            FrameInterval interval, double delta_deg) {
  const int js = mapped_joint(skeleton, joint_map, JointRole::Shoulder, hand);
  const int je = mapped_joint(skeleton, joint_map, JointRole::Elbow, hand);
  const int jw = mapped_joint(skeleton, joint_map, JointRole::Wrist, hand);
  const auto& joints = skeleton.joints();
  if (joints[static_cast<std::size_t>(je)].parent != js || joints[static_cast<std::size_t>(jw)].parent != je) {
    throw Error(ErrorCode::DegenerateGeometry,
                std::string("swivel export needs shoulder -> elbow -> wrist to be a direct joint chain on the ") +
                    hand_word(hand) + " side");
  }
  std::array<int, 3> order_s{}, order_w{};
  const auto cols_s = rotation_layout(joints[static_cast<std::size_t>(js)], order_s);
  const auto cols_w = rotation_layout(joints[static_cast<std::size_t>(jw)], order_w);
  const auto parent_s = joints[static_cast<std::size_t>(js)].parent;
  for (int f = interval.first; f <= interval.last; ++f) {
    double* row = motion.frames.row(f).data();
    const Pose pose = compute_pose(skeleton, row);
    const Eigen::Vector3d axis =
        pose.position[static_cast<std::size_t>(jw)] - pose.position[static_cast<std::size_t>(js)];
    if (axis.norm() < 1e-12) continue;
    const Eigen::Matrix3d rd = Eigen::AngleAxisd(delta_deg * kDegToRad, axis.normalized()).toRotationMatrix();
    const Eigen::Matrix3d parent_rot =
        parent_s ? pose.rotation[static_cast<std::size_t>(*parent_s)] : Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d rs = rd * pose.rotation[static_cast<std::size_t>(js)];
    const Eigen::Matrix3d re = rd * pose.rotation[static_cast<std::size_t>(je)];
    const Eigen::Matrix3d local_s = parent_rot.transpose() * rs;
    const Eigen::Matrix3d local_w = re.transpose() * pose.rotation[static_cast<std::size_t>(jw)];
    const Eigen::Vector3d es = euler_from_matrix(local_s, order_s);
    const Eigen::Vector3d ew = euler_from_matrix(local_w, order_w);
    for (int k = 0; k < 3; ++k) {
      row[cols_s[static_cast<std::size_t>(k)]] = es[k];
      row[cols_w[static_cast<std::size_t>(k)]] = ew[k];
    }
  }
}

std::string trajectory_csv(const JointTrajectory& traj) {
  std::ostringstream out;
  out << "frame,role,hand,x,y,z\n";
  for (int f = 0; f < traj.frames; ++f) {
    for (JointRole role : {JointRole::Shoulder, JointRole::Elbow, JointRole::Wrist, JointRole::WristBase,
                           JointRole::FingerIndex, JointRole::FingerMiddle, JointRole::FingerRing,
                           JointRole::FingerPinky}) {
      for (Hand h : kHands) {
        if (!traj.has(role, h)) continue;
        const Eigen::Vector3d& p = traj.at(role, h)[static_cast<std::size_t>(f)];
        out << f << "," << role_name(role) << "," << hand_suffix(h) << "," << csv::format_double(p.x()) << ","
            << csv::format_double(p.y()) << "," << csv::format_double(p.z()) << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace gesture
