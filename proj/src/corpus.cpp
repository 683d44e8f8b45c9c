#include "gesture/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "gesture/csv.hpp"
#include "gesture/rng.hpp"

namespace gesture {

namespace fs = std::filesystem;

double HandParams::get(ParamKind p) const {
  switch (p) {
    case ParamKind::Velocity: return max_velocity;
    case ParamKind::InitialAcceleration: return initial_acceleration;
    case ParamKind::PathLength: return path_length;
    case ParamKind::MajorAxisLength: return major_axis_length;
    case ParamKind::ArmSwivel: return arm_swivel;
    case ParamKind::HandOpening: return hand_opening;
  }
  return 0.0;
}

void HandParams::set(ParamKind p, double v) {
  switch (p) {
    case ParamKind::Velocity: max_velocity = v; break;
    case ParamKind::InitialAcceleration: initial_acceleration = v; break;
    case ParamKind::PathLength: path_length = v; break;
    case ParamKind::MajorAxisLength: major_axis_length = v; break;
    case ParamKind::ArmSwivel: arm_swivel = v; break;
    case ParamKind::HandOpening: hand_opening = v; break;
  }
}

const ManifestEntry& Manifest::find(std::string_view clip_id) const {
  for (const auto& e : entries) {
    if (e.clip_id == clip_id) return e;
  }
  throw Error(ErrorCode::ManifestInvalid, "clip '" + std::string(clip_id) + "' not in manifest");
}

Manifest parse_manifest(std::string_view text, const std::string& base_dir, bool check_files) {
  const csv::Table table = csv::parse(text);
  static constexpr std::array<std::string_view, 6> kColumns{"clip_id",  "dataset_id",  "audio_path",
                                                            "bvh_path", "labels_path", "scale_factor"};
  std::array<int, 6> col{};
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    col[i] = table.column(kColumns[i]);
    if (col[i] < 0) throw Error(ErrorCode::ManifestInvalid, "manifest lacks column '" + std::string(kColumns[i]) + "'");
  }
  Manifest m;
  std::set<std::string> seen;
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (fs::path(base_dir) / p).string(); };
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int line = table.lines[r];
    if (row.size() != table.header.size()) {
      throw Error(ErrorCode::ManifestInvalid, "manifest line " + std::to_string(line) + ": wrong column count");
    }
    ManifestEntry e;
    e.clip_id = row[static_cast<std::size_t>(col[0])];
    e.dataset_id = row[static_cast<std::size_t>(col[1])];
    e.audio_path = resolve(row[static_cast<std::size_t>(col[2])]);
    e.bvh_path = resolve(row[static_cast<std::size_t>(col[3])]);
    e.labels_path = resolve(row[static_cast<std::size_t>(col[4])]);
    try {
      e.scale_factor = csv::to_double(row[static_cast<std::size_t>(col[5])], line, "scale_factor");
    } catch (const Error& err) {
      throw Error(ErrorCode::ManifestInvalid, std::string("manifest ") + err.what());
    }
    if (e.clip_id.empty() || e.dataset_id.empty()) {
      throw Error(ErrorCode::ManifestInvalid, "manifest line " + std::to_string(line) + ": empty clip or dataset id");
    }
    if (!(e.scale_factor > 0.0)) {
      throw Error(ErrorCode::ManifestInvalid, "manifest line " + std::to_string(line) + ": scale_factor must be > 0");
    }
    if (!seen.insert(e.clip_id).second) {
      throw Error(ErrorCode::ManifestInvalid, "duplicate clip_id '" + e.clip_id + "'");
    }
    if (check_files) {
      for (const std::string* p : {&e.audio_path, &e.bvh_path, &e.labels_path}) {
        if (!fs::exists(*p)) {
          throw Error(ErrorCode::ManifestInvalid, "clip '" + e.clip_id + "': missing file '" + *p + "'");
        }
      }
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

Manifest load_manifest(const std::string& path) {
  Manifest m = parse_manifest(io::read_file(path), fs::path(path).parent_path().string());
  m.path = path;
  return m;
}

void validate_strokes(std::vector<StrokeRecord>& strokes, const ClipDurations* durations) {
  for (const StrokeRecord& s : strokes) {
    if (!(s.start_s >= 0.0) || !(s.end_s > s.start_s)) {
      throw Error(ErrorCode::StrokeOutOfBounds, "stroke '" + s.stroke_id + "': invalid interval [" +
                                                    csv::format_double(s.start_s) + ", " +
                                                    csv::format_double(s.end_s) + "]");
    }
    if (s.duration() > constants::kMaxStrokeSeconds + 1e-9) {
      throw Error(ErrorCode::StrokeExceedsCap,
                  "stroke '" + s.stroke_id + "' lasts " + csv::format_double(s.duration()) +
                      " s; with 1 s context each side it exceeds the 5.5 s input cap");
    }
    if (durations) {
      const auto it = durations->find(s.clip_id);
      if (it == durations->end()) {
        throw Error(ErrorCode::StrokeOutOfBounds, "stroke '" + s.stroke_id + "' refers to unknown clip '" + s.clip_id + "'");
      }
      if (s.end_s > it->second + 1e-9) {
        throw Error(ErrorCode::StrokeOutOfBounds, "stroke '" + s.stroke_id + "' ends at " + csv::format_double(s.end_s) +
                                                      " s, after the end of clip '" + s.clip_id + "' (" +
                                                      csv::format_double(it->second) + " s)");
      }
    }
  }
  std::stable_sort(strokes.begin(), strokes.end(), [](const StrokeRecord& a, const StrokeRecord& b) {
    if (a.clip_id != b.clip_id) return a.clip_id < b.clip_id;
    return a.start_s < b.start_s;
  });
  for (std::size_t i = 1; i < strokes.size(); ++i) {
    const StrokeRecord& a = strokes[i - 1];
    const StrokeRecord& b = strokes[i];
    if (a.clip_id == b.clip_id && b.start_s < a.end_s) {
      throw Error(ErrorCode::StrokeOverlap,
                  "strokes '" + a.stroke_id + "' and '" + b.stroke_id + "' overlap in clip '" + a.clip_id + "'");
    }
  }
}

std::vector<StrokeRecord> parse_labels(std::string_view text, const ClipDurations* durations) {
  const csv::Table table = csv::parse(text);
  static constexpr std::array<std::string_view, 5> kColumns{"stroke_id", "clip_id", "start_s", "end_s", "source"};
  std::array<std::size_t, 5> col{};
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    const int c = table.column(kColumns[i]);
    if (c < 0) throw Error(ErrorCode::LabelsInvalid, "labels file lacks column '" + std::string(kColumns[i]) + "'");
    col[i] = static_cast<std::size_t>(c);
  }
  std::vector<StrokeRecord> out;
  std::set<std::string> ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int line = table.lines[r];
    if (row.size() != table.header.size()) {
      throw Error(ErrorCode::LabelsInvalid, "labels line " + std::to_string(line) + ": wrong column count");
    }
    StrokeRecord s;
    s.stroke_id = row[col[0]];
    s.clip_id = row[col[1]];
    try {
      s.start_s = csv::to_double(row[col[2]], line, "start_s");
      s.end_s = csv::to_double(row[col[3]], line, "end_s");
    } catch (const Error& e) {
      throw Error(ErrorCode::LabelsInvalid, e.what());
    }
    const std::string& src = row[col[4]];
    if (src == "hand") {
      s.source = StrokeSource::Hand;
    } else if (src == "automatic") {
      s.source = StrokeSource::Automatic;
    } else {
      throw Error(ErrorCode::LabelsInvalid, "labels line " + std::to_string(line) + ": unknown source '" + src + "'");
    }
    if (!ids.insert(s.stroke_id).second) {
      throw Error(ErrorCode::LabelsInvalid, "duplicate stroke_id '" + s.stroke_id + "'");
    }
    out.push_back(std::move(s));
  }
  validate_strokes(out, durations);
  return out;
}

std::vector<StrokeRecord> load_labels(const std::string& path, const ClipDurations* durations) {
  return parse_labels(io::read_file(path), durations);
}

int frame_at(double seconds, double hop) { return static_cast<int>(std::llround(seconds / hop)); }

StrokeWindow window_for_stroke(const StrokeRecord& stroke, const FeatureMatrix& clip_features, int total_len) {
  const double hop = clip_features.hop;
  const double clip_end = clip_features.valid_len * hop;
  const double from = std::max(0.0, stroke.start_s - constants::kContextSeconds);
  const double to = std::min(clip_end, stroke.end_s + constants::kContextSeconds);
  const int first = std::clamp(frame_at(from, hop), 0, clip_features.valid_len);
  const int last = std::clamp(frame_at(to, hop), first, clip_features.valid_len);
  const int valid = std::min(last - first, total_len);

  StrokeWindow w;
  w.stroke_id = stroke.stroke_id;
  w.valid_len = valid;
  w.features.clip_id = clip_features.clip_id;
  w.features.hop = hop;
  w.features.feature_names = clip_features.feature_names;
  w.features.frame_features = FeatureRows::Zero(total_len, clip_features.dims());
  w.features.frame_features.topRows(valid) = clip_features.frame_features.middleRows(first, valid);
  w.features.valid_len = valid;
  return w;
}

Split make_split(std::vector<std::string> stroke_ids, std::uint64_t seed, double val_frac, double test_frac) {
  if (stroke_ids.size() < 3) throw Error(ErrorCode::SplitInvalid, "at least 3 strokes are required to split");
  if (val_frac < 0.0 || test_frac < 0.0 || val_frac + test_frac >= 1.0) {
    throw Error(ErrorCode::SplitInvalid, "validation and test fractions must be non-negative and sum below 1");
  }
  std::sort(stroke_ids.begin(), stroke_ids.end());
  if (std::adjacent_find(stroke_ids.begin(), stroke_ids.end()) != stroke_ids.end()) {
    throw Error(ErrorCode::SplitInvalid, "duplicate stroke ids");
  }
  const auto n = static_cast<double>(stroke_ids.size());
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * val_frac)));
  const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * test_frac)));
  if (n_val + n_test >= stroke_ids.size()) throw Error(ErrorCode::SplitInvalid, "split leaves no training strokes");
  Rng rng(seed);
  rng.shuffle(stroke_ids);
  Split s;
  s.seed = seed;
  s.validation.assign(stroke_ids.begin(), stroke_ids.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.test.assign(stroke_ids.begin() + static_cast<std::ptrdiff_t>(n_val),
                stroke_ids.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  s.train.assign(stroke_ids.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), stroke_ids.end());
  for (auto* part : {&s.train, &s.validation, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

}  // namespace gesture
