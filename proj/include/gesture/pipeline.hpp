#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "gesture/config.hpp"
#include "gesture/corpus.hpp"
#include "gesture/eval.hpp"
#include "gesture/mocap.hpp"
#include "gesture/model.hpp"
#include "gesture/stimuli.hpp"

namespace gesture {

// Versioned output tree under <out>/v1.
struct OutputLayout {
  std::string root;

  explicit OutputLayout(const RunConfig& config);

  std::string params_csv() const;
  std::string strokes_csv() const;
  std::string clips_csv() const;
  std::string qa_report() const;
  std::string split_json() const;
  std::string feature_file(const std::string& clip_id) const;
  std::string model_dir(ParamKind p, bool length_only) const;
  std::string checkpoint(ParamKind p, bool length_only) const;
  std::string eval_dir() const;
  std::string stimuli_dir(ParamKind p, Direction d) const;
};

struct ClipInfo {
  std::string clip_id;
  std::string dataset_id;
  double duration_s = 0.0;
  double frame_time = 0.0;
  int frames = 0;
};

/// Everything `extract` leaves behind, reloaded.
struct CorpusIndex {
  std::vector<StrokeRecord> strokes;   // params.csv order
  std::vector<GestureParams> params;   // aligned with strokes
  std::map<std::string, ClipInfo> clips;
  Split split;

  std::size_t position(const std::string& stroke_id) const;
  ClipDurations durations() const;
};
CorpusIndex load_corpus_index(const OutputLayout& layout);

struct LoadedMotion {
  ManifestEntry entry;
  BvhDocument doc;
  JointTrajectory traj;
};
LoadedMotion load_motion(const ManifestEntry& entry, const JointMap& joint_map);
JointMap load_joint_map(const std::string& path);

/// Stroke windows with the clip features (or the length-only encoding), in id order.
std::vector<StrokeWindow> load_windows(const OutputLayout& layout, const CorpusIndex& index,
                                       std::span<const std::string> stroke_ids, bool length_only);

struct ExtractSummary {
  int clips = 0;
  int strokes = 0;
  int rejected = 0;
  int glitches = 0;
};
ExtractSummary cmd_extract(const RunConfig& config);

struct TrainSummary {
  std::string checkpoint;
  int epochs = 0;
  int best_epoch = 0;
  double best_validation_mse = 0.0;
};
TrainSummary cmd_train(const RunConfig& config, ParamKind param, bool length_only = false,
                       const EpochCallback& on_epoch = {});

/// Restricted random baseline over the test split; writes the draw records.
BaselineResult cmd_baseline(const RunConfig& config, ParamKind param);

std::vector<ErrorReport> cmd_evaluate(const RunConfig& config, std::span<const ParamKind> params);

VerificationReport cmd_stimuli(const RunConfig& config, ParamKind param, Direction direction);

/// Re-renders eval/table.csv into the text table and plot data.
void cmd_report(const RunConfig& config);

}  // namespace gesture
