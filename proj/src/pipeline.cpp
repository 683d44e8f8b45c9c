#include "gesture/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <set>
#include <sstream>
#include <thread>

#include "gesture/csv.hpp"
#include "gesture/params.hpp"
#include "gesture/synth.hpp"
#include "json.hpp"

namespace gesture {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// ---- layout ----

OutputLayout::OutputLayout(const RunConfig& config) : root((fs::path(config.out) / "v1").string()) {}

std::string OutputLayout::params_csv() const { return root + "/params.csv"; }
std::string OutputLayout::strokes_csv() const { return root + "/strokes.csv"; }
std::string OutputLayout::clips_csv() const { return root + "/clips.csv"; }
std::string OutputLayout::qa_report() const { return root + "/qa_report.csv"; }
std::string OutputLayout::split_json() const { return root + "/split.json"; }
std::string OutputLayout::feature_file(const std::string& clip_id) const {
  return root + "/features/" + clip_id + ".csv";
}
std::string OutputLayout::model_dir(ParamKind p, bool length_only) const {
  return root + "/models/" + std::string(param_name(p)) + (length_only ? "_length_only" : "");
}
std::string OutputLayout::checkpoint(ParamKind p, bool length_only) const {
  return model_dir(p, length_only) + "/checkpoint.bin";
}
std::string OutputLayout::eval_dir() const { return root + "/eval"; }
std::string OutputLayout::stimuli_dir(ParamKind p, Direction d) const {
  return root + "/stimuli/" + std::string(param_name(p)) + "_" + std::string(to_string(d));
}

namespace {

void require(const std::string& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::MissingInput, "'" + path + "' not found; run `gesture " + producer + "` first");
  }
}

std::string with_context(const std::string& context, const Error& e) { return context + ": " + e.what(); }

std::string source_name(StrokeSource s) { return s == StrokeSource::Hand ? "hand" : "automatic"; }

std::string split_to_json(const Split& s) {
  ojson j;
  j["seed"] = s.seed;
  j["train"] = s.train;
  j["validation"] = s.validation;
  j["test"] = s.test;
  return j.dump(2) + "\n";
}

Split split_from_json(const std::string& text) {
  try {
    const ojson j = ojson::parse(text);
    Split s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train = j.at("train").get<std::vector<std::string>>();
    s.validation = j.at("validation").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SplitInvalid, std::string("split.json: ") + e.what());
  }
}

std::vector<double> param_column(const CorpusIndex& corpus, ParamKind p, Hand h) {
  std::vector<double> v;
  v.reserve(corpus.params.size());
  for (const auto& g : corpus.params) v.push_back(g.value(p, h));
  return v;
}

}  // namespace

// ---- corpus index ----

std::size_t CorpusIndex::position(const std::string& stroke_id) const {
  for (std::size_t i = 0; i < strokes.size(); ++i) {
    if (strokes[i].stroke_id == stroke_id) return i;
  }
  throw Error(ErrorCode::MissingRows, "stroke '" + stroke_id + "' is not in the extracted parameters");
}

ClipDurations CorpusIndex::durations() const {
  ClipDurations d;
  for (const auto& [id, c] : clips) d[id] = c.duration_s;
  return d;
}

CorpusIndex load_corpus_index(const OutputLayout& layout) {
  for (const std::string& p : {layout.params_csv(), layout.strokes_csv(), layout.clips_csv(), layout.split_json()}) {
    require(p, "extract");
  }
  CorpusIndex corpus;
  corpus.params = parse_params_csv(io::read_file(layout.params_csv()));

  const csv::Table st = csv::parse(io::read_file(layout.strokes_csv()));
  std::map<std::string, StrokeRecord> by_id;
  for (std::size_t r = 0; r < st.rows.size(); ++r) {
    const auto& row = st.rows[r];
    if (row.size() != 6) throw Error(ErrorCode::MissingRows, "strokes.csv line " + std::to_string(st.lines[r]));
    StrokeRecord s;
    s.stroke_id = row[0];
    s.clip_id = row[1];
    s.dataset_id = row[2];
    s.start_s = csv::to_double(row[3], st.lines[r], "start_s");
    s.end_s = csv::to_double(row[4], st.lines[r], "end_s");
    s.source = row[5] == "hand" ? StrokeSource::Hand : StrokeSource::Automatic;
    by_id[s.stroke_id] = s;
  }
  for (const auto& g : corpus.params) {
    const auto it = by_id.find(g.stroke_id);
    if (it == by_id.end()) throw Error(ErrorCode::MissingRows, "stroke '" + g.stroke_id + "' missing in strokes.csv");
    corpus.strokes.push_back(it->second);
  }

  const csv::Table ct = csv::parse(io::read_file(layout.clips_csv()));
  for (std::size_t r = 0; r < ct.rows.size(); ++r) {
    const auto& row = ct.rows[r];
    if (row.size() != 5) throw Error(ErrorCode::MissingRows, "clips.csv line " + std::to_string(ct.lines[r]));
    ClipInfo c;
    c.clip_id = row[0];
    c.dataset_id = row[1];
    c.duration_s = csv::to_double(row[2], ct.lines[r], "duration_s");
    c.frame_time = csv::to_double(row[3], ct.lines[r], "frame_time");
    c.frames = static_cast<int>(csv::to_double(row[4], ct.lines[r], "frames"));
    corpus.clips[c.clip_id] = c;
  }
  corpus.split = split_from_json(io::read_file(layout.split_json()));
  return corpus;
}

JointMap load_joint_map(const std::string& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingInput, "joint map '" + path + "' not found");
  try {
    return parse_joint_map_csv(io::read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), with_context(path, e));
  }
}

LoadedMotion load_motion(const ManifestEntry& entry, const JointMap& joint_map) {
  LoadedMotion m;
  m.entry = entry;
  try {
    m.doc = parse_bvh(io::read_file(entry.bvh_path), BvhOptions{entry.clip_id, entry.scale_factor});
    m.traj = forward_kinematics(m.doc.skeleton, m.doc.motion, joint_map);
  } catch (const Error& e) {
    throw Error(e.code(), with_context("clip '" + entry.clip_id + "' (" + entry.bvh_path + ")", e));
  }
  return m;
}

std::vector<StrokeWindow> load_windows(const OutputLayout& layout, const CorpusIndex& corpus,
                                       std::span<const std::string> stroke_ids, bool length_only) {
  std::map<std::string, FeatureMatrix> cache;
  std::vector<StrokeWindow> out;
  out.reserve(stroke_ids.size());
  for (const std::string& id : stroke_ids) {
    const StrokeRecord& s = corpus.strokes[corpus.position(id)];
    auto it = cache.find(s.clip_id);
    if (it == cache.end()) {
      const std::string path = layout.feature_file(s.clip_id);
      require(path, "extract");
      it = cache.emplace(s.clip_id, read_feature_cache(io::read_file(path))).first;
    }
    StrokeWindow w = window_for_stroke(s, it->second);
    if (length_only) {
      FeatureMatrix lo = length_only_features(w.valid_len);
      lo.clip_id = w.features.clip_id;
      w.features = std::move(lo);
    }
    out.push_back(std::move(w));
  }
  return out;
}

// ---- extract ----

namespace {

struct ClipResult {
  ClipInfo info;
  std::vector<StrokeRecord> strokes;
  std::vector<GestureParams> params;
  std::vector<std::string> qa_rows;
  int rejected = 0;
  int glitches = 0;
};

ClipResult extract_clip(const RunConfig& config, const OutputLayout& layout, const ManifestEntry& entry,
                        const JointMap& joint_map) {
  ClipResult r;
  LoadedMotion m = load_motion(entry, joint_map);

  AudioBuffer audio;
  try {
    const std::string bytes = io::read_file(entry.audio_path);
    audio = parse_wav(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()), entry.clip_id);
  } catch (const Error& e) {
    throw Error(e.code(), with_context("clip '" + entry.clip_id + "' (" + entry.audio_path + ")", e));
  }

  FeatureMatrix features;
  try {
    std::string external;
    if (config.feature_set == FeatureSet::ExternalPrecomputed) {
      external = io::read_file((fs::path(config.external_features) / (entry.clip_id + ".csv")).string());
    }
    features = assemble_features(audio, config.feature_set, external);
    features.clip_id = entry.clip_id;
  } catch (const Error& e) {
    throw Error(e.code(), with_context("clip '" + entry.clip_id + "' features", e));
  }

  r.info.clip_id = entry.clip_id;
  r.info.dataset_id = entry.dataset_id;
  r.info.duration_s = std::min(m.doc.motion.duration(), audio.duration());
  r.info.frame_time = m.doc.motion.frame_time;
  r.info.frames = m.doc.motion.frame_count();

  ClipDurations durations{{entry.clip_id, r.info.duration_s}};
  std::vector<StrokeRecord> strokes;
  try {
    strokes = load_labels(entry.labels_path, &durations);
  } catch (const Error& e) {
    throw Error(e.code(), with_context("clip '" + entry.clip_id + "' (" + entry.labels_path + ")", e));
  }

  for (const Glitch& g : m.traj.glitches) {
    ++r.glitches;
    r.qa_rows.push_back("glitch," + entry.clip_id + ",," + std::string(role_name(g.role)) + "," +
                        hand_suffix(g.hand) + "," + std::to_string(g.frame) + "," +
                        csv::format_double(g.displacement) + ",displacement_m");
  }
  for (StrokeRecord& s : strokes) {
    if (s.clip_id != entry.clip_id) {
      throw Error(ErrorCode::LabelsInvalid, "clip '" + entry.clip_id + "' (" + entry.labels_path + "): stroke '" +
                                                s.stroke_id + "' names clip '" + s.clip_id + "'");
    }
    s.dataset_id = entry.dataset_id;
    const FrameInterval iv = stroke_frames(s, m.traj.frame_time, m.traj.frames);
    const auto hit = std::find_if(m.traj.glitches.begin(), m.traj.glitches.end(), [&](const Glitch& g) {
      return g.frame > iv.first && g.frame <= iv.last;
    });
    if (hit != m.traj.glitches.end()) {
      ++r.rejected;
      r.qa_rows.push_back("rejected," + entry.clip_id + "," + s.stroke_id + "," + std::string(role_name(hit->role)) +
                          "," + hand_suffix(hit->hand) + "," + std::to_string(hit->frame) + "," +
                          csv::format_double(hit->displacement) + ",glitch_inside_stroke");
      continue;
    }
    try {
      r.params.push_back(extract_all(s, m.traj, config.extraction));
    } catch (const Error& e) {
      throw Error(e.code(), with_context("clip '" + entry.clip_id + "' stroke '" + s.stroke_id + "'", e));
    }
    r.strokes.push_back(s);
  }
  io::write_file(layout.feature_file(entry.clip_id), write_feature_cache(features));
  return r;
}

}  // namespace

ExtractSummary cmd_extract(const RunConfig& config) {
  config.validate();
  const OutputLayout layout(config);
  require(config.manifest, "synth");
  Manifest manifest;
  try {
    manifest = load_manifest(config.manifest);
  } catch (const Error& e) {
    throw Error(e.code(), with_context(config.manifest, e));
  }
  const JointMap joint_map = load_joint_map(config.joint_map);
  fs::create_directories(fs::path(layout.root) / "features");

  const std::size_t n = manifest.entries.size();
  std::vector<ClipResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = extract_clip(config, layout, manifest.entries[i], joint_map);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExtractSummary summary;
  std::vector<GestureParams> params;
  std::ostringstream strokes_csv, clips_csv, qa;
  strokes_csv << "stroke_id,clip_id,dataset_id,start_s,end_s,source\n";
  clips_csv << "clip_id,dataset_id,duration_s,frame_time,frames\n";
  qa << "kind,clip_id,stroke_id,role,hand,frame,value,detail\n";
  std::set<std::string> seen;
  std::vector<std::string> ids;
  for (const ClipResult& r : results) {
    ++summary.clips;
    summary.rejected += r.rejected;
    summary.glitches += r.glitches;
    clips_csv << r.info.clip_id << "," << r.info.dataset_id << "," << csv::format_double(r.info.duration_s) << ","
              << csv::format_double(r.info.frame_time) << "," << r.info.frames << "\n";
    for (const auto& row : r.qa_rows) qa << row << "\n";
    for (std::size_t k = 0; k < r.strokes.size(); ++k) {
      const StrokeRecord& s = r.strokes[k];
      if (!seen.insert(s.stroke_id).second) {
        throw Error(ErrorCode::LabelsInvalid, "stroke_id '" + s.stroke_id + "' appears in more than one clip");
      }
      strokes_csv << s.stroke_id << "," << s.clip_id << "," << s.dataset_id << "," << csv::format_double(s.start_s)
                  << "," << csv::format_double(s.end_s) << "," << source_name(s.source) << "\n";
      params.push_back(r.params[k]);
      ids.push_back(s.stroke_id);
      ++summary.strokes;
    }
  }
  const Split split =
      make_split(ids, stream_seed(config.seed, SeedStream::Split), config.validation_fraction, config.test_fraction);
  io::write_file(layout.params_csv(), write_params_csv(params));
  io::write_file(layout.strokes_csv(), strokes_csv.str());
  io::write_file(layout.clips_csv(), clips_csv.str());
  io::write_file(layout.qa_report(), qa.str());
  io::write_file(layout.split_json(), split_to_json(split));
  return summary;
}

// ---- train ----

namespace {

std::vector<std::array<double, 2>> targets_of(const CorpusIndex& corpus, std::span<const std::string> ids,
                                              ParamKind p) {
  std::vector<std::array<double, 2>> t;
  t.reserve(ids.size());
  for (const auto& id : ids) {
    const GestureParams& g = corpus.params[corpus.position(id)];
    t.push_back({g.value(p, Hand::Left), g.value(p, Hand::Right)});
  }
  return t;
}

TrainingSet make_set(const std::vector<StrokeWindow>& windows, const std::vector<std::array<double, 2>>& raw,
                     const Normalizer& norm) {
  TrainingSet s;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    s.inputs.push_back(&windows[i].features.frame_features);
    s.targets.push_back(norm.apply(raw[i]));
  }
  return s;
}

}  // namespace

TrainSummary cmd_train(const RunConfig& config, ParamKind param, bool length_only, const EpochCallback& on_epoch) {
  config.validate();
  const OutputLayout layout(config);
  const CorpusIndex corpus = load_corpus_index(layout);
  if (corpus.split.train.empty() || corpus.split.validation.empty()) {
    throw Error(ErrorCode::SplitInvalid, "training needs nonempty train and validation splits");
  }
  std::vector<StrokeWindow> train_w = load_windows(layout, corpus, corpus.split.train, length_only);
  std::vector<StrokeWindow> val_w = load_windows(layout, corpus, corpus.split.validation, length_only);

  FeatureStandardizer standardizer;
  if (!length_only) {
    std::vector<const FeatureMatrix*> fit_on;
    for (const auto& w : train_w) fit_on.push_back(&w.features);
    standardizer = FeatureStandardizer::fit(fit_on);
    for (auto& w : train_w) standardizer.apply(w.features);
    for (auto& w : val_w) standardizer.apply(w.features);
  }
  const auto train_t = targets_of(corpus, corpus.split.train, param);
  const auto val_t = targets_of(corpus, corpus.split.validation, param);
  const Normalizer norm = Normalizer::fit(train_t);

  ModelConfig mc = config.model;
  mc.input_dim = train_w.front().features.dims();
  mc.epochs = config.epochs > 0 ? config.epochs : default_epochs(param);
  mc.seed = stream_seed(config.seed, length_only ? SeedStream::LengthOnly : SeedStream::Train, index(param));

  const TrainResult tr = train(mc, make_set(train_w, train_t, norm), make_set(val_w, val_t, norm), on_epoch);

  Checkpoint ck;
  ck.net = tr.best;
  ck.normalizer = norm;
  ck.standardizer = standardizer;
  ck.target = std::string(param_name(param));
  ck.feature_set = std::string(to_string(length_only ? FeatureSet::LengthOnly : config.feature_set));
  ck.epoch = tr.best_epoch;
  ck.validation_mse = tr.best_validation_mse;

  const std::string dir = layout.model_dir(param, length_only);
  fs::create_directories(dir);
  save_checkpoint(ck, layout.checkpoint(param, length_only));
  io::write_file(dir + "/train_log.csv", write_training_log(tr.log));
  ojson run;
  run["parameter"] = ck.target;
  run["feature_set"] = ck.feature_set;
  run["split_seed"] = corpus.split.seed;
  run["train_seed"] = mc.seed;
  run["epochs"] = mc.epochs;
  run["best_epoch"] = tr.best_epoch;
  run["best_validation_mse"] = tr.best_validation_mse;
  run["final_validation_mse"] = tr.log.empty() ? tr.best_validation_mse : tr.log.back().validation_mse;
  run["train_strokes"] = train_w.size();
  run["validation_strokes"] = val_w.size();
  io::write_file(dir + "/run.json", run.dump(2) + "\n");

  return {layout.checkpoint(param, length_only), mc.epochs, tr.best_epoch, tr.best_validation_mse};
}

// ---- baseline / evaluate ----

namespace {

std::vector<BaselineItem> baseline_items(const CorpusIndex& corpus, std::span<const std::string> ids, ParamKind p) {
  std::vector<BaselineItem> items;
  for (const auto& id : ids) {
    const std::size_t i = corpus.position(id);
    const GestureParams& g = corpus.params[i];
    items.push_back(BaselineItem{id, corpus.strokes[i].dataset_id,
                                 {g.value(p, Hand::Left), g.value(p, Hand::Right)},
                                 {g.value(ParamKind::PathLength, Hand::Left),
                                  g.value(ParamKind::PathLength, Hand::Right)}});
  }
  return items;
}

std::vector<std::string> all_stroke_ids(const CorpusIndex& corpus) {
  std::vector<std::string> all;
  for (const auto& s : corpus.strokes) all.push_back(s.stroke_id);
  return all;
}

// Test strokes split by whether both hands have at least one in-band donor.
struct BaselineTargets {
  std::vector<std::string> kept;
  std::vector<std::string> excluded;
};

BaselineTargets baseline_targets(const CorpusIndex& corpus) {
  const auto pool = baseline_items(corpus, all_stroke_ids(corpus), ParamKind::PathLength);
  std::map<std::string, std::array<double, 2>> stds;
  for (const auto& item : pool) {
    if (!stds.contains(item.dataset_id)) stds[item.dataset_id] = dataset_path_length_std(pool, item.dataset_id);
  }
  BaselineTargets out;
  for (const auto& id : corpus.split.test) {
    const BaselineItem& t = pool[corpus.position(id)];
    bool ok = true;
    for (std::size_t h = 0; h < 2 && ok; ++h) {
      ok = std::any_of(pool.begin(), pool.end(), [&](const BaselineItem& d) {
        return d.stroke_id != id && d.dataset_id == t.dataset_id &&
               in_path_length_band(t.path_length[h], d.path_length[h], stds[t.dataset_id][h]);
      });
    }
    (ok ? out.kept : out.excluded).push_back(id);
  }
  if (out.kept.empty()) throw Error(ErrorCode::NoEligibleDonor, "no test stroke has an eligible baseline donor");
  return out;
}

BaselineResult run_baseline(const RunConfig& config, const CorpusIndex& corpus, ParamKind p,
                            std::span<const std::string> target_ids) {
  const auto targets = baseline_items(corpus, target_ids, p);
  const auto pool = baseline_items(corpus, all_stroke_ids(corpus), p);
  return random_baseline(targets, pool, Restriction::PathLength, config.baseline_repeats,
                         stream_seed(config.seed, SeedStream::Baseline, index(p)));
}

std::string draws_csv(const BaselineResult& r) {
  std::ostringstream out;
  out << "repeat,hand,target,donor,pl_true,pl_donor,pl_std,error\n";
  for (const auto& d : r.draws) {
    out << d.repeat << "," << hand_suffix(static_cast<Hand>(d.hand)) << "," << d.target << "," << d.donor << ","
        << csv::format_double(d.pl_true) << "," << csv::format_double(d.pl_donor) << ","
        << csv::format_double(d.pl_std) << "," << csv::format_double(d.error) << "\n";
  }
  return out.str();
}

std::string baseline_json(ParamKind p, const BaselineResult& r, const BaselineTargets& targets) {
  ojson j;
  j["parameter"] = std::string(param_name(p));
  j["targets"] = targets.kept.size();
  j["excluded_no_donor"] = targets.excluded;
  for (Hand h : kHands) {
    const std::string s(1, hand_suffix(h));
    j["mean_" + s] = r.stats[index(h)].mean;
    j["median_" + s] = r.stats[index(h)].median;
    j["eligible_fraction_mean_" + s] = r.eligible_fraction_mean[index(h)];
    j["eligible_fraction_pooled_" + s] = r.eligible_fraction_pooled[index(h)];
  }
  return j.dump(2) + "\n";
}

std::vector<std::array<double, 2>> predict_for(const OutputLayout& layout, const CorpusIndex& corpus,
                                               std::span<const std::string> ids, const Checkpoint& ck,
                                               bool length_only) {
  std::vector<StrokeWindow> windows = load_windows(layout, corpus, ids, length_only);
  std::vector<const FeatureRows*> inputs;
  for (auto& w : windows) {
    if (ck.standardizer.fitted()) ck.standardizer.apply(w.features);
    inputs.push_back(&w.features.frame_features);
  }
  return predict(ck, inputs);
}

Comparison compare(const std::string& name, ParamKind p, Hand h, const std::string& against,
                   std::span<const double> a, std::span<const double> b) {
  Comparison c;
  c.name = name;
  c.param = p;
  c.hand = h;
  c.against = against;
  try {
    c.test = wilcoxon_paired(a, b);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoNonzeroDifferences) throw;
    c.test = WilcoxonResult{};
  }
  c.decision = bonferroni(c.test.p);
  return c;
}

}  // namespace

BaselineResult cmd_baseline(const RunConfig& config, ParamKind param) {
  config.validate();
  const OutputLayout layout(config);
  const CorpusIndex corpus = load_corpus_index(layout);
  const BaselineTargets targets = baseline_targets(corpus);
  const BaselineResult r = run_baseline(config, corpus, param, targets.kept);
  fs::create_directories(layout.eval_dir());
  const std::string stem = layout.eval_dir() + "/baseline_" + std::string(param_name(param));
  io::write_file(stem + "_draws.csv", draws_csv(r));
  io::write_file(stem + ".json", baseline_json(param, r, targets));
  return r;
}

std::vector<ErrorReport> cmd_evaluate(const RunConfig& config, std::span<const ParamKind> params) {
  config.validate();
  const OutputLayout layout(config);
  const CorpusIndex corpus = load_corpus_index(layout);
  if (corpus.split.test.empty()) throw Error(ErrorCode::EmptySet, "the test split is empty");
  for (ParamKind p : params) require(layout.checkpoint(p, false), "train --param " + std::string(param_name(p)));
  fs::create_directories(layout.eval_dir());
  const BaselineTargets targets = baseline_targets(corpus);
  const std::vector<std::string>& test = targets.kept;

  std::vector<ErrorReport> reports;
  std::vector<Comparison> comparisons;
  for (ParamKind p : params) {
    const std::string pname(param_name(p));
    const Checkpoint ck = load_checkpoint(layout.checkpoint(p, false));
    if (ck.target != pname) {
      throw Error(ErrorCode::CheckpointInvalid, layout.checkpoint(p, false) + " was trained for '" + ck.target + "'");
    }
    const auto pred = predict_for(layout, corpus, test, ck, false);
    const auto truth = targets_of(corpus, test, p);
    const BaselineResult base = run_baseline(config, corpus, p, test);

    std::optional<std::vector<std::array<double, 2>>> lo_pred;
    if (fs::exists(layout.checkpoint(p, true))) {
      lo_pred = predict_for(layout, corpus, test, load_checkpoint(layout.checkpoint(p, true)), true);
    }

    ErrorReport rep;
    rep.param = p;
    std::ostringstream pred_csv;
    pred_csv << "stroke_id,true_L,true_R,pred_L,pred_R" << (lo_pred ? ",length_only_L,length_only_R" : "") << "\n";
    for (std::size_t i = 0; i < truth.size(); ++i) {
      pred_csv << test[i];
      for (double v : {truth[i][0], truth[i][1], pred[i][0], pred[i][1]}) pred_csv << "," << csv::format_double(v);
      if (lo_pred) pred_csv << "," << csv::format_double((*lo_pred)[i][0]) << "," << csv::format_double((*lo_pred)[i][1]);
      pred_csv << "\n";
    }
    std::array<ErrorStats, 2> lo_stats{};
    for (Hand h : kHands) {
      const std::size_t hi = index(h);
      std::vector<double> t, m;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        t.push_back(truth[i][hi]);
        m.push_back(pred[i][hi]);
      }
      const std::vector<double> model_err = abs_errors(m, t);
      HandReport& hr = rep.hands[hi];
      const std::vector<double> values = param_column(corpus, p, h);
      hr.mad = mad(values);
      hr.model = summarize(model_err);
      hr.baseline = base.stats[hi];
      const std::string suffix(1, hand_suffix(h));
      comparisons.push_back(compare(pname + "_" + suffix + "_vs_random", p, h, "random_baseline", model_err,
                                    base.target_errors[hi]));
      if (lo_pred) {
        std::vector<double> l;
        for (const auto& v : *lo_pred) l.push_back(v[hi]);
        const std::vector<double> lo_err = abs_errors(l, t);
        lo_stats[hi] = summarize(lo_err);
        comparisons.push_back(
            compare(pname + "_" + suffix + "_vs_length_only", p, h, "length_only", model_err, lo_err));
      }
    }
    if (lo_pred) rep.length_only = lo_stats;
    rep.compute_reductions();
    reports.push_back(rep);

    io::write_file(layout.eval_dir() + "/predictions_" + pname + ".csv", pred_csv.str());
    io::write_file(layout.eval_dir() + "/baseline_" + pname + "_draws.csv", draws_csv(base));
    io::write_file(layout.eval_dir() + "/baseline_" + pname + ".json", baseline_json(p, base, targets));
  }
  io::write_file(layout.eval_dir() + "/table.csv", emit_table_csv(reports));
  io::write_file(layout.eval_dir() + "/table.txt", emit_table_text(reports));
  io::write_file(layout.eval_dir() + "/stats.json", stats_json(comparisons));
  return reports;
}

void cmd_report(const RunConfig& config) {
  const OutputLayout layout(config);
  const std::string table = layout.eval_dir() + "/table.csv";
  require(table, "evaluate");
  const std::vector<ErrorReport> reports = parse_table_csv(io::read_file(table));
  io::write_file(layout.eval_dir() + "/report.txt", emit_table_text(reports));
  std::ostringstream plot;
  plot << "parameter,hand,statistic,model,random_baseline,reduction_percent,mad,unit\n";
  for (const ErrorReport& r : reports) {
    for (Hand h : kHands) {
      const HandReport& hr = r.hands[index(h)];
      const double k = display_scale(r.param);
      auto row = [&](const char* stat, double model, double base, int red) {
        plot << param_name(r.param) << "," << hand_suffix(h) << "," << stat << "," << csv::format_double(model * k)
             << "," << csv::format_double(base * k) << "," << red << "," << csv::format_double(hr.mad * k) << ","
             << display_unit(r.param) << "\n";
      };
      row("mean", hr.model.mean, hr.baseline.mean, hr.reduction_mean);
      row("median", hr.model.median, hr.baseline.median, hr.reduction_median);
    }
  }
  io::write_file(layout.eval_dir() + "/plot_data.csv", plot.str());
}

// ---- stimuli ----

namespace {

// BVH written back in the units of the source file.
std::string bvh_in_source_units(const Skeleton& sk, const MotionClip& motion, double scale) {
  std::vector<Joint> joints = sk.joints();
  std::vector<EndSite> ends = sk.end_sites();
  for (auto& j : joints) j.offset /= scale;
  for (auto& e : ends) e.offset /= scale;
  MotionClip m = motion;
  for (const Joint& j : sk.joints()) {
    for (std::size_t c = 0; c < j.channels.size(); ++c) {
      if (!is_rotation(j.channels[c])) m.frames.col(j.first_channel + static_cast<int>(c)) /= scale;
    }
  }
  return write_bvh(Skeleton(std::move(joints), std::move(ends)), m);
}

JointTrajectory slice(const JointTrajectory& t, int first, int last) {
  JointTrajectory out;
  out.clip_id = t.clip_id;
  out.frame_time = t.frame_time;
  out.frames = last - first + 1;
  for (std::size_t k = 0; k < t.tracks.size(); ++k) {
    if (t.tracks[k].empty()) continue;
    out.tracks[k].assign(t.tracks[k].begin() + first, t.tracks[k].begin() + last + 1);
  }
  return out;
}

ojson band_json(const Band& b) { return ojson{{"p25", b.p25}, {"p75", b.p75}, {"min", b.min}, {"max", b.max}}; }

}  // namespace

VerificationReport cmd_stimuli(const RunConfig& config, ParamKind param, Direction direction) {
  config.validate();
  const OutputLayout layout(config);
  const CorpusIndex corpus = load_corpus_index(layout);
  const Manifest manifest = load_manifest(config.manifest);
  const JointMap joint_map = load_joint_map(config.joint_map);

  const PercentileBands bands = compute_bands(corpus.params);
  std::vector<ClassifiedStroke> classified;
  for (std::size_t i = 0; i < corpus.strokes.size(); ++i) {
    ClassifiedStroke c;
    c.stroke = corpus.strokes[i];
    for (Hand h : kHands) c.cls[index(h)] = classify(corpus.params[i].value(param, h), bands.at(param, h));
    classified.push_back(c);
  }
  const std::uint64_t seed = stream_seed(config.seed, SeedStream::Stimuli, index(param) * 2 + (direction == Direction::Decrease));
  const std::vector<SequenceWindow> windows = select_sequences(classified, corpus.durations(), direction,
                                                               config.sequences, seed, config.sequence_seconds,
                                                               config.grid_seconds);
  const std::array<double, 2> target{default_target(bands.at(param, Hand::Left), direction),
                                     default_target(bands.at(param, Hand::Right), direction)};
  ManipulationOptions mo;
  mo.limits = std::array<Band, 2>{bands.at(param, Hand::Left), bands.at(param, Hand::Right)};
  mo.extraction = config.extraction;

  const std::string dir = layout.stimuli_dir(param, direction);
  fs::create_directories(dir + "/edited");

  ojson plan;
  plan["parameter"] = std::string(param_name(param));
  plan["direction"] = std::string(to_string(direction));
  plan["seed"] = seed;
  plan["bands"] = {{"L", band_json(bands.at(param, Hand::Left))}, {"R", band_json(bands.at(param, Hand::Right))}};
  plan["target"] = {{"L", target[0]}, {"R", target[1]}};
  plan["windows"] = ojson::array();
  ojson skipped = ojson::array();
  std::vector<ManipulationResult> results;
  std::ostringstream border;
  border << "stroke_id,hand,border_jump_m\n";

  for (const SequenceWindow& w : windows) {
    LoadedMotion m = load_motion(manifest.find(w.clip_id), joint_map);
    std::vector<const StrokeRecord*> members;
    for (const auto& id : w.stroke_ids) members.push_back(&corpus.strokes[corpus.position(id)]);
    std::sort(members.begin(), members.end(),
              [](const StrokeRecord* a, const StrokeRecord* b) { return a->start_s > b->start_s; });

    JointTrajectory traj = m.traj;
    MotionClip motion = m.doc.motion;
    int shift = 0;
    ojson wj;
    wj["clip_id"] = w.clip_id;
    wj["grid_index"] = w.grid_index;
    wj["start_s"] = w.start_s;
    wj["end_s"] = w.end_s;
    wj["fraction_low"] = w.fraction_low;
    wj["fraction_high"] = w.fraction_high;
    wj["score"] = w.score;
    wj["strokes"] = ojson::array();
    for (const StrokeRecord* s : members) {
      ManipulationResult r;
      try {
        r = apply_manipulation(*s, traj, param, target, mo);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UndefinedRatio && e.code() != ErrorCode::TargetOutsideLimits &&
            e.code() != ErrorCode::DegenerateGeometry) {
          throw;
        }
        skipped.push_back({{"stroke_id", s->stroke_id}, {"error", std::string(to_string(e.code()))},
                           {"message", e.what()}});
        continue;
      }
      if (param == ParamKind::Velocity) {
        const int n = r.interval.count(), k = r.edited_interval.count();
        std::vector<double> src(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) {
          src[static_cast<std::size_t>(j)] = r.interval.first + static_cast<double>(j) * (n - 1) / (k - 1);
        }
        src.back() = r.interval.last;
        motion = resample_motion(motion, r.interval, src, m.doc.skeleton);
        shift += k - n;
      } else if (param == ParamKind::ArmSwivel) {
        for (Hand h : kHands) {
          apply_swivel_to_motion(m.doc.skeleton, motion, joint_map, h, r.interval, r.applied[index(h)]);
        }
      }
      traj = r.edited;
      ojson sj;
      sj["stroke_id"] = r.stroke_id;
      for (Hand h : kHands) {
        const std::string sfx(1, hand_suffix(h));
        sj["original_" + sfx] = r.original[index(h)];
        sj["achieved_" + sfx] = r.achieved[index(h)];
        sj["applied_" + sfx] = r.applied[index(h)];
        border << r.stroke_id << "," << sfx << "," << csv::format_double(r.border_jump[index(h)]) << "\n";
      }
      wj["strokes"].push_back(sj);
      results.push_back(std::move(r));
    }

    const int first = std::clamp(static_cast<int>(std::llround(w.start_s / traj.frame_time)), 0, traj.frames - 1);
    const int last =
        std::clamp(static_cast<int>(std::llround(w.end_s / traj.frame_time)) + shift, first, traj.frames - 1);
    wj["frames"] = {first, last};
    char stem[64];
    std::snprintf(stem, sizeof stem, "%s_w%03d", w.clip_id.c_str(), w.grid_index);
    io::write_file(dir + "/edited/" + stem + "_tracks.csv", trajectory_csv(slice(traj, first, last)));
    if (param == ParamKind::Velocity || param == ParamKind::ArmSwivel) {
      MotionClip cut = motion;
      cut.frames = motion.frames.middleRows(first, last - first + 1);
      io::write_file(dir + "/edited/" + stem + ".bvh",
                     bvh_in_source_units(m.doc.skeleton, cut, m.entry.scale_factor));
      wj["bvh"] = std::string("edited/") + stem + ".bvh";
    }
    wj["tracks"] = std::string("edited/") + stem + "_tracks.csv";
    plan["windows"].push_back(wj);
  }
  plan["skipped"] = skipped;

  const VerificationReport report = verify_results(results, bands, direction);
  plan["verification"] = {{"passed", report.passed}, {"total", report.total}};
  io::write_file(dir + "/plan.json", plan.dump(2) + "\n");
  io::write_file(dir + "/verification.csv", verification_csv(report));
  io::write_file(dir + "/border_report.csv", border.str());
  return report;
}

}  // namespace gesture
