#include "gesture/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include "gesture/csv.hpp"
#include "gesture/rng.hpp"

namespace gesture {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& expected) {
  throw Error(ErrorCode::ConfigInvalid, "config key '" + key + "': '" + value + "' is not " + expected);
}

double to_real(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v, "a number");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v, "an integer");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v, "an unsigned integer");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, v, "a boolean");
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (std::filesystem::path(base) / path).lexically_normal().string();
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigInvalid, m); };
  model.validate();
  if (epochs < 0) fail("model.epochs must be >= 0");
  if (jobs < 1) fail("run.jobs must be >= 1");
  if (!(validation_fraction > 0.0) || !(test_fraction > 0.0) || validation_fraction + test_fraction >= 1.0) {
    fail("split fractions must be > 0 and sum to less than 1");
  }
  if (baseline_repeats < 1) fail("evaluate.baseline_repeats must be >= 1");
  if (sequences < 1) fail("stimuli.sequences must be >= 1");
  if (!(sequence_seconds > 0.0) || !(grid_seconds > 0.0)) fail("stimuli window and grid must be > 0");
  if (feature_set == FeatureSet::LengthOnly) {
    fail("features.set selects the speech features; the length-only model is evaluate.length_only");
  }
  if (feature_set == FeatureSet::ExternalPrecomputed && external_features.empty()) {
    fail("features.set = external_precomputed needs paths.external_features");
  }
}

RunConfig parse_config(std::string_view ini_text, const std::string& base_dir) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in{std::string(ini_text)};
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigInvalid, "config line " + std::to_string(e.line()) + ": " + e.message());
  }

  RunConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> keys{
      {"paths.manifest", [&](auto&, auto& v) { c.manifest = resolve(base_dir, v); }},
      {"paths.joint_map", [&](auto&, auto& v) { c.joint_map = resolve(base_dir, v); }},
      {"paths.external_features", [&](auto&, auto& v) { c.external_features = resolve(base_dir, v); }},
      {"paths.out", [&](auto&, auto& v) { c.out = resolve(base_dir, v); }},
      {"features.set", [&](auto&, auto& v) { c.feature_set = parse_feature_set(v); }},
      {"model.ff_size", [&](auto& k, auto& v) { c.model.ff_size = static_cast<int>(to_int(k, v)); }},
      {"model.hidden_size", [&](auto& k, auto& v) { c.model.hidden_size = static_cast<int>(to_int(k, v)); }},
      {"model.input_dropout", [&](auto& k, auto& v) { c.model.input_dropout = to_real(k, v); }},
      {"model.output_dropout", [&](auto& k, auto& v) { c.model.output_dropout = to_real(k, v); }},
      {"model.learning_rate", [&](auto& k, auto& v) { c.model.learning_rate = to_real(k, v); }},
      {"model.epochs", [&](auto& k, auto& v) { c.epochs = static_cast<int>(to_int(k, v)); }},
      {"model.batch_size", [&](auto& k, auto& v) { c.model.batch_size = static_cast<int>(to_int(k, v)); }},
      {"model.precision",
       [&](auto& k, auto& v) {
         if (v == "float32") {
           c.model.precision = Precision::Float32;
         } else if (v == "float64") {
           c.model.precision = Precision::Float64;
         } else {
           bad(k, v, "float32 or float64");
         }
       }},
      {"run.seed", [&](auto& k, auto& v) { c.seed = to_u64(k, v); }},
      {"run.jobs", [&](auto& k, auto& v) { c.jobs = static_cast<int>(to_int(k, v)); }},
      {"split.validation_fraction", [&](auto& k, auto& v) { c.validation_fraction = to_real(k, v); }},
      {"split.test_fraction", [&](auto& k, auto& v) { c.test_fraction = to_real(k, v); }},
      {"evaluate.baseline_repeats", [&](auto& k, auto& v) { c.baseline_repeats = static_cast<int>(to_int(k, v)); }},
      {"evaluate.length_only", [&](auto& k, auto& v) { c.length_only = to_bool(k, v); }},
      {"extract.major_axis",
       [&](auto& k, auto& v) {
         if (v == "farthest_pair") {
           c.extraction.major_axis = MajorAxisMode::FarthestPair;
         } else if (v == "bounding_box") {
           c.extraction.major_axis = MajorAxisMode::BoundingBoxDiagonal;
         } else {
           bad(k, v, "farthest_pair or bounding_box");
         }
       }},
      {"extract.down",
       [&](auto& k, auto& v) {
         const auto parts = csv::split_line(v);
         if (parts.size() != 3) bad(k, v, "three comma-separated numbers");
         for (int i = 0; i < 3; ++i) c.extraction.swivel.down[i] = to_real(k, parts[static_cast<std::size_t>(i)]);
         if (c.extraction.swivel.down.norm() < 1e-12) bad(k, v, "a nonzero direction");
         c.extraction.swivel.down.normalize();
       }},
      {"extract.min_arm_length", [&](auto& k, auto& v) { c.extraction.swivel.min_arm_length = to_real(k, v); }},
      {"stimuli.sequences", [&](auto& k, auto& v) { c.sequences = static_cast<int>(to_int(k, v)); }},
      {"stimuli.sequence_seconds", [&](auto& k, auto& v) { c.sequence_seconds = to_real(k, v); }},
      {"stimuli.grid_seconds", [&](auto& k, auto& v) { c.grid_seconds = to_real(k, v); }},
  };

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorCode::ConfigInvalid, "config key '" + section + "' is outside any section");
    }
    for (const auto& [name, value] : body) {
      const std::string key = section + "." + name;
      const auto it = keys.find(key);
      if (it == keys.end()) throw Error(ErrorCode::ConfigInvalid, "unknown config key '" + key + "'");
      it->second(key, value.data());
    }
  }
  if (c.manifest.empty()) throw Error(ErrorCode::ConfigInvalid, "config is missing paths.manifest");
  if (c.joint_map.empty()) throw Error(ErrorCode::ConfigInvalid, "config is missing paths.joint_map");
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingInput, "config file '" + path + "' not found");
  const std::string base = std::filesystem::path(path).parent_path().string();
  return parse_config(io::read_file(path), base.empty() ? "." : base);
}

std::uint64_t stream_seed(std::uint64_t run_seed, SeedStream stream, std::uint64_t sub) {
  return derive_seed(derive_seed(run_seed, static_cast<std::uint64_t>(stream)), sub);
}

}  // namespace gesture
