// gesture: extract, train, evaluate, baseline, stimuli, report, synth.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gesture/pipeline.hpp"
#include "gesture/synth.hpp"

using namespace gesture;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "run configuration (INI)")->required();
  app->add_option("--seed", c.seed, "override run.seed");
  app->add_option("--jobs", c.jobs, "worker threads");
  app->add_option("--out", c.out, "override paths.out");
}

RunConfig load(const Common& c) {
  RunConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.jobs) cfg.jobs = *c.jobs;
  if (c.out) cfg.out = *c.out;
  cfg.validate();
  return cfg;
}

int exit_code(ErrorCode code) {
  return code == ErrorCode::ConfigInvalid || code == ErrorCode::UnknownFeatureSet ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech-to-gesture-parameter pipeline"};
  app.require_subcommand(1);

  Common common;
  std::vector<std::string> params;
  std::string direction;
  bool length_only = false;

  CLI::App* extract = app.add_subcommand("extract", "parameters, feature cache, QA report and split");
  add_common(extract, common);

  CLI::App* train_cmd = app.add_subcommand("train", "train one parameter model");
  add_common(train_cmd, common);
  train_cmd->add_option("--param", params, "parameter name")->required()->expected(1);
  train_cmd->add_flag("--length-only", length_only, "train only the speech-length baseline model");

  CLI::App* evaluate = app.add_subcommand("evaluate", "error table and statistics");
  add_common(evaluate, common);
  evaluate->add_option("--param", params, "parameter names (default: every trained model)");

  CLI::App* baseline = app.add_subcommand("baseline", "restricted random-sampling baseline");
  add_common(baseline, common);
  baseline->add_option("--param", params, "parameter name")->required()->expected(1);

  CLI::App* stimuli = app.add_subcommand("stimuli", "stimulus plan, edited motion and verification");
  add_common(stimuli, common);
  stimuli->add_option("--param", params, "parameter name")->required()->expected(1);
  stimuli->add_option("--direction", direction, "increase or decrease")->required();

  CLI::App* report = app.add_subcommand("report", "render eval/table.csv and plot data");
  add_common(report, common);

  std::string synth_out;
  SynthOptions synth_opts;
  CLI::App* synth = app.add_subcommand("synth", "write the seeded synthetic mini-corpus");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_opts.seed, "generator seed");
  synth->add_option("--strokes", synth_opts.strokes, "number of strokes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const SynthCorpus corpus = generate_corpus(synth_opts);
      const std::string manifest = write_corpus(corpus, synth_out);
      std::cerr << "wrote " << corpus.clips.size() << " clips to " << manifest << "\n";
      return 0;
    }
    const RunConfig cfg = load(common);
    std::vector<ParamKind> kinds;
    for (const auto& p : params) kinds.push_back(parse_param(p));

    if (extract->parsed()) {
      const ExtractSummary s = cmd_extract(cfg);
      std::cerr << "extracted " << s.strokes << " strokes from " << s.clips << " clips (" << s.rejected
                << " rejected, " << s.glitches << " glitch frames)\n";
    } else if (train_cmd->parsed()) {
      auto progress = [](const EpochLog& e) {
        std::cerr << "epoch " << e.epoch << " train " << e.train_mse << " validation " << e.validation_mse << "\n";
      };
      const std::vector<bool> variants = length_only ? std::vector<bool>{true}
                                         : cfg.length_only ? std::vector<bool>{false, true}
                                                           : std::vector<bool>{false};
      for (bool lo : variants) {
        const TrainSummary s = cmd_train(cfg, kinds.front(), lo, progress);
        std::cerr << "saved " << s.checkpoint << " (best epoch " << s.best_epoch << ", validation MSE "
                  << s.best_validation_mse << ")\n";
      }
    } else if (evaluate->parsed()) {
      if (kinds.empty()) {
        const OutputLayout layout(cfg);
        for (ParamKind p : kAllParams) {
          if (std::filesystem::exists(layout.checkpoint(p, false))) kinds.push_back(p);
        }
        if (kinds.empty()) {
          throw Error(ErrorCode::MissingInput, "no trained models under " + layout.root + "; run `gesture train` first");
        }
      }
      const auto reports = cmd_evaluate(cfg, kinds);
      std::cerr << "evaluated " << reports.size() << " parameter(s) into " << OutputLayout(cfg).eval_dir() << "\n";
    } else if (baseline->parsed()) {
      const BaselineResult r = cmd_baseline(cfg, kinds.front());
      std::cerr << "baseline mean error L " << r.stats[0].mean << " R " << r.stats[1].mean << "\n";
    } else if (stimuli->parsed()) {
      const VerificationReport r = cmd_stimuli(cfg, kinds.front(), parse_direction(direction));
      std::cerr << "verified " << r.passed << "/" << r.total << " edited (stroke, hand) items in the target band\n";
    } else if (report->parsed()) {
      cmd_report(cfg);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
