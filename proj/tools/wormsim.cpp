// wormsim: lattice worm simulation, training and reporting.
//
//   wormsim describe [--config c.json] [--out topology.json]
//   wormsim train    --out DIR [--config c.json] [--seed N] [--target K]
//                    [--adaptation on|off] [--episodes N] [--resume]
//   wormsim sweep    --out DIR [--config c.json] [--workers N] [--episodes N] [--resume]
//   wormsim report   --out DIR [--window N] [--episodes N]
//   wormsim replay   --out RUN_DIR [--target K]
//
// Exit status: 0 success, 1 configuration error, 2 runtime failure.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "wormsim/config.hpp"
#include "wormsim/describe.hpp"
#include "wormsim/io.hpp"
#include "wormsim/report.hpp"
#include "wormsim/run.hpp"
#include "wormsim/sweep.hpp"

namespace fs = std::filesystem;
using namespace wormsim;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> target;
  std::optional<std::string> adaptation;
  std::optional<int> episodes;
  int workers = 1;
  bool resume = false;
  int window = 50;
};

ExperimentConfig base_config(const Options& o) {
  ExperimentConfig config = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.episodes) {
    if (*o.episodes < 0) throw ConfigError("--episodes must be >= 0");
    config.train.total_episodes = *o.episodes;
  }
  config.validate();
  return config;
}

int cmd_describe(const Options& o) {
  const std::string text = describe(base_config(o)).dump(2) + "\n";
  if (o.out.empty())
    std::cout << text;
  else
    write_text_atomic(o.out, text);
  return 0;
}

int cmd_train(const Options& o) {
  const ExperimentConfig base = base_config(o);
  RunSpec spec{base.seeds.front(), base.targets.front(), base.adaptation.front()};
  if (o.seed) spec.seed = *o.seed;
  if (o.target) spec.target = *o.target;
  if (o.adaptation) spec.adaptation = *o.adaptation == "on";
  const RunResult r = run_training(run_config(base, spec), o.out, o.resume);
  if (r.skipped)
    std::printf("%s already complete (%ld episodes)\n", r.run_id.c_str(), r.episodes);
  else
    std::printf("%s finished %ld episodes in %.1f s\n", r.run_id.c_str(), r.episodes,
                r.wall_seconds);
  return 0;
}

int cmd_sweep(const Options& o) {
  SweepOptions options;
  options.out = o.out;
  options.workers = o.workers;
  options.resume = o.resume;
  const SweepSummary s = run_sweep(base_config(o), options);
  std::printf("sweep: %d completed, %d failed, %d already complete\n", s.completed, s.failed,
              s.skipped);
  return s.failed > 0 ? kExitRuntime : 0;
}

int cmd_report(const Options& o) {
  const fs::path out_dir = fs::path(o.out) / "report";
  const auto stems = emit_report(o.out, out_dir, o.window, o.episodes.value_or(100));
  for (const auto& s : stems) std::printf("%s.{csv,svg}\n", s.string().c_str());
  return 0;
}

int cmd_replay(const Options& o) {
  const fs::path csv = fs::path(o.out) / "replay.csv";
  const ReplayResult r = replay_run(o.out, o.target, csv);
  std::printf("replay: %d steps, initial distance %.6g m, final distance %.6g m%s\n", r.steps,
              r.initial_distance, r.final_distance, r.unstable ? " (unstable)" : "");
  std::printf("positions written to %s\n", csv.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice worm simulation, training and reporting"};
  app.require_subcommand(1);
  Options o;

  auto* describe_cmd = app.add_subcommand("describe", "Dump the built lattice topology as JSON");
  describe_cmd->add_option("--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  describe_cmd->add_option("--out", o.out, "Output file (default: stdout)");

  auto* train_cmd = app.add_subcommand("train", "Train a single agent");
  train_cmd->add_option("--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", o.out, "Run directory")->required();
  train_cmd->add_option("--seed", o.seed, "Seed (default: first in config)");
  train_cmd->add_option("--target", o.target, "Target corner 1-8")->check(CLI::Range(1, 8));
  train_cmd->add_option("--adaptation", o.adaptation, "Muscle adaptation")
      ->check(CLI::IsMember({"on", "off"}));
  train_cmd->add_option("--episodes", o.episodes, "Training episodes");
  train_cmd->add_flag("--resume", o.resume, "Continue from the run's checkpoint");

  auto* sweep_cmd = app.add_subcommand("sweep", "Train every seed x target x adaptation run");
  sweep_cmd->add_option("--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out", o.out, "Sweep directory")->required();
  sweep_cmd->add_option("--workers", o.workers, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--episodes", o.episodes, "Training episodes per run");
  sweep_cmd->add_flag("--resume", o.resume, "Skip completed runs, continue the rest");

  auto* report_cmd = app.add_subcommand("report", "Emit figure data (CSV) and SVG figures");
  report_cmd->add_option("--out", o.out, "Sweep or run directory")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--window", o.window, "Rolling window for reward curves")
      ->check(CLI::PositiveNumber);
  report_cmd->add_option("--episodes", o.episodes, "Heatmap covers each run's last N episodes")
      ->check(CLI::PositiveNumber);

  auto* replay_cmd = app.add_subcommand("replay", "Replay the checkpointed policy deterministically");
  replay_cmd->add_option("--out", o.out, "Run directory")->required()->check(CLI::ExistingDirectory);
  replay_cmd->add_option("--target", o.target, "Target corner 1-8")->check(CLI::Range(1, 8));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*describe_cmd) return cmd_describe(o);
    if (*train_cmd) return cmd_train(o);
    if (*sweep_cmd) return cmd_sweep(o);
    if (*report_cmd) return cmd_report(o);
    if (*replay_cmd) return cmd_replay(o);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
