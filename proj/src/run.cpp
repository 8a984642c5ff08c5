#include "wormsim/run.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include <spdlog/spdlog.h>

#include "wormsim/checkpoint.hpp"
#include "wormsim/io.hpp"

namespace wormsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const std::vector<std::string> kEpisodeHeader{"episode", "seed", "target", "adaptation",
                                              "return", "max_step_reward", "final_distance",
                                              "unstable", "steps"};
const std::vector<std::string> kMuscleHeader{"episode", "muscle_id", "lambda", "force",
                                             "activation"};
const std::vector<std::string> kMetricsHeader{"update",        "episode",   "policy_loss",
                                              "value_loss",    "entropy_loss", "clip_fraction",
                                              "approx_kl",     "grad_norm", "skipped"};

// Rewrites `path` keeping rows whose `key` column is below `limit`, or
// creates it with just the version line and header.
void prepare_csv(const fs::path& path, const std::string& version_line,
                 const std::vector<std::string>& header, const std::string& key, long limit) {
  std::string text = version_line + "\n" + join_csv(header) + "\n";
  if (fs::exists(path)) {
    const CsvTable table = read_csv(path);
    const std::size_t col = table.column(key);
    for (const auto& row : table.rows)
      if (std::stol(row[col]) < limit) text += join_csv(row) + "\n";
  }
  write_text_atomic(path, text);
}

}  // namespace

RunResult run_training(const ExperimentConfig& config, const fs::path& dir, bool resume) {
  config.validate();
  if (config.seeds.size() != 1 || config.targets.size() != 1 || config.adaptation.size() != 1)
    throw ConfigError("a single run needs exactly one seed, target and adaptation arm");
  const RunSpec spec{config.seeds[0], config.targets[0], config.adaptation[0]};
  const std::string hash = config_hash(config);

  RunResult result;
  result.run_id = spec.run_id();
  result.config_hash = hash;

  const fs::path run_json = dir / "run.json";
  const fs::path checkpoint_json = dir / "checkpoint.json";
  json meta = json::object();
  if (fs::exists(run_json)) {
    if (!resume)
      throw ConfigError("'" + dir.string() + "' already holds a run; pass --resume to continue it");
    meta = read_json(run_json);
    if (meta.at("config_hash").get<std::string>() != hash)
      throw ConfigError("config hash " + hash + " differs from the run in '" + dir.string() +
                        "' (" + meta.at("config_hash").get<std::string>() + ")");
    if (meta.value("status", "") == "completed" &&
        meta.value("episodes", 0L) >= config.train.total_episodes) {
      result.episodes = meta.value("episodes", 0L);
      result.skipped = true;
      return result;
    }
  }
  fs::create_directories(dir);
  save_config(config, dir / "config.json");

  LatticeEnv env(config.env);
  Trainer trainer(env, config.train);
  long resumed_from = 0;
  if (resume && fs::exists(checkpoint_json)) {
    const json ckpt = read_json(checkpoint_json);
    if (ckpt.at("config_hash").get<std::string>() != hash)
      throw ConfigError("checkpoint in '" + dir.string() + "' belongs to another config");
    env.set_muscles(muscles_from_json(ckpt.at("muscles")));
    env.reset();
    trainer_from_json(ckpt.at("trainer"), trainer);
    resumed_from = trainer.episodes_done();
    spdlog::info("{}: resuming at episode {}", result.run_id, resumed_from);
  }

  prepare_csv(dir / "episodes.csv", csv_version_line("episodes", kEpisodesCsvVersion),
              kEpisodeHeader, "episode", resumed_from);
  prepare_csv(dir / "muscles.csv", csv_version_line("muscles", kMusclesCsvVersion), kMuscleHeader,
              "episode", resumed_from);
  prepare_csv(dir / "metrics.csv", csv_version_line("metrics", kMetricsCsvVersion),
              kMetricsHeader, "update", trainer.updates_done());
  std::ofstream episodes(dir / "episodes.csv", std::ios::app);
  std::ofstream muscles(dir / "muscles.csv", std::ios::app);
  std::ofstream metrics(dir / "metrics.csv", std::ios::app);
  if (!episodes || !muscles || !metrics)
    throw std::runtime_error("cannot open CSV logs in '" + dir.string() + "'");

  const double previous_wall = meta.value("wall_seconds", 0.0);
  meta = {{"version", 1},
          {"run_id", result.run_id},
          {"config_hash", hash},
          {"seed", spec.seed},
          {"target", spec.target},
          {"adaptation", spec.adaptation},
          {"status", "running"},
          {"episodes", resumed_from},
          {"started_at", meta.value("started_at", utc_now())},
          {"wall_seconds", previous_wall}};
  write_json_atomic(run_json, meta);

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return previous_wall +
           std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  long last_checkpoint = -1;
  const auto write_checkpoint = [&] {
    episodes.flush();
    muscles.flush();
    metrics.flush();
    json ckpt{{"config_hash", hash},
              {"run_id", result.run_id},
              {"trainer", trainer_to_json(trainer)},
              {"muscles", muscles_to_json(env.muscles())}};
    write_json_atomic(checkpoint_json, ckpt);
    last_checkpoint = trainer.episodes_done();
    meta["episodes"] = trainer.episodes_done();
    meta["wall_seconds"] = elapsed();
    write_json_atomic(run_json, meta);
  };

  const std::string adapt_flag = spec.adaptation ? "1" : "0";
  double window_return = 0.0;
  int window_count = 0;
  Trainer::Callbacks callbacks;
  callbacks.on_episode = [&](const EpisodeSummary& s) {
    const EpisodeRecord& rec = env.history().back();
    episodes << join_csv({std::to_string(s.episode), std::to_string(spec.seed),
                          std::to_string(spec.target), adapt_flag, format_double(s.episode_return),
                          format_double(rec.max_step_reward), format_double(rec.final_distance),
                          s.unstable ? "1" : "0", std::to_string(s.steps)})
             << '\n';
    for (std::size_t m = 0; m < rec.lambda.size(); ++m)
      muscles << join_csv({std::to_string(s.episode), std::to_string(m),
                           format_double(rec.lambda[m]), format_double(rec.force[m]),
                           format_double(rec.activation[m])})
              << '\n';
    window_return += s.episode_return;
    ++window_count;
    if ((s.episode + 1) % config.log_cadence == 0) {
      spdlog::info("{}: episode {} mean return {:.6g} over last {}", result.run_id, s.episode + 1,
                   window_return / window_count, window_count);
      window_return = 0.0;
      window_count = 0;
    }
  };
  callbacks.on_update = [&](const UpdateMetrics& m) {
    metrics << join_csv({std::to_string(m.update), std::to_string(m.episode),
                         format_double(m.policy_loss), format_double(m.value_loss),
                         format_double(m.entropy_loss), format_double(m.clip_fraction),
                         format_double(m.approx_kl), format_double(m.grad_norm),
                         m.skipped ? "1" : "0"})
            << '\n';
  };
  callbacks.on_boundary = [&] {
    if (last_checkpoint < 0 || trainer.episodes_done() - last_checkpoint >= config.checkpoint_every)
      write_checkpoint();
  };

  try {
    trainer.train(callbacks);
  } catch (...) {
    episodes.flush();
    muscles.flush();
    metrics.flush();
    meta["status"] = "failed";
    meta["wall_seconds"] = elapsed();
    write_json_atomic(run_json, meta);
    throw;
  }
  if (last_checkpoint != trainer.episodes_done()) write_checkpoint();
  meta["status"] = "completed";
  meta["episodes"] = trainer.episodes_done();
  meta["finished_at"] = utc_now();
  meta["wall_seconds"] = elapsed();
  write_json_atomic(run_json, meta);

  result.episodes = trainer.episodes_done();
  result.wall_seconds = elapsed();
  return result;
}

ReplayResult replay_run(const fs::path& run_dir, std::optional<int> target,
                        const fs::path& out_csv) {
  ExperimentConfig config = load_config(run_dir / "config.json");
  const std::string hash = config_hash(config);
  const json ckpt = read_json(run_dir / "checkpoint.json");
  if (ckpt.at("config_hash").get<std::string>() != hash)
    throw ConfigError("checkpoint in '" + run_dir.string() + "' was written for config " +
                      ckpt.at("config_hash").get<std::string>() + ", not " + hash);
  if (target) {
    if (*target < 1 || *target > 8) throw ConfigError("target must lie in 1..8");
    config.env.target_index = *target;
  }

  LatticeEnv env(config.env);
  Trainer trainer(env, config.train);
  env.set_muscles(muscles_from_json(ckpt.at("muscles")));
  trainer_from_json(ckpt.at("trainer"), trainer);
  Eigen::VectorXd obs = env.reset();

  std::string text = csv_version_line("replay", kReplayCsvVersion) + "\n" +
                     join_csv({"step", "rod", "kind", "node", "x", "y", "z"}) + "\n";
  const auto dump = [&](int step) {
    const auto& lat = env.lattice();
    for (std::size_t r = 0; r < lat.system.rods.size(); ++r) {
      const bool structural = r < lat.structural_rods.size();
      const auto& pos = lat.system.rods[r].positions;
      for (Eigen::Index i = 0; i < pos.cols(); ++i)
        text += join_csv({std::to_string(step), std::to_string(r),
                          structural ? "structure" : "muscle", std::to_string(i),
                          format_double(pos(0, i)), format_double(pos(1, i)),
                          format_double(pos(2, i))}) +
                "\n";
    }
    const Eigen::Vector3d t = terminus_position(lat);
    text += join_csv({std::to_string(step), "-1", "terminus", "0", format_double(t.x()),
                      format_double(t.y()), format_double(t.z())}) +
            "\n";
  };

  ReplayResult result;
  result.initial_distance = env.last_info().distance;
  result.final_distance = result.initial_distance;
  dump(0);
  for (int step = 1;; ++step) {
    const StepResult r = env.step(trainer.mean_action(obs));
    obs = r.observation;
    result.steps = step;
    result.unstable = r.unstable;
    result.final_distance = r.distance;
    if (!r.unstable) dump(step);
    if (r.done) break;
  }
  write_text_atomic(out_csv, text);
  return result;
}

}  // namespace wormsim
