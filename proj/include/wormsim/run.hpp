#ifndef WORMSIM_RUN_HPP_
#define WORMSIM_RUN_HPP_

#include <filesystem>
#include <optional>
#include <string>

#include "wormsim/config.hpp"

namespace wormsim {

inline constexpr int kEpisodesCsvVersion = 1;
inline constexpr int kMusclesCsvVersion = 1;
inline constexpr int kMetricsCsvVersion = 1;
inline constexpr int kReplayCsvVersion = 1;

struct RunResult {
  std::string run_id;
  std::string config_hash;
  long episodes{};
  double wall_seconds{};
  bool skipped{};  // already complete, nothing to do
};

/// Trains one agent for `config` (already narrowed to a single seed, target
/// and adaptation arm) and writes into `dir`:
///   config.json, run.json, episodes.csv, muscles.csv, metrics.csv,
///   checkpoint.json
/// With `resume`, continues from checkpoint.json (rows past the checkpoint
/// are dropped) or returns at once if the run is complete. Without it, an
/// existing run in `dir` is an error.
RunResult run_training(const ExperimentConfig& config, const std::filesystem::path& dir,
                       bool resume);

struct ReplayResult {
  double initial_distance{};
  double final_distance{};
  int steps{};
  bool unstable{};
};

/// One deterministic (policy mean) episode from the run's checkpoint. Writes
/// per-control-step node positions to `out_csv`. Refuses when the checkpoint
/// was written for another config.
ReplayResult replay_run(const std::filesystem::path& run_dir, std::optional<int> target,
                        const std::filesystem::path& out_csv);

}  // namespace wormsim

#endif  // WORMSIM_RUN_HPP_
