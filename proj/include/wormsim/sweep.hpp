#ifndef WORMSIM_SWEEP_HPP_
#define WORMSIM_SWEEP_HPP_

#include <filesystem>
#include <string>

#include "wormsim/config.hpp"

namespace wormsim {

struct SweepOptions {
  std::filesystem::path out;
  int workers = 1;
  bool resume = false;
  /// Binary that understands `train`; defaults to the running executable.
  std::filesystem::path executable;
};

struct SweepSummary {
  int completed{};
  int failed{};
  int skipped{};  // already complete on resume
};

/// One child process per (seed, target, adaptation) run, at most `workers`
/// at a time. The sweep directory holds config.json, manifest.json and
/// runs/<run_id>/. A crashed run is marked failed and the sweep goes on.
/// An existing manifest needs `resume`, and its config hash must match.
SweepSummary run_sweep(const ExperimentConfig& config, const SweepOptions& options);

}  // namespace wormsim

#endif  // WORMSIM_SWEEP_HPP_
