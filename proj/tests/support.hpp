#ifndef WORMSIM_TESTS_SUPPORT_HPP_
#define WORMSIM_TESTS_SUPPORT_HPP_

#include <filesystem>
#include <string>

#include "wormsim/config.hpp"
#include "wormsim/env.hpp"

namespace wormsim::testing {

/// Reduced lattice used wherever a full worm would only cost time.
inline EnvConfig small_env(int target = 3) {
  EnvConfig env;
  env.lattice.n_columns = 3;
  env.lattice.n_levels = 2;
  env.lattice.structural_elements = 10;
  env.sim.dt = 1e-4;
  env.target_index = target;
  return env;
}

inline ExperimentConfig small_experiment(int episodes) {
  ExperimentConfig config;
  config.env = small_env();
  config.train.total_episodes = episodes;
  config.targets = {3};
  config.seeds = {0};
  config.adaptation = {true};
  config.checkpoint_every = 5;
  return config;
}

/// Fresh empty directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::path(WORMSIM_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace wormsim::testing

#endif  // WORMSIM_TESTS_SUPPORT_HPP_
