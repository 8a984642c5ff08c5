#ifndef WORMSIM_CONFIG_HPP_
#define WORMSIM_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wormsim/env.hpp"
#include "wormsim/ppo.hpp"

namespace wormsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a sweep needs. Held in SI units; the file format uses the
/// morphology table's units (mm, kPa, mN, mN/mm, mN s/m) and is converted on
/// load and save.
struct ExperimentConfig {
  EnvConfig env;
  TrainConfig train;
  std::vector<int> targets{1};
  std::vector<std::uint64_t> seeds{0};
  std::vector<bool> adaptation{true, false};
  int log_cadence = 10;        // episodes between progress lines
  int checkpoint_every = 100;  // episodes between checkpoints

  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

/// FNV-1a over the canonical (sorted-key) JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// One (seed, target, adaptation) combination.
struct RunSpec {
  std::uint64_t seed{};
  int target = 1;
  bool adaptation = true;

  std::string run_id() const;
};

/// Narrows a sweep config to a single run.
ExperimentConfig run_config(const ExperimentConfig& base, const RunSpec& spec);

/// Cartesian product in target, adaptation, seed order.
std::vector<RunSpec> expand_runs(const ExperimentConfig& config);

}  // namespace wormsim

#endif  // WORMSIM_CONFIG_HPP_
