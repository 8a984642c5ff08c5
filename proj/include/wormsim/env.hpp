#ifndef WORMSIM_ENV_HPP_
#define WORMSIM_ENV_HPP_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "wormsim/environment.hpp"
#include "wormsim/lattice.hpp"
#include "wormsim/muscle.hpp"

namespace wormsim {

struct RewardConfig {
  double bonus_radius = 0.001;  // d, metres
  double inner_bonus = 2.0;
  double outer_bonus = 0.5;
  double instability_penalty = -2.0;

  void validate() const;
};

enum class ObservationNodes { kAttachments, kAll };

struct EpisodeConfig {
  int control_steps = 10;
  double control_dt = 0.1;  // s
  bool action_hold = true;  // first action of an episode is held throughout
  ObservationNodes observation_nodes = ObservationNodes::kAttachments;

  void validate() const;
};

struct EnvConfig {
  LatticeSpec lattice;
  SimConfig<double> sim;
  AdaptConfig adapt;
  RewardConfig reward;
  EpisodeConfig episode;
  TargetPrism prism;
  int target_index = 1;
  std::uint64_t seed = 0;
};

/// -n^2 + phi(n), n in metres. phi = inner bonus for n <= d, outer bonus for
/// d < n <= 2d, zero beyond.
double reward(double n, const RewardConfig& config);

double distance_to_target(const LatticeSystem& lattice, const Eigen::Vector3d& target);

/// Observation vector layout:
///   [positions (3P) | velocities (3P) | previous actions (M) | ceilings (M) | target (3)]
/// where P observed points (the last one is the terminus) and M muscles.
struct ObservationLayout {
  Eigen::Index points{};
  Eigen::Index muscles{};

  Eigen::Index positions_offset() const { return 0; }
  Eigen::Index velocities_offset() const { return 3 * points; }
  Eigen::Index actions_offset() const { return 6 * points; }
  Eigen::Index ceilings_offset() const { return 6 * points + muscles; }
  Eigen::Index target_offset() const { return 6 * points + 2 * muscles; }
  Eigen::Index size() const { return 6 * points + 2 * muscles + 3; }

  bool operator==(const ObservationLayout&) const = default;
};

struct StepInfo {
  Eigen::Vector3d terminus = Eigen::Vector3d::Zero();
  double distance{};
  bool unstable{};
};

/// Per-episode summary, including the ceilings used during the episode and
/// the force and mean activation of every muscle.
struct EpisodeRecord {
  int episode{};
  double episode_return{};
  double max_step_reward{};
  double final_distance{};
  bool unstable{};
  int steps{};
  std::vector<double> lambda;
  std::vector<double> force;
  std::vector<double> activation;
};

class LatticeEnv : public Environment {
 public:
  explicit LatticeEnv(EnvConfig config);

  Eigen::Index observation_size() const override { return layout_.size(); }
  Eigen::Index action_size() const override { return layout_.muscles; }

  /// Rest configuration, zero velocities, zero previous actions. Muscle
  /// ceilings carry over from earlier episodes.
  Eigen::VectorXd reset(std::uint64_t seed, int target_index);
  Eigen::VectorXd reset() override;
  StepResult step(const Eigen::VectorXd& action) override;

  /// Records muscle use and adapts ceilings once per finished episode; step()
  /// calls it when an episode ends, later calls are no-ops.
  void end_of_episode_hook();

  const EnvConfig& config() const { return config_; }
  const LatticeSystem& lattice() const { return lattice_; }
  const std::vector<MuscleState>& muscles() const { return muscles_; }
  void set_muscles(const std::vector<MuscleState>& muscles);
  const ObservationLayout& layout() const { return layout_; }
  const Eigen::Vector3d& target() const { return target_; }
  const StepInfo& last_info() const { return info_; }
  const std::vector<EpisodeRecord>& history() const { return history_; }
  Eigen::VectorXd force_ceilings() const;
  int substeps_per_control() const { return config_.sim.substeps_per_control; }

 private:
  Eigen::VectorXd observe() const;
  void begin_episode();

  EnvConfig config_;
  LatticeSystem rest_;
  LatticeSystem lattice_;
  std::vector<MuscleState> muscles_;
  std::vector<NodeRef> observed_nodes_;
  ObservationLayout layout_;
  Eigen::Vector3d target_ = Eigen::Vector3d::Zero();
  Eigen::VectorXd previous_action_;
  Eigen::VectorXd held_action_;
  Eigen::VectorXd last_observation_;
  StepInfo info_;

  int step_index_ = 0;
  bool episode_over_ = false;
  bool episode_finalized_ = true;
  double episode_return_ = 0.0;
  double max_step_reward_ = 0.0;
  std::vector<std::vector<double>> strain_traces_;
  std::vector<double> peak_force_;
  std::vector<double> activation_sum_;
  int attempted_steps_ = 0;
  std::vector<EpisodeRecord> history_;
};

}  // namespace wormsim

#endif  // WORMSIM_ENV_HPP_
