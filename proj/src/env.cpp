#include "wormsim/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace wormsim {

void RewardConfig::validate() const {
  if (!(bonus_radius > 0.0)) throw std::invalid_argument("bonus radius must be > 0");
}

void EpisodeConfig::validate() const {
  if (control_steps < 1) throw std::invalid_argument("control_steps must be >= 1");
  if (!(control_dt > 0.0)) throw std::invalid_argument("control_dt must be > 0");
}

double reward(double n, const RewardConfig& config) {
  double bonus = 0.0;
  if (n <= config.bonus_radius)
    bonus = config.inner_bonus;
  else if (n <= 2.0 * config.bonus_radius)
    bonus = config.outer_bonus;
  return -n * n + bonus;
}

double distance_to_target(const LatticeSystem& lattice, const Eigen::Vector3d& target) {
  return (terminus_position(lattice) - target).norm();
}

LatticeEnv::LatticeEnv(EnvConfig config) : config_(std::move(config)) {
  config_.sim.validate();
  config_.adapt.validate();
  config_.reward.validate();
  config_.episode.validate();
  config_.prism.validate();
  config_.sim.substeps_per_control = std::max(
      1, static_cast<int>(std::lround(config_.episode.control_dt / config_.sim.dt)));

  rest_ = build_lattice(config_.lattice);
  lattice_ = rest_;
  const auto n_muscles = static_cast<int>(rest_.muscles.size());
  for (int m = 0; m < n_muscles; ++m) muscles_.push_back(initial_muscle_state(m, config_.adapt));

  if (config_.episode.observation_nodes == ObservationNodes::kAttachments) {
    for (const auto& m : rest_.muscles) {
      observed_nodes_.push_back({m.muscle_rod, 0});
      observed_nodes_.push_back({m.muscle_rod, rest_.system.rods[m.muscle_rod].node_count() - 1});
    }
  } else {
    for (std::size_t r = 0; r < rest_.system.rods.size(); ++r)
      for (std::size_t i = 0; i < rest_.system.rods[r].node_count(); ++i)
        observed_nodes_.push_back({r, i});
  }
  layout_.points = static_cast<Eigen::Index>(observed_nodes_.size()) + 1;
  layout_.muscles = n_muscles;

  target_ = target_position({config_.prism.center, config_.prism.half_extents,
                             config_.target_index});
  begin_episode();
  last_observation_ = observe();
}

void LatticeEnv::set_muscles(const std::vector<MuscleState>& muscles) {
  if (muscles.size() != muscles_.size())
    throw std::invalid_argument("muscle state count does not match the lattice");
  muscles_ = muscles;
}

Eigen::VectorXd LatticeEnv::force_ceilings() const {
  Eigen::VectorXd lambda(layout_.muscles);
  for (Eigen::Index m = 0; m < layout_.muscles; ++m) lambda[m] = muscles_[m].lambda;
  return lambda;
}

void LatticeEnv::begin_episode() {
  const auto n = static_cast<std::size_t>(layout_.muscles);
  lattice_ = rest_;
  previous_action_ = Eigen::VectorXd::Zero(layout_.muscles);
  held_action_ = Eigen::VectorXd::Zero(layout_.muscles);
  for (auto& m : muscles_) m.activation = 0.0;
  step_index_ = 0;
  episode_over_ = false;
  episode_finalized_ = false;
  episode_return_ = 0.0;
  max_step_reward_ = -std::numeric_limits<double>::infinity();
  strain_traces_.assign(n, {});
  peak_force_.assign(n, 0.0);
  activation_sum_.assign(n, 0.0);
  attempted_steps_ = 0;
  info_ = {terminus_position(lattice_), distance_to_target(lattice_, target_), false};
}

Eigen::VectorXd LatticeEnv::reset(std::uint64_t seed, int target_index) {
  config_.seed = seed;
  if (target_index != config_.target_index) {
    target_ = target_position({config_.prism.center, config_.prism.half_extents, target_index});
    config_.target_index = target_index;
  }
  begin_episode();
  last_observation_ = observe();
  return last_observation_;
}

Eigen::VectorXd LatticeEnv::reset() { return reset(config_.seed, config_.target_index); }

Eigen::VectorXd LatticeEnv::observe() const {
  Eigen::VectorXd obs(layout_.size());
  const auto& rods = lattice_.system.rods;
  Eigen::Index p = 0;
  for (const auto& ref : observed_nodes_) {
    obs.segment<3>(layout_.positions_offset() + 3 * p) = rods[ref.rod].positions.col(ref.node);
    obs.segment<3>(layout_.velocities_offset() + 3 * p) = rods[ref.rod].velocities.col(ref.node);
    ++p;
  }
  obs.segment<3>(layout_.positions_offset() + 3 * p) = terminus_position(lattice_);
  obs.segment<3>(layout_.velocities_offset() + 3 * p) = terminus_velocity(lattice_);
  obs.segment(layout_.actions_offset(), layout_.muscles) = previous_action_;
  obs.segment(layout_.ceilings_offset(), layout_.muscles) = force_ceilings();
  obs.segment<3>(layout_.target_offset()) = target_;
  return obs;
}

StepResult LatticeEnv::step(const Eigen::VectorXd& action) {
  if (episode_over_) throw std::logic_error("episode is over; call reset()");
  if (action.size() != layout_.muscles)
    throw std::invalid_argument("action has " + std::to_string(action.size()) +
                                " entries, expected " + std::to_string(layout_.muscles));

  Eigen::VectorXd applied = action.unaryExpr([](double a) {
    return std::isfinite(a) ? std::clamp(a, 0.0, 1.0) : 0.0;
  });
  if (config_.episode.action_hold) {
    if (step_index_ == 0)
      held_action_ = applied;
    else
      applied = held_action_;
  }

  auto& system = lattice_.system;
  std::vector<double> forces(muscles_.size());
  for (std::size_t m = 0; m < muscles_.size(); ++m) {
    muscles_[m].activation = applied[static_cast<Eigen::Index>(m)];
    forces[m] = muscle_force(muscles_[m].activation, muscles_[m].lambda);
    system.contraction[lattice_.muscle_rods[m]] = forces[m];
    activation_sum_[m] += muscles_[m].activation;
  }
  ++attempted_steps_;

  for (int k = 0; k < config_.sim.substeps_per_control && !system.unstable; ++k)
    wormsim::step(system, config_.sim);
  ++step_index_;
  previous_action_ = applied;

  StepResult result;
  if (system.unstable || detect_instability(system)) {
    system.unstable = true;
    result.observation = last_observation_;
    result.reward = config_.reward.instability_penalty;
    result.done = true;
    result.unstable = true;
    info_ = {info_.terminus, std::numeric_limits<double>::quiet_NaN(), true};
  } else {
    for (std::size_t m = 0; m < muscles_.size(); ++m) {
      strain_traces_[m].push_back(axial_strain(system.rods[lattice_.muscle_rods[m]]));
      peak_force_[m] = std::max(peak_force_[m], forces[m]);
    }
    const double n = distance_to_target(lattice_, target_);
    result.observation = observe();
    result.reward = reward(n, config_.reward);
    result.done = step_index_ >= config_.episode.control_steps;
    result.distance = n;
    info_ = {terminus_position(lattice_), n, false};
    last_observation_ = result.observation;
  }
  episode_return_ += result.reward;
  max_step_reward_ = std::max(max_step_reward_, result.reward);
  if (result.done) {
    episode_over_ = true;
    end_of_episode_hook();
  }
  return result;
}

void LatticeEnv::end_of_episode_hook() {
  if (episode_finalized_ || !episode_over_) return;
  EpisodeRecord record;
  record.episode = static_cast<int>(history_.size());
  record.episode_return = episode_return_;
  record.max_step_reward = max_step_reward_;
  record.final_distance = info_.distance;
  record.unstable = info_.unstable;
  record.steps = step_index_;
  for (std::size_t m = 0; m < muscles_.size(); ++m) {
    auto& state = muscles_[m];
    record.lambda.push_back(state.lambda);
    record_episode_use(state, strain_traces_[m], peak_force_[m]);
    record.force.push_back(state.last_episode_force);
    record.activation.push_back(activation_sum_[m] / std::max(attempted_steps_, 1));
    adapt(state, config_.adapt);
  }
  history_.push_back(std::move(record));
  episode_finalized_ = true;
}

}  // namespace wormsim
