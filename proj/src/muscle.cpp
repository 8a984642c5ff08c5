#include "wormsim/muscle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace wormsim {

void AdaptConfig::validate() const {
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  if (!(gamma_per_mn >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (!(lambda_0 > 0.0)) throw std::invalid_argument("lambda_0 must be > 0");
}

MuscleState initial_muscle_state(int muscle_id, const AdaptConfig& config) {
  return {muscle_id, config.lambda_0, 0.0, 0.0, 0.0};
}

double muscle_force(double activation, double lambda) {
  if (!(activation >= 0.0 && activation <= 1.0)) {
    spdlog::warn("activation {} outside [0, 1]; clamped", activation);
    activation = std::isnan(activation) ? 0.0 : std::clamp(activation, 0.0, 1.0);
  }
  return activation * lambda;
}

double adaptation_coefficient(double strain, double force_newtons, const AdaptConfig& config) {
  return 1.0 + config.beta * std::abs(strain) +
         config.gamma_per_mn * std::abs(force_newtons * kMillinewtonsPerNewton);
}

double adapt(MuscleState& state, const AdaptConfig& config) {
  if (!config.adaptation_enabled) return state.lambda;
  const double alpha =
      adaptation_coefficient(state.last_episode_strain, state.last_episode_force, config);
  state.lambda = std::min(alpha * state.lambda, 2.0 * config.lambda_0);
  return state.lambda;
}

void record_episode_use(MuscleState& state, std::span<const double> strain_trace,
                        double force_this_episode) {
  if (strain_trace.empty()) {
    state.last_episode_strain = 0.0;
    state.last_episode_force = 0.0;
    return;
  }
  double peak = 0.0;
  for (double s : strain_trace) peak = std::max(peak, std::abs(s));
  state.last_episode_strain = peak;
  state.last_episode_force = std::abs(force_this_episode);
}

}  // namespace wormsim
