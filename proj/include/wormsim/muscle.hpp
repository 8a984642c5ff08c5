#ifndef WORMSIM_MUSCLE_HPP_
#define WORMSIM_MUSCLE_HPP_

#include <span>

namespace wormsim {

/// The force coefficient gamma is specified per millinewton; this is the only
/// place the adaptation law leaves SI units.
inline constexpr double kMillinewtonsPerNewton = 1000.0;

struct AdaptConfig {
  double beta = 1e-6;          // per unit |strain|
  double gamma_per_mn = 4e-8;  // per mN of |force|
  double lambda_0 = 2.0;       // N (2000 mN)
  bool adaptation_enabled = true;

  void validate() const;
};

struct MuscleState {
  int muscle_id{};
  double lambda{};               // force ceiling, N
  double last_episode_strain{};  // max |axial strain| in the previous episode
  double last_episode_force{};   // force produced in the previous episode, N
  double activation{};           // [0, 1]
};

MuscleState initial_muscle_state(int muscle_id, const AdaptConfig& config);

/// F = A * lambda. Out-of-range activations are clamped to [0, 1] with a warning.
double muscle_force(double activation, double lambda);

/// alpha = 1 + beta |strain| + gamma |force|, with force converted to mN.
double adaptation_coefficient(double strain, double force_newtons, const AdaptConfig& config);

/// lambda <- min(alpha * lambda, 2 lambda_0) when adaptation is enabled.
/// Returns the new ceiling.
double adapt(MuscleState& state, const AdaptConfig& config);

/// Stores max |strain| over the trace and the episode's force. An empty trace
/// (episode ended before any control step completed) records zeros.
void record_episode_use(MuscleState& state, std::span<const double> strain_trace,
                        double force_this_episode);

}  // namespace wormsim

#endif  // WORMSIM_MUSCLE_HPP_
