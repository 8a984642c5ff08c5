#ifndef WORMSIM_PPO_HPP_
#define WORMSIM_PPO_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wormsim/environment.hpp"
#include "wormsim/mlp.hpp"

namespace wormsim {

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int n_steps = 2;
  double learning_rate = 3e-4;
  double discount_gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_range = 0.2;
  int n_epochs = 10;
  int minibatch_size = 64;  // capped at the rollout size
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  int total_episodes = 1000;
  std::uint64_t seed = 0;
  std::vector<int> hidden_sizes{64, 64};
  double adam_epsilon = 1e-5;
  bool normalize_observations = true;
  double observation_clip = 10.0;
  int max_consecutive_failures = 10;

  void validate() const;
};

/// mt19937_64 plus a cached normal distribution; both stream to text so the
/// state survives a checkpoint exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  std::mt19937_64& engine() { return engine_; }

  std::string serialize() const;
  void deserialize(const std::string& text);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Running mean/variance of observations (parallel-update form, count
/// seeded with a tiny prior); normalized values are clipped.
struct RunningNormalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  double count = 1e-4;
  double clip = 10.0;
  double epsilon = 1e-8;

  RunningNormalizer() = default;
  explicit RunningNormalizer(Eigen::Index size, double clip_value = 10.0);

  void update(const Eigen::VectorXd& x);
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
};

/// Gaussian policy (MLP mean, free log std) and a separate value MLP.
struct PolicyParams {
  Mlp<double> policy;
  Eigen::VectorXd log_std;
  Mlp<double> value;
  AdamState adam;

  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;

  Eigen::Index size() const;
  /// policy layers, log_std, value layers
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  bool all_finite() const;
};

/// Orthogonal init: hidden gain sqrt(2), policy head 0.01, value head 1;
/// log_std starts at 0.
PolicyParams make_policy_params(Eigen::Index observation_size, Eigen::Index action_size,
                                const std::vector<int>& hidden_sizes, Rng& rng);

struct PolicyOutput {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  double value{};
};

/// Forward pass on an already normalized observation.
PolicyOutput policy_forward(const Eigen::VectorXd& observation, const PolicyParams& params);

struct ActionSample {
  Eigen::VectorXd action;  // unclipped
  double log_prob{};
};

ActionSample sample_action(const Eigen::VectorXd& mean, const Eigen::VectorXd& std, Rng& rng);

/// Sum of per-dimension diagonal Gaussian log densities.
double gaussian_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& log_std);

struct RolloutBuffer {
  Eigen::MatrixXd observations;  // one column per transition
  Eigen::MatrixXd actions;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd rewards;
  Eigen::VectorXd values;
  Eigen::VectorXd dones;  // 1 when the episode ended on this transition
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
  int size = 0;
  bool advantages_ready = false;

  RolloutBuffer() = default;
  RolloutBuffer(int capacity, Eigen::Index observation_size, Eigen::Index action_size);

  int capacity() const { return static_cast<int>(rewards.size()); }
  bool full() const { return size == capacity(); }
  void add(const Eigen::VectorXd& observation, const Eigen::VectorXd& action, double log_prob,
           double reward, double value, bool done);
  void clear();
};

/// Reverse-scan generalized advantage estimation. Advantages stay raw here;
/// ppo_update normalizes them per minibatch.
void compute_gae(RolloutBuffer& buffer, double discount_gamma, double gae_lambda,
                 double bootstrap_value);

/// One minibatch, observations already normalized.
struct PpoBatch {
  Eigen::MatrixXd observations;
  Eigen::MatrixXd actions;
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

struct LossTerms {
  double policy_loss{};
  double value_loss{};
  double entropy_loss{};  // minus the mean entropy
  double total{};
  double clip_fraction{};
  double approx_kl{};
};

/// Clipped surrogate + value_coef * MSE + entropy_coef * entropy_loss. Fills
/// `gradient` (flatten() order) when it is not null.
LossTerms ppo_loss(const PolicyParams& params, const PpoBatch& batch, const TrainConfig& config,
                   Eigen::VectorXd* gradient);

/// Global-norm clip in place; returns the norm before clipping.
double clip_gradient_norm(Eigen::VectorXd& gradient, double max_norm);

/// Bias-corrected Adam step on `params`; log_std is clamped afterwards.
void adam_step(PolicyParams& params, const Eigen::VectorXd& gradient, double learning_rate,
               double epsilon);

struct UpdateMetrics {
  long update{};
  long episode{};
  double policy_loss{};
  double value_loss{};
  double entropy_loss{};
  double clip_fraction{};
  double approx_kl{};
  double grad_norm{};
  bool skipped{};
};

/// n_epochs passes over shuffled minibatches. A non-finite loss or parameter
/// rolls back to the parameters held on entry and sets `skipped`.
UpdateMetrics ppo_update(const RolloutBuffer& buffer, PolicyParams& params,
                         const TrainConfig& config, Rng& rng);

struct EpisodeSummary {
  long episode{};
  double episode_return{};
  bool unstable{};
  int steps{};
};

/// Collect/update loop over any Environment.
class Trainer {
 public:
  struct Callbacks {
    std::function<void(const EpisodeSummary&)> on_episode;
    std::function<void(const UpdateMetrics&)> on_update;
    /// Empty buffer and a freshly reset environment: safe to checkpoint.
    std::function<void()> on_boundary;
  };

  Trainer(Environment& env, TrainConfig config);

  /// Runs until `config.total_episodes` episodes have finished.
  void train(const Callbacks& callbacks = {});

  /// Deterministic action (the policy mean) for a raw observation.
  Eigen::VectorXd mean_action(const Eigen::VectorXd& raw_observation) const;

  const TrainConfig& config() const { return config_; }
  TrainConfig& mutable_config() { return config_; }
  PolicyParams& params() { return params_; }
  const PolicyParams& params() const { return params_; }
  RunningNormalizer& normalizer() { return normalizer_; }
  const RunningNormalizer& normalizer() const { return normalizer_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  long episodes_done() const { return episodes_done_; }
  long updates_done() const { return updates_done_; }
  long steps_done() const { return steps_done_; }
  int consecutive_failures() const { return consecutive_failures_; }
  bool started() const { return started_; }
  const Eigen::VectorXd& current_observation() const { return current_obs_; }

  /// Restores counters and the raw observation the next step starts from.
  /// The caller is responsible for having reset the environment.
  void restore_progress(long episodes, long updates, long steps, int failures,
                        const Eigen::VectorXd& raw_observation);

 private:
  Eigen::VectorXd observe(const Eigen::VectorXd& raw, bool update_stats);

  Environment& env_;
  TrainConfig config_;
  Rng rng_;
  PolicyParams params_;
  RunningNormalizer normalizer_;
  RolloutBuffer buffer_;
  Eigen::VectorXd current_obs_;  // raw
  bool started_ = false;
  long episodes_done_ = 0;
  long updates_done_ = 0;
  long steps_done_ = 0;
  int consecutive_failures_ = 0;
};

}  // namespace wormsim

#endif  // WORMSIM_PPO_HPP_
