#include "wormsim/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

namespace wormsim {

namespace {

const double kHalfLogTwoPi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

void TrainConfig::validate() const {
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(discount_gamma > 0.0 && discount_gamma <= 1.0))
    throw std::invalid_argument("discount_gamma must lie in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw std::invalid_argument("gae_lambda must lie in [0, 1]");
  if (!(clip_range > 0.0)) throw std::invalid_argument("clip_range must be > 0");
  if (n_epochs < 1) throw std::invalid_argument("n_epochs must be >= 1");
  if (minibatch_size < 1) throw std::invalid_argument("minibatch_size must be >= 1");
  if (value_coef < 0.0 || entropy_coef < 0.0)
    throw std::invalid_argument("loss coefficients must be >= 0");
  if (!(max_grad_norm > 0.0)) throw std::invalid_argument("max_grad_norm must be > 0");
  if (total_episodes < 0) throw std::invalid_argument("total_episodes must be >= 0");
  if (hidden_sizes.empty()) throw std::invalid_argument("need at least one hidden layer");
  for (int h : hidden_sizes)
    if (h < 1) throw std::invalid_argument("hidden layer sizes must be >= 1");
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("adam_epsilon must be > 0");
  if (!(observation_clip > 0.0)) throw std::invalid_argument("observation_clip must be > 0");
  if (max_consecutive_failures < 1)
    throw std::invalid_argument("max_consecutive_failures must be >= 1");
}

std::string Rng::serialize() const {
  std::ostringstream out;
  out << engine_ << ' ' << normal_;
  return out.str();
}

void Rng::deserialize(const std::string& text) {
  std::istringstream in(text);
  in >> engine_ >> normal_;
  if (!in) throw std::invalid_argument("malformed rng state");
}

RunningNormalizer::RunningNormalizer(Eigen::Index size, double clip_value)
    : mean(Eigen::VectorXd::Zero(size)), var(Eigen::VectorXd::Ones(size)), clip(clip_value) {}

void RunningNormalizer::update(const Eigen::VectorXd& x) {
  const Eigen::VectorXd delta = x - mean;
  const double total = count + 1.0;
  mean += delta / total;
  var = (var * count + delta.cwiseAbs2() * (count / total)) / total;
  count = total;
}

Eigen::VectorXd RunningNormalizer::normalize(const Eigen::VectorXd& x) const {
  return ((x - mean).array() / (var.array() + epsilon).sqrt()).cwiseMax(-clip).cwiseMin(clip);
}

Eigen::Index PolicyParams::size() const {
  return policy.parameter_count() + log_std.size() + value.parameter_count();
}

Eigen::VectorXd PolicyParams::flatten() const {
  Eigen::VectorXd flat(size());
  double* p = flat.data();
  Mlp<double>::pack(policy.layers(), p);
  p += policy.parameter_count();
  p = std::copy(log_std.data(), log_std.data() + log_std.size(), p);
  Mlp<double>::pack(value.layers(), p);
  return flat;
}

void PolicyParams::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != size()) throw std::invalid_argument("parameter vector has the wrong size");
  const double* p = flat.data();
  policy.unpack(p);
  p += policy.parameter_count();
  std::copy(p, p + log_std.size(), log_std.data());
  p += log_std.size();
  value.unpack(p);
}

bool PolicyParams::all_finite() const { return flatten().allFinite(); }

PolicyParams make_policy_params(Eigen::Index observation_size, Eigen::Index action_size,
                                const std::vector<int>& hidden_sizes, Rng& rng) {
  std::vector<Eigen::Index> policy_sizes{observation_size};
  for (int h : hidden_sizes) policy_sizes.push_back(h);
  std::vector<Eigen::Index> value_sizes = policy_sizes;
  policy_sizes.push_back(action_size);
  value_sizes.push_back(1);

  PolicyParams params;
  params.policy = Mlp<double>(policy_sizes);
  params.value = Mlp<double>(value_sizes);
  orthogonal_init(params.policy, std::sqrt(2.0), 0.01, rng.engine());
  orthogonal_init(params.value, std::sqrt(2.0), 1.0, rng.engine());
  params.log_std = Eigen::VectorXd::Zero(action_size);
  params.adam.m = Eigen::VectorXd::Zero(params.size());
  params.adam.v = Eigen::VectorXd::Zero(params.size());
  return params;
}

PolicyOutput policy_forward(const Eigen::VectorXd& observation, const PolicyParams& params) {
  PolicyOutput out;
  out.mean = params.policy.forward(observation).col(0);
  out.std = params.log_std.array().exp();
  out.value = params.value.forward(observation)(0, 0);
  return out;
}

ActionSample sample_action(const Eigen::VectorXd& mean, const Eigen::VectorXd& std, Rng& rng) {
  ActionSample sample;
  sample.action.resize(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) sample.action[i] = mean[i] + std[i] * rng.normal();
  sample.log_prob = gaussian_log_prob(sample.action, mean, std.array().log().matrix());
  return sample;
}

double gaussian_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& log_std) {
  const Eigen::ArrayXd z = (x - mean).array() / log_std.array().exp();
  return (-0.5 * z.square() - log_std.array() - kHalfLogTwoPi).sum();
}

RolloutBuffer::RolloutBuffer(int capacity, Eigen::Index observation_size,
                             Eigen::Index action_size)
    : observations(observation_size, capacity),
      actions(action_size, capacity),
      log_probs(capacity),
      rewards(capacity),
      values(capacity),
      dones(capacity),
      advantages(capacity),
      returns(capacity) {
  clear();
}

void RolloutBuffer::add(const Eigen::VectorXd& observation, const Eigen::VectorXd& action,
                        double log_prob, double reward, double value, bool done) {
  if (full()) throw std::logic_error("rollout buffer is full");
  observations.col(size) = observation;
  actions.col(size) = action;
  log_probs[size] = log_prob;
  rewards[size] = reward;
  values[size] = value;
  dones[size] = done ? 1.0 : 0.0;
  ++size;
  advantages_ready = false;
}

void RolloutBuffer::clear() {
  size = 0;
  advantages_ready = false;
  observations.setZero();
  actions.setZero();
  log_probs.setZero();
  rewards.setZero();
  values.setZero();
  dones.setZero();
  advantages.setZero();
  returns.setZero();
}

void compute_gae(RolloutBuffer& buffer, double discount_gamma, double gae_lambda,
                 double bootstrap_value) {
  double next_advantage = 0.0;
  double next_value = bootstrap_value;
  for (int t = buffer.size - 1; t >= 0; --t) {
    const double live = 1.0 - buffer.dones[t];
    const double delta = buffer.rewards[t] + discount_gamma * next_value * live - buffer.values[t];
    next_advantage = delta + discount_gamma * gae_lambda * live * next_advantage;
    buffer.advantages[t] = next_advantage;
    next_value = buffer.values[t];
  }
  buffer.returns.head(buffer.size) = buffer.advantages.head(buffer.size) + buffer.values.head(buffer.size);
  buffer.advantages_ready = true;
}

LossTerms ppo_loss(const PolicyParams& params, const PpoBatch& batch, const TrainConfig& config,
                   Eigen::VectorXd* gradient) {
  const Eigen::Index n = batch.advantages.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double lo = 1.0 - config.clip_range;
  const double hi = 1.0 + config.clip_range;

  Mlp<double>::Cache policy_cache;
  Mlp<double>::Cache value_cache;
  const Eigen::MatrixXd means = params.policy.forward(batch.observations, &policy_cache);
  const Eigen::MatrixXd values = params.value.forward(batch.observations, &value_cache);
  const Eigen::ArrayXd inv_std = (-params.log_std.array()).exp();
  const Eigen::Index n_act = params.log_std.size();

  LossTerms terms;
  Eigen::MatrixXd grad_means(n_act, n);
  Eigen::VectorXd grad_log_std = Eigen::VectorXd::Zero(n_act);
  Eigen::MatrixXd grad_values(1, n);
  const double entropy_per_sample = (0.5 + kHalfLogTwoPi + params.log_std.array()).sum();
  int clipped = 0;

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::ArrayXd z = (batch.actions.col(i) - means.col(i)).array() * inv_std;
    const double log_prob = (-0.5 * z.square() - params.log_std.array() - kHalfLogTwoPi).sum();
    const double log_ratio = log_prob - batch.old_log_probs[i];
    const double ratio = std::exp(log_ratio);
    const double adv = batch.advantages[i];
    const double clipped_ratio = std::clamp(ratio, lo, hi);
    const double unclipped_term = ratio * adv;
    const double clipped_term = clipped_ratio * adv;
    terms.policy_loss -= std::min(unclipped_term, clipped_term) * inv_n;
    if (std::abs(ratio - 1.0) > config.clip_range) ++clipped;
    terms.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;

    // the unclipped branch carries the gradient inside the clip range or when
    // it is the smaller term; otherwise the clipped branch is flat in ratio
    const bool inside = ratio >= lo && ratio <= hi;
    const double d_ratio = (inside || unclipped_term <= clipped_term) ? -adv * inv_n : 0.0;
    const double d_log_prob = d_ratio * ratio;
    grad_means.col(i) = (d_log_prob * z * inv_std).matrix();
    grad_log_std.array() += d_log_prob * (z.square() - 1.0);

    const double err = values(0, i) - batch.returns[i];
    terms.value_loss += err * err * inv_n;
    grad_values(0, i) = config.value_coef * 2.0 * err * inv_n;
  }
  terms.entropy_loss = -entropy_per_sample;
  terms.total = terms.policy_loss + config.value_coef * terms.value_loss +
                config.entropy_coef * terms.entropy_loss;
  terms.clip_fraction = clipped * inv_n;

  if (gradient) {
    grad_log_std.array() -= config.entropy_coef;
    const auto policy_grads = params.policy.backward(policy_cache, grad_means);
    const auto value_grads = params.value.backward(value_cache, grad_values);
    gradient->resize(params.size());
    double* p = gradient->data();
    Mlp<double>::pack(policy_grads, p);
    p += params.policy.parameter_count();
    p = std::copy(grad_log_std.data(), grad_log_std.data() + grad_log_std.size(), p);
    Mlp<double>::pack(value_grads, p);
  }
  return terms;
}

double clip_gradient_norm(Eigen::VectorXd& gradient, double max_norm) {
  const double norm = gradient.norm();
  const double coef = max_norm / (norm + 1e-6);
  if (coef < 1.0) gradient *= coef;
  return norm;
}

void adam_step(PolicyParams& params, const Eigen::VectorXd& gradient, double learning_rate,
               double epsilon) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  auto& adam = params.adam;
  if (adam.m.size() != gradient.size()) {
    adam.m = Eigen::VectorXd::Zero(gradient.size());
    adam.v = Eigen::VectorXd::Zero(gradient.size());
    adam.step = 0;
  }
  ++adam.step;
  adam.m = kBeta1 * adam.m + (1.0 - kBeta1) * gradient;
  adam.v = kBeta2 * adam.v + (1.0 - kBeta2) * gradient.cwiseAbs2();
  const double bias1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam.step));
  const double bias2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam.step));
  const double step_size = learning_rate / bias1;
  const Eigen::ArrayXd denom = adam.v.array().sqrt() / std::sqrt(bias2) + epsilon;
  Eigen::VectorXd flat = params.flatten();
  flat.array() -= step_size * adam.m.array() / denom;
  params.assign(flat);
  params.log_std = params.log_std.cwiseMax(PolicyParams::kLogStdMin)
                       .cwiseMin(PolicyParams::kLogStdMax);
}

UpdateMetrics ppo_update(const RolloutBuffer& buffer, PolicyParams& params,
                         const TrainConfig& config, Rng& rng) {
  if (!buffer.advantages_ready) throw std::logic_error("advantages not computed");
  const int n = buffer.size;
  const int batch_size = std::min(config.minibatch_size, n);
  const PolicyParams entry = params;

  UpdateMetrics metrics;
  std::vector<int> order(static_cast<std::size_t>(n));
  int batches = 0;
  Eigen::VectorXd gradient;
  for (int epoch = 0; epoch < config.n_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (int start = 0; start < n; start += batch_size) {
      const int count = std::min(batch_size, n - start);
      PpoBatch batch;
      batch.observations.resize(buffer.observations.rows(), count);
      batch.actions.resize(buffer.actions.rows(), count);
      batch.old_log_probs.resize(count);
      batch.advantages.resize(count);
      batch.returns.resize(count);
      for (int k = 0; k < count; ++k) {
        const int idx = order[static_cast<std::size_t>(start + k)];
        batch.observations.col(k) = buffer.observations.col(idx);
        batch.actions.col(k) = buffer.actions.col(idx);
        batch.old_log_probs[k] = buffer.log_probs[idx];
        batch.advantages[k] = buffer.advantages[idx];
        batch.returns[k] = buffer.returns[idx];
      }
      if (count > 1) {
        const double mean = batch.advantages.mean();
        const double std = std::sqrt((batch.advantages.array() - mean).square().sum() / (count - 1));
        batch.advantages = ((batch.advantages.array() - mean) / (std + 1e-8)).matrix();
      }

      const LossTerms terms = ppo_loss(params, batch, config, &gradient);
      if (!std::isfinite(terms.total) || !gradient.allFinite()) {
        params = entry;
        metrics.skipped = true;
        return metrics;
      }
      metrics.grad_norm = clip_gradient_norm(gradient, config.max_grad_norm);
      adam_step(params, gradient, config.learning_rate, config.adam_epsilon);

      metrics.policy_loss += terms.policy_loss;
      metrics.value_loss += terms.value_loss;
      metrics.entropy_loss += terms.entropy_loss;
      metrics.clip_fraction += terms.clip_fraction;
      metrics.approx_kl += terms.approx_kl;
      ++batches;
    }
  }
  if (!params.all_finite()) {
    params = entry;
    metrics.skipped = true;
    return metrics;
  }
  metrics.policy_loss /= batches;
  metrics.value_loss /= batches;
  metrics.entropy_loss /= batches;
  metrics.clip_fraction /= batches;
  metrics.approx_kl /= batches;
  return metrics;
}

Trainer::Trainer(Environment& env, TrainConfig config)
    : env_(env), config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  params_ = make_policy_params(env_.observation_size(), env_.action_size(), config_.hidden_sizes,
                               rng_);
  normalizer_ = RunningNormalizer(env_.observation_size(), config_.observation_clip);
  buffer_ = RolloutBuffer(config_.n_steps, env_.observation_size(), env_.action_size());
}

Eigen::VectorXd Trainer::observe(const Eigen::VectorXd& raw, bool update_stats) {
  if (!config_.normalize_observations) return raw;
  if (update_stats) normalizer_.update(raw);
  return normalizer_.normalize(raw);
}

Eigen::VectorXd Trainer::mean_action(const Eigen::VectorXd& raw_observation) const {
  const Eigen::VectorXd obs =
      config_.normalize_observations ? normalizer_.normalize(raw_observation) : raw_observation;
  return params_.policy.forward(obs).col(0);
}

void Trainer::restore_progress(long episodes, long updates, long steps, int failures,
                               const Eigen::VectorXd& raw_observation) {
  if (raw_observation.size() != env_.observation_size())
    throw std::invalid_argument("restored observation has the wrong size");
  episodes_done_ = episodes;
  updates_done_ = updates;
  steps_done_ = steps;
  consecutive_failures_ = failures;
  current_obs_ = raw_observation;
  buffer_.clear();
  started_ = true;
}

void Trainer::train(const Callbacks& callbacks) {
  if (!started_) {
    current_obs_ = env_.reset();
    observe(current_obs_, true);
    started_ = true;
  }
  if (callbacks.on_boundary) callbacks.on_boundary();

  double episode_return = 0.0;
  int episode_steps = 0;
  while (episodes_done_ < config_.total_episodes) {
    const Eigen::VectorXd obs = observe(current_obs_, false);
    const PolicyOutput out = policy_forward(obs, params_);
    if (!out.mean.allFinite() || !std::isfinite(out.value))
      throw TrainingAborted("policy produced a non-finite output at update " +
                            std::to_string(updates_done_));
    const ActionSample sample = sample_action(out.mean, out.std, rng_);
    const StepResult result = env_.step(sample.action);
    ++steps_done_;
    ++episode_steps;
    episode_return += result.reward;
    buffer_.add(obs, sample.action, sample.log_prob, result.reward, out.value, result.done);

    if (result.done) {
      EpisodeSummary summary{episodes_done_, episode_return, result.unstable, episode_steps};
      ++episodes_done_;
      episode_return = 0.0;
      episode_steps = 0;
      if (callbacks.on_episode) callbacks.on_episode(summary);
      current_obs_ = env_.reset();
    } else {
      current_obs_ = result.observation;
    }
    const Eigen::VectorXd next_obs = observe(current_obs_, true);

    if (buffer_.full()) {
      const double bootstrap = params_.value.forward(next_obs)(0, 0);
      compute_gae(buffer_, config_.discount_gamma, config_.gae_lambda, bootstrap);
      UpdateMetrics metrics = ppo_update(buffer_, params_, config_, rng_);
      metrics.update = updates_done_++;
      metrics.episode = episodes_done_;
      buffer_.clear();
      if (metrics.skipped) {
        ++consecutive_failures_;
        spdlog::warn("update {} skipped: non-finite loss ({} in a row)", metrics.update,
                     consecutive_failures_);
      } else {
        consecutive_failures_ = 0;
      }
      if (callbacks.on_update) callbacks.on_update(metrics);
      if (consecutive_failures_ > config_.max_consecutive_failures)
        throw TrainingAborted("more than " + std::to_string(config_.max_consecutive_failures) +
                              " consecutive non-finite updates");
      if (episode_steps == 0 && callbacks.on_boundary) callbacks.on_boundary();
    }
  }
}

}  // namespace wormsim
