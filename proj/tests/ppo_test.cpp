#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <doctest.h>

#include "support.hpp"
#include "wormsim/checkpoint.hpp"
#include "wormsim/env.hpp"
#include "wormsim/ppo.hpp"

using namespace wormsim;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

/// One-step task: the action a places a point at 0.01 clip(a, 0, 1) m and the
/// reward is the worm's reward for the distance to 6 mm.
class ToyReach : public Environment {
 public:
  Eigen::Index observation_size() const override { return 2; }
  Eigen::Index action_size() const override { return 1; }
  Eigen::VectorXd reset() override { return Eigen::Vector2d(0.0, kTarget); }
  StepResult step(const Eigen::VectorXd& action) override {
    const double x = 0.01 * std::clamp(action[0], 0.0, 1.0);
    StepResult r;
    r.observation = Eigen::Vector2d(x, kTarget);
    r.reward = poison ? std::nan("") : reward(std::abs(x - kTarget), RewardConfig{});
    r.done = true;
    return r;
  }
  static constexpr double kTarget = 0.006;
  bool poison = false;
};

// Scalar reference of one PPO update: plain loops, its own parameter layout.
struct ScalarNet {
  std::vector<int> sizes;
  std::vector<std::vector<std::vector<double>>> w;  // [layer][out][in]
  std::vector<std::vector<double>> b;
};

ScalarNet to_scalar(const Mlp<double>& net) {
  ScalarNet s;
  s.sizes.push_back(static_cast<int>(net.input_size()));
  for (const auto& layer : net.layers()) {
    s.sizes.push_back(static_cast<int>(layer.weight.rows()));
    std::vector<std::vector<double>> rows(layer.weight.rows(), std::vector<double>(layer.weight.cols()));
    for (int i = 0; i < layer.weight.rows(); ++i)
      for (int j = 0; j < layer.weight.cols(); ++j) rows[i][j] = layer.weight(i, j);
    s.w.push_back(rows);
    s.b.emplace_back(layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  return s;
}

std::vector<std::vector<double>> scalar_forward(const ScalarNet& net, const std::vector<double>& x) {
  std::vector<std::vector<double>> acts{x};
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    std::vector<double> z(net.w[l].size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      double sum = net.b[l][i];
      for (std::size_t j = 0; j < acts.back().size(); ++j) sum += net.w[l][i][j] * acts.back()[j];
      z[i] = l + 1 < net.w.size() ? std::tanh(sum) : sum;
    }
    acts.push_back(z);
  }
  return acts;
}

// Adds d(out)/d(params) * g into grad (same shape as net).
void scalar_backward(const ScalarNet& net, const std::vector<std::vector<double>>& acts, double g,
                     ScalarNet& grad) {
  std::vector<double> delta{g};
  for (std::size_t l = net.w.size(); l-- > 0;) {
    std::vector<double> back(acts[l].size(), 0.0);
    for (std::size_t i = 0; i < delta.size(); ++i) {
      grad.b[l][i] += delta[i];
      for (std::size_t j = 0; j < acts[l].size(); ++j) {
        grad.w[l][i][j] += delta[i] * acts[l][j];
        back[j] += net.w[l][i][j] * delta[i];
      }
    }
    for (std::size_t j = 0; j < back.size(); ++j) back[j] *= 1.0 - acts[l][j] * acts[l][j];
    delta = back;
  }
}

ScalarNet zeros_like(const ScalarNet& net) {
  ScalarNet z = net;
  for (auto& layer : z.w)
    for (auto& row : layer) std::fill(row.begin(), row.end(), 0.0);
  for (auto& bias : z.b) std::fill(bias.begin(), bias.end(), 0.0);
  return z;
}

// Visits every scalar parameter of (policy, log_std, value) in one order.
template <typename F>
void for_each_param(ScalarNet& policy, double& log_std, ScalarNet& value, F f) {
  for (ScalarNet* net : {&policy, &value}) {
    for (auto& layer : net->w)
      for (auto& row : layer)
        for (double& v : row) f(v);
    for (auto& bias : net->b)
      for (double& v : bias) f(v);
  }
  f(log_std);
}

struct ScalarPpo {
  ScalarNet policy, value;
  double log_std{};
  std::vector<double> m, v;
  long t = 0;
  double last_policy_loss_sum = 0.0;
  int batches = 0;

  void update(const std::vector<std::vector<double>>& obs, const std::vector<double>& act,
              const std::vector<double>& old_lp, const std::vector<double>& adv_raw,
              const std::vector<double>& ret, const TrainConfig& c, std::mt19937_64 engine) {
    const int n = static_cast<int>(obs.size());
    const int mb = std::min(c.minibatch_size, n);
    std::vector<int> order(n);
    for (int epoch = 0; epoch < c.n_epochs; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), engine);
      for (int start = 0; start < n; start += mb) {
        const int count = std::min(mb, n - start);
        std::vector<int> idx(order.begin() + start, order.begin() + start + count);
        std::vector<double> adv;
        for (int k : idx) adv.push_back(adv_raw[k]);
        if (count > 1) {
          double mean = 0.0;
          for (double a : adv) mean += a;
          mean /= count;
          double ss = 0.0;
          for (double a : adv) ss += (a - mean) * (a - mean);
          const double sd = std::sqrt(ss / (count - 1));
          for (double& a : adv) a = (a - mean) / (sd + 1e-8);
        }

        ScalarNet gp = zeros_like(policy), gv = zeros_like(value);
        double gls = 0.0, loss = 0.0;
        const double sigma = std::exp(log_std);
        for (int k = 0; k < count; ++k) {
          const int i = idx[k];
          const auto pa = scalar_forward(policy, obs[i]);
          const double mu = pa.back()[0];
          const double z = (act[i] - mu) / sigma;
          const double lp = -0.5 * z * z - log_std - 0.5 * kLog2Pi;
          const double r = std::exp(lp - old_lp[i]);
          const double rc = std::min(std::max(r, 1.0 - c.clip_range), 1.0 + c.clip_range);
          loss += -std::min(r * adv[k], rc * adv[k]) / count;
          const double dr = r * adv[k] <= rc * adv[k] ? -adv[k] / count : 0.0;
          const double dlp = dr * r;
          scalar_backward(policy, pa, dlp * z / sigma, gp);
          gls += dlp * (z * z - 1.0);

          const auto va = scalar_forward(value, obs[i]);
          scalar_backward(value, va, c.value_coef * 2.0 * (va.back()[0] - ret[i]) / count, gv);
        }
        gls -= c.entropy_coef;
        last_policy_loss_sum += loss;
        ++batches;

        double norm2 = 0.0;
        for_each_param(gp, gls, gv, [&](double& g) { norm2 += g * g; });
        const double coef = c.max_grad_norm / (std::sqrt(norm2) + 1e-6);
        if (coef < 1.0) for_each_param(gp, gls, gv, [&](double& g) { g *= coef; });

        std::vector<double> grads;
        for_each_param(gp, gls, gv, [&](double& g) { grads.push_back(g); });
        if (m.empty()) {
          m.assign(grads.size(), 0.0);
          v.assign(grads.size(), 0.0);
        }
        ++t;
        std::size_t p = 0;
        for_each_param(policy, log_std, value, [&](double& theta) {
          m[p] = 0.9 * m[p] + 0.1 * grads[p];
          v[p] = 0.999 * v[p] + 0.001 * grads[p] * grads[p];
          const double mhat = m[p] / (1.0 - std::pow(0.9, t));
          const double vhat = v[p] / (1.0 - std::pow(0.999, t));
          theta -= c.learning_rate * mhat / (std::sqrt(vhat) + c.adam_epsilon);
          ++p;
        });
        log_std = std::min(std::max(log_std, -20.0), 2.0);
      }
    }
  }
};

double max_difference(const ScalarNet& s, const Mlp<double>& net) {
  double worst = 0.0;
  for (std::size_t l = 0; l < s.w.size(); ++l) {
    for (std::size_t i = 0; i < s.w[l].size(); ++i) {
      worst = std::max(worst, std::abs(s.b[l][i] - net.layers()[l].bias[i]));
      for (std::size_t j = 0; j < s.w[l][i].size(); ++j)
        worst = std::max(worst, std::abs(s.w[l][i][j] - net.layers()[l].weight(i, j)));
    }
  }
  return worst;
}

PpoBatch batch_from(const PolicyParams& params, const std::vector<double>& log_ratio_offsets) {
  const int n = static_cast<int>(log_ratio_offsets.size());
  PpoBatch batch;
  batch.observations = Eigen::MatrixXd::Random(3, n);
  batch.actions = Eigen::MatrixXd::Random(2, n);
  batch.old_log_probs.resize(n);
  batch.advantages = Eigen::VectorXd::LinSpaced(n, -1.0, 2.0);
  batch.returns = Eigen::VectorXd::LinSpaced(n, 0.5, -0.5);
  for (int i = 0; i < n; ++i) {
    const PolicyOutput out = policy_forward(batch.observations.col(i), params);
    batch.old_log_probs[i] =
        gaussian_log_prob(batch.actions.col(i), out.mean, params.log_std) - log_ratio_offsets[i];
  }
  return batch;
}

}  // namespace

TEST_SUITE("ppo") {

TEST_CASE("policy forward") {
  Rng rng(0);
  PolicyParams params = make_policy_params(4, 3, {64, 64}, rng);
  for (auto* net : {&params.policy, &params.value})
    for (auto& layer : net->layers()) {
      layer.weight.setZero();
      layer.bias.setZero();
    }
  params.log_std << 0.0, -1.0, 0.5;
  const PolicyOutput out = policy_forward(Eigen::Vector4d(1, 2, 3, 4), params);
  CHECK(out.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.value == 0.0);
  CHECK(out.std[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

  Rng a(5), b(5);
  const PolicyParams pa = make_policy_params(4, 3, {64, 64}, a);
  const PolicyParams pb = make_policy_params(4, 3, {64, 64}, b);
  CHECK(pa.flatten() == pb.flatten());
  const Eigen::Vector4d x(0.1, -0.2, 0.3, 0.4);
  CHECK(policy_forward(x, pa).mean == policy_forward(x, pa).mean);
  CHECK(pa.log_std.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gaussian sampling") {
  const Eigen::Vector3d mean(0.2, -0.4, 1.0);
  Rng rng(3);
  const ActionSample tiny = sample_action(mean, Eigen::Vector3d::Constant(1e-12), rng);
  CHECK((tiny.action - mean).cwiseAbs().maxCoeff() < 1e-10);

  const Eigen::Vector3d log_std(0.1, -0.3, 0.7);
  double oracle = 0.0;
  for (int i = 0; i < 3; ++i) oracle += -std::log(std::exp(log_std[i]) * std::sqrt(2 * std::numbers::pi));
  CHECK(gaussian_log_prob(mean, mean, log_std) == doctest::Approx(oracle).epsilon(1e-14));

  Rng r1(42), r2(42);
  const Eigen::Vector3d sd = log_std.array().exp();
  const ActionSample s1 = sample_action(mean, sd, r1);
  const ActionSample s2 = sample_action(mean, sd, r2);
  CHECK(s1.action == s2.action);
  CHECK(s1.log_prob == doctest::Approx(gaussian_log_prob(s1.action, mean, log_std)).epsilon(1e-14));
}

TEST_CASE("rng state round trip") {
  Rng a(9);
  a.normal();
  Rng b(0);
  b.deserialize(a.serialize());
  for (int k = 0; k < 5; ++k) CHECK(a.normal() == b.normal());
  CHECK_THROWS(b.deserialize("garbage"));
}

TEST_CASE("generalized advantage estimation") {
  SUBCASE("single terminal transition") {
    RolloutBuffer buf(1, 1, 1);
    buf.add(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), 0.0, 1.0, 0.0, true);
    compute_gae(buf, 0.99, 0.95, 123.0);
    CHECK(buf.advantages[0] == 1.0);
    CHECK(buf.returns[0] == 1.0);
  }
  SUBCASE("two steps, no discounting") {
    RolloutBuffer buf(2, 1, 1);
    buf.add(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), 0.0, 0.0, 0.0, false);
    buf.add(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), 0.0, 1.0, 0.0, false);
    compute_gae(buf, 1.0, 1.0, 0.0);
    CHECK(buf.advantages[0] == 1.0);
    CHECK(buf.advantages[1] == 1.0);
  }
  SUBCASE("exact values telescope to zero advantage") {
    const double gamma = 0.9, r = 0.7;
    const int n = 6;
    RolloutBuffer buf(n, 1, 1);
    for (int t = 0; t < n; ++t) {
      const double v = r * (1.0 - std::pow(gamma, n - t)) / (1.0 - gamma);
      buf.add(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), 0.0, r, v, t == n - 1);
    }
    compute_gae(buf, gamma, 0.95, 5.0);
    CHECK(buf.advantages.cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("lambda 0 gives TD residuals, lambda 1 gives discounted returns") {
    const double gamma = 0.95;
    const std::vector<double> rewards{0.3, -0.1, 0.8, 0.2};
    const std::vector<double> values{0.1, 0.4, -0.2, 0.5};
    const std::vector<bool> dones{false, true, false, false};
    const double bootstrap = 0.6;
    for (double lam : {0.0, 1.0}) {
      RolloutBuffer buf(4, 1, 1);
      for (int t = 0; t < 4; ++t)
        buf.add(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), 0.0, rewards[t], values[t], dones[t]);
      compute_gae(buf, gamma, lam, bootstrap);
      for (int t = 0; t < 4; ++t) {
        const double next = t == 3 ? bootstrap : values[t + 1];
        double oracle;
        if (lam == 0.0) {
          oracle = rewards[t] + (dones[t] ? 0.0 : gamma * next) - values[t];
        } else {
          double g = 0.0, discount = 1.0;
          int k = t;
          for (; k < 4; ++k) {
            g += discount * rewards[k];
            discount *= gamma;
            if (dones[k]) break;
          }
          if (k == 4) g += discount * bootstrap;
          oracle = g - values[t];
        }
        CHECK(buf.advantages[t] == doctest::Approx(oracle).epsilon(1e-14));
        CHECK(buf.returns[t] == doctest::Approx(buf.advantages[t] + values[t]).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("clipped surrogate objective") {
  Rng rng(1);
  const PolicyParams params = make_policy_params(3, 2, {8}, rng);
  TrainConfig cfg;
  cfg.value_coef = 0.0;

  const PpoBatch same = batch_from(params, {0.0, 0.0, 0.0});
  const LossTerms t = ppo_loss(params, same, cfg, nullptr);
  CHECK(t.policy_loss == doctest::Approx(-same.advantages.mean()).epsilon(1e-14));
  CHECK(t.clip_fraction == 0.0);
  CHECK(std::abs(t.approx_kl) < 1e-15);

  PpoBatch high = batch_from(params, {std::log(1.0 + 2 * cfg.clip_range)});
  high.advantages << 1.5;
  Eigen::VectorXd grad;
  const LossTerms h = ppo_loss(params, high, cfg, &grad);
  CHECK(h.policy_loss == doctest::Approx(-(1.0 + cfg.clip_range) * 1.5).epsilon(1e-14));
  CHECK(h.clip_fraction == 1.0);
  CHECK(grad.cwiseAbs().maxCoeff() == 0.0);

  // below the range with a positive advantage the unclipped term is the minimum
  PpoBatch low = batch_from(params, {std::log(0.5)});
  low.advantages << 1.5;
  const LossTerms l = ppo_loss(params, low, cfg, &grad);
  CHECK(l.policy_loss == doctest::Approx(-0.5 * 1.5).epsilon(1e-12));
  CHECK(grad.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("loss gradient matches central differences") {
  Rng rng(2);
  PolicyParams params = make_policy_params(3, 2, {6, 5}, rng);
  params.log_std << 0.2, -0.4;
  TrainConfig cfg;
  cfg.entropy_coef = 0.01;
  PpoBatch batch = batch_from(params, {0.05, -0.1, 0.12, 0.0, -0.03});
  Eigen::VectorXd grad;
  ppo_loss(params, batch, cfg, &grad);
  const Eigen::VectorXd theta = params.flatten();
  Eigen::VectorXd fd(theta.size());
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd up = theta, down = theta;
    up[i] += h;
    down[i] -= h;
    PolicyParams p = params;
    p.assign(up);
    const double lu = ppo_loss(p, batch, cfg, nullptr).total;
    p.assign(down);
    const double ld = ppo_loss(p, batch, cfg, nullptr).total;
    fd[i] = (lu - ld) / (2 * h);
  }
  CHECK((fd - grad).norm() <= 1e-6 * grad.norm());
}

TEST_CASE("gradient clipping and adam") {
  Eigen::VectorXd g(2);
  g << 1.2, 1.6;
  CHECK(clip_gradient_norm(g, 0.5) == doctest::Approx(2.0));
  CHECK(g.norm() == doctest::Approx(0.5 * 2.0 / (2.0 + 1e-6)).epsilon(1e-14));
  Eigen::VectorXd small(2);
  small << 0.1, 0.2;
  const Eigen::VectorXd copy = small;
  clip_gradient_norm(small, 0.5);
  CHECK(small == copy);

  Rng rng(0);
  PolicyParams params = make_policy_params(2, 1, {4}, rng);
  const Eigen::VectorXd before = params.flatten();
  Eigen::VectorXd grad = Eigen::VectorXd::LinSpaced(before.size(), -1.0, 1.0);
  adam_step(params, grad, 1e-3, 1e-5);
  const Eigen::VectorXd step = params.flatten() - before;
  for (Eigen::Index i = 0; i < grad.size(); ++i)
    CHECK(step[i] == doctest::Approx(-1e-3 * grad[i] / (std::abs(grad[i]) + 1e-5)).epsilon(1e-9));

  params.log_std[0] = 1.9999;
  Eigen::VectorXd push = Eigen::VectorXd::Zero(before.size());
  push[params.policy.parameter_count()] = -1.0;
  adam_step(params, push, 1.0, 1e-5);
  CHECK(params.log_std[0] == PolicyParams::kLogStdMax);
}

TEST_CASE("update pipeline matches a scalar reference") {
  Rng rng(7);
  PolicyParams params = make_policy_params(2, 1, {3, 2}, rng);
  params.log_std << -0.3;
  for (auto* net : {&params.policy, &params.value})
    for (auto& layer : net->layers()) layer.bias.setConstant(0.05);

  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.n_epochs = 5;
  cfg.minibatch_size = 2;
  cfg.entropy_coef = 0.01;
  cfg.max_grad_norm = 0.3;

  const int n = 4;
  RolloutBuffer buf(n, 2, 1);
  const std::vector<std::vector<double>> obs{{0.5, -1.0}, {1.5, 0.2}, {-0.7, 0.9}, {0.1, 0.1}};
  const std::vector<double> act{0.3, -0.8, 1.1, 0.05};
  const std::vector<double> offsets{0.3, -0.1, 0.25, -0.35};
  const std::vector<double> adv{0.9, -0.4, 1.7, 0.2};
  const std::vector<double> ret{1.0, -0.5, 2.0, 0.3};
  std::vector<double> old_lp;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d x(obs[i][0], obs[i][1]);
    const PolicyOutput out = policy_forward(x, params);
    const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, act[i]);
    old_lp.push_back(gaussian_log_prob(a, out.mean, params.log_std) - offsets[i]);
    buf.add(x, a, old_lp.back(), 0.0, out.value, false);
  }
  for (int i = 0; i < n; ++i) {
    buf.advantages[i] = adv[i];
    buf.returns[i] = ret[i];
  }
  buf.advantages_ready = true;

  ScalarPpo oracle;
  oracle.policy = to_scalar(params.policy);
  oracle.value = to_scalar(params.value);
  oracle.log_std = params.log_std[0];
  oracle.update(obs, act, old_lp, adv, ret, cfg, rng.engine());

  const UpdateMetrics metrics = ppo_update(buf, params, cfg, rng);
  CHECK_FALSE(metrics.skipped);
  CHECK(metrics.clip_fraction > 0.0);
  CHECK(max_difference(oracle.policy, params.policy) < 1e-10);
  CHECK(max_difference(oracle.value, params.value) < 1e-10);
  CHECK(std::abs(oracle.log_std - params.log_std[0]) < 1e-10);
  CHECK(metrics.policy_loss == doctest::Approx(oracle.last_policy_loss_sum / oracle.batches).epsilon(1e-10));
  CHECK(params.adam.step == 10);
}

TEST_CASE("running observation statistics") {
  RunningNormalizer norm(2, 10.0);
  std::mt19937_64 gen(4);
  std::normal_distribution<double> d(3.0, 2.0);
  std::vector<Eigen::Vector2d> xs;
  for (int k = 0; k < 500; ++k) xs.emplace_back(d(gen), -d(gen));
  for (const auto& x : xs) norm.update(x);

  // parallel combination of the prior (mean 0, var 1, count 1e-4) with the batch
  const double n = 500.0, prior = 1e-4;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& x : xs) mean += x / n;
  Eigen::Vector2d var = Eigen::Vector2d::Zero();
  for (const auto& x : xs) var += (x - mean).cwiseAbs2() / n;
  const double total = n + prior;
  const Eigen::Vector2d mean_oracle = mean * n / total;
  const Eigen::Vector2d var_oracle =
      (Eigen::Vector2d::Ones() * prior + var * n + mean.cwiseAbs2() * prior * n / total) / total;
  CHECK((norm.mean - mean_oracle).norm() < 1e-12);
  CHECK((norm.var - var_oracle).norm() < 1e-12);
  CHECK(norm.count == doctest::Approx(total).epsilon(1e-15));

  const Eigen::Vector2d far(1e6, -1e6);
  const Eigen::VectorXd z = norm.normalize(far);
  CHECK(z[0] == 10.0);
  CHECK(z[1] == -10.0);
}

TEST_CASE("no episodes means no updates") {
  ToyReach env;
  TrainConfig cfg;
  cfg.total_episodes = 0;
  Trainer trainer(env, cfg);
  const Eigen::VectorXd initial = trainer.params().flatten();
  int boundaries = 0, episodes = 0, updates = 0;
  trainer.train({[&](const EpisodeSummary&) { ++episodes; }, [&](const UpdateMetrics&) { ++updates; },
                 [&] { ++boundaries; }});
  CHECK(boundaries == 1);
  CHECK(episodes == 0);
  CHECK(updates == 0);
  CHECK(trainer.params().flatten() == initial);
}

TEST_CASE("the learner solves a one-step reaching task") {
  for (std::uint64_t seed : {0, 1, 2}) {
    ToyReach env;
    TrainConfig cfg;
    cfg.total_episodes = 2000;
    cfg.seed = seed;
    Trainer trainer(env, cfg);
    std::vector<double> returns;
    trainer.train({[&](const EpisodeSummary& s) { returns.push_back(s.episode_return); }, {}, {}});
    REQUIRE(returns.size() == 2000);
    const double tail = std::accumulate(returns.end() - 200, returns.end(), 0.0) / 200.0;
    const double a = std::clamp(trainer.mean_action(env.reset())[0], 0.0, 1.0);
    CAPTURE(seed);
    CAPTURE(a);
    CHECK(tail >= 0.5);
    CHECK(std::abs(0.01 * a - ToyReach::kTarget) <= 2 * RewardConfig{}.bonus_radius);
  }
}

TEST_CASE("non-finite updates roll back and eventually abort") {
  ToyReach env;
  env.poison = true;
  TrainConfig cfg;
  cfg.total_episodes = 100;
  Trainer trainer(env, cfg);
  const Eigen::VectorXd initial = trainer.params().flatten();
  int skipped = 0;
  CHECK_THROWS_AS(trainer.train({{}, [&](const UpdateMetrics& m) { skipped += m.skipped; }, {}}),
                  TrainingAborted);
  CHECK(skipped == cfg.max_consecutive_failures + 1);
  CHECK(trainer.params().flatten() == initial);
}

TEST_CASE("training is deterministic for a fixed seed") {
  EnvConfig env_cfg = testing::small_env(3);
  env_cfg.adapt.adaptation_enabled = false;
  TrainConfig cfg;
  cfg.total_episodes = 6;
  cfg.seed = 11;
  const auto run = [&] {
    LatticeEnv env(env_cfg);
    Trainer trainer(env, cfg);
    std::vector<double> returns;
    trainer.train({[&](const EpisodeSummary& s) { returns.push_back(s.episode_return); }, {}, {}});
    return std::make_pair(returns, trainer.params().flatten());
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("a checkpointed trainer resumes bit for bit") {
  const EnvConfig env_cfg = testing::small_env(3);
  TrainConfig cfg;
  cfg.total_episodes = 8;
  cfg.seed = 5;

  LatticeEnv straight_env(env_cfg);
  Trainer straight(straight_env, cfg);
  std::vector<double> expected;
  straight.train({[&](const EpisodeSummary& s) { expected.push_back(s.episode_return); }, {}, {}});

  TrainConfig half = cfg;
  half.total_episodes = 4;
  LatticeEnv first_env(env_cfg);
  Trainer first(first_env, half);
  std::vector<double> got;
  first.train({[&](const EpisodeSummary& s) { got.push_back(s.episode_return); }, {}, {}});
  const std::string trainer_text = trainer_to_json(first).dump();
  const std::string muscle_text = muscles_to_json(first_env.muscles()).dump();

  LatticeEnv second_env(env_cfg);
  Trainer second(second_env, cfg);
  second_env.set_muscles(muscles_from_json(nlohmann::json::parse(muscle_text)));
  second_env.reset();
  trainer_from_json(nlohmann::json::parse(trainer_text), second);
  CHECK(second.episodes_done() == 4);
  second.train({[&](const EpisodeSummary& s) { got.push_back(s.episode_return); }, {}, {}});

  CHECK(got == expected);
  CHECK(second.params().flatten() == straight.params().flatten());
  CHECK(second.params().adam.v == straight.params().adam.v);
  CHECK(second.normalizer().var == straight.normalizer().var);
  CHECK(second_env.force_ceilings() == straight_env.force_ceilings());
}

}  // TEST_SUITE
