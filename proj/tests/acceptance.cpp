#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "wormsim/config.hpp"
#include "wormsim/env.hpp"
#include "wormsim/io.hpp"
#include "wormsim/lattice.hpp"
#include "wormsim/mlp.hpp"
#include "wormsim/muscle.hpp"
#include "wormsim/report.hpp"
#include "wormsim/run.hpp"
#include "wormsim/sweep.hpp"
#include "wormsim/system.hpp"

using namespace wormsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass{};
  std::string detail;
};

EnvConfig desk_env() {
  EnvConfig env;
  env.lattice.n_columns = 3;
  env.lattice.n_levels = 2;
  env.lattice.structural_elements = 10;
  env.sim.dt = 1e-4;
  env.target_index = 3;
  return env;
}

ExperimentConfig desk_experiment(std::vector<std::uint64_t> seeds, bool adaptation) {
  ExperimentConfig c;
  c.env = desk_env();
  c.train.total_episodes = 1000;
  c.targets = {3};
  c.seeds = std::move(seeds);
  c.adaptation = {adaptation};
  c.checkpoint_every = 100;
  return c;
}

Outcome adaptation_law() {
  const AdaptConfig cfg;
  MuscleState s = initial_muscle_state(0, cfg);
  s.last_episode_strain = 0.1;
  s.last_episode_force = 1.0;
  const double mn = adapt(s, cfg) * 1000.0;
  const double rel = std::abs(mn - 2000.0802) / 2000.0802;

  MuscleState near = initial_muscle_state(1, cfg);
  near.lambda = 3.9999;
  near.last_episode_force = 1.0;
  near.last_episode_strain = 0.5;
  const double capped = adapt(near, cfg);
  const bool pass = rel < 1e-12 && capped == 2.0 * cfg.lambda_0;
  return {pass, fmt::format("lambda = {:.10f} mN (rel err {:.2e}), capped at {} mN", mn, rel,
                            capped * 1000.0)};
}

Outcome reward_values() {
  const RewardConfig cfg;
  const double a = reward(0.0005, cfg), b = reward(0.0015, cfg), c = reward(0.05, cfg);
  bool pass = std::abs(a - 1.99999975) < 1e-12 && std::abs(b - 0.49999775) < 1e-12 &&
              std::abs(c + 0.0025) < 1e-12;

  EnvConfig env_cfg = desk_env();
  env_cfg.sim.dt = 0.01;
  LatticeEnv env(env_cfg);
  env.reset();
  const StepResult r = env.step(Eigen::VectorXd::Ones(env.action_size()));
  pass = pass && r.unstable && r.done && r.reward == -2.0;
  return {pass, fmt::format("r(0.5mm) = {:.10f}, r(1.5mm) = {:.10f}, r(50mm) = {:.10f}; "
                            "unstable step reward {} done {}",
                            a, b, c, r.reward, r.done)};
}

Outcome rod_statics() {
  const LatticeSpec spec;
  Rod<double> rod = make_straight_rod<double>({0, 0, 0}, {0, 0, spec.height},
                                              static_cast<std::size_t>(spec.structural_elements),
                                              spec.structural_radius, spec.structural_material,
                                              {1, 0, 0});
  rod.positions.row(2) *= 1.01;
  const auto loads = compute_internal_loads(rod);
  const double area = std::numbers::pi * spec.structural_radius * spec.structural_radius;
  const double expected = spec.structural_material.youngs_modulus * area * 0.01;
  const double end_force = loads.forces.col(loads.forces.cols() - 1).norm();
  const double rel = std::abs(end_force - expected) / expected;

  RodSystem<double> s;
  s.rods.push_back(make_straight_rod<double>({0, 0, 0}, {0, 0, 0.1}, 2, 0.01,
                                             spec.structural_material, {1, 0, 0}));
  s.rods.push_back(make_straight_rod<double>({0.001, 0, 0}, {0.001, 0, 0.1}, 2, 0.005,
                                             spec.muscle_material, {1, 0, 0}));
  s.connections.push_back({0, 0, 1, 0, spec.connection_stiffness, 0.0});
  const double spring = connection_spring_force(s, s.connections[0]).norm();
  const bool pass = rel < 0.01 && std::abs(spring - 0.1) < 1e-9;
  return {pass, fmt::format("end force {:.6f} N vs EA eps {:.6f} N (rel {:.2e}); spring {:.12f} N",
                            end_force, expected, rel, spring)};
}

Outcome passivity() {
  LatticeSystem lat = build_lattice(LatticeSpec{});
  for (std::size_t r : lat.structural_rods) {
    auto& rod = lat.system.rods[r];
    const double top = rod.positions(2, rod.positions.cols() - 1);
    for (Eigen::Index i = 0; i < rod.velocities.cols(); ++i) {
      if (rod.fixed_nodes[i]) continue;
      const double z = rod.positions(2, i) / top;
      rod.velocities.col(i) = Eigen::Vector3d(0.02, -0.01, 0.005) * std::sin(0.5 * std::numbers::pi * z);
    }
  }
  SimConfig<double> cfg;
  cfg.damping_coefficient = 0.035;
  double e = mechanical_energy(lat.system, cfg);
  const double e0 = e;
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 10000; ++k) {
    step(lat.system, cfg);
    const double next = mechanical_energy(lat.system, cfg);
    worst = std::max(worst, next - e);
    e = next;
  }
  const bool pass = std::isfinite(e) && worst <= 1e-9;
  return {pass, fmt::format("E0 = {:.6e} J, E(10^4 steps) = {:.6e} J, largest step change {:.3e} J",
                            e0, e, worst)};
}

Outcome gradient_check() {
  double worst = 0.0;
  for (Eigen::Index out : {1, 6}) {
    Mlp<double> net({9, 64, 64, out});
    std::mt19937_64 gen(100 + out);
    orthogonal_init(net, std::sqrt(2.0), 1.0, gen);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& layer : net.layers())
      for (auto& b : layer.bias.reshaped()) b = 0.1 * n(gen);
    Eigen::MatrixXd x(9, 4), c(out, 4);
    for (auto& v : x.reshaped()) v = n(gen);
    for (auto& v : c.reshaped()) v = n(gen);
    const auto objective = [&] { return net.forward(x).cwiseProduct(c).sum(); };

    Mlp<double>::Cache cache;
    net.forward(x, &cache);
    const auto grads = net.backward(cache, c, nullptr);
    const double h = 1e-5;
    const auto check = [&](double* values, const double* analytic, Eigen::Index count) {
      Eigen::VectorXd fd(count), bp(count);
      for (Eigen::Index i = 0; i < count; ++i) {
        const double saved = values[i];
        values[i] = saved + h;
        const double up = objective();
        values[i] = saved - h;
        const double down = objective();
        values[i] = saved;
        fd[i] = (up - down) / (2 * h);
        bp[i] = analytic[i];
      }
      worst = std::max(worst, (fd - bp).norm() / bp.norm());
    };
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      check(net.layers()[l].weight.data(), grads[l].weight.data(), net.layers()[l].weight.size());
      check(net.layers()[l].bias.data(), grads[l].bias.data(), net.layers()[l].bias.size());
    }
  }
  return {worst <= 1e-4, fmt::format("worst per-tensor relative error {:.3e}", worst)};
}

Outcome invariants() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AdaptConfig on, off;
  off.adaptation_enabled = false;
  long violations = 0;
  const int histories = 10000;
  for (int h = 0; h < histories; ++h) {
    MuscleState a = initial_muscle_state(0, on), b = initial_muscle_state(0, off);
    const int length = 1 + static_cast<int>(u(gen) * 200);
    for (int e = 0; e < length; ++e) {
      const double activation = u(gen) < 0.2 ? 0.0 : u(gen);
      const double strain = (u(gen) - 0.5) * 0.4;
      const double fa = muscle_force(activation, a.lambda), fb = muscle_force(activation, b.lambda);
      violations += fa > a.lambda || fb > b.lambda;
      const std::vector<double> trace{strain, 0.5 * strain};
      record_episode_use(a, trace, fa);
      record_episode_use(b, trace, fb);
      const double before = a.lambda;
      adapt(a, on);
      adapt(b, off);
      violations += a.lambda < before || a.lambda > 2.0 * on.lambda_0;
      violations += b.lambda != off.lambda_0;
    }
  }

  LatticeEnv env(desk_env());
  std::uniform_real_distribution<double> act(-0.2, 1.2);
  long slice_mismatches = 0;
  for (int episode = 0; episode < 3; ++episode) {
    Eigen::VectorXd obs = env.reset();
    const Eigen::VectorXd ceilings = env.force_ceilings();
    const auto slice = [&](const Eigen::VectorXd& o) {
      return o.segment(env.layout().ceilings_offset(), env.layout().muscles);
    };
    slice_mismatches += slice(obs) != ceilings;
    bool done = false;
    while (!done) {
      Eigen::VectorXd a(env.action_size());
      for (auto& v : a) v = act(gen);
      const StepResult r = env.step(a);
      slice_mismatches += slice(r.observation) != ceilings;
      done = r.done;
    }
    const EpisodeRecord& rec = env.history().back();
    for (std::size_t m = 0; m < rec.force.size(); ++m) violations += rec.force[m] > rec.lambda[m];
  }
  const bool pass = violations == 0 && slice_mismatches == 0;
  return {pass, fmt::format("{} histories, {} law violations; {} observation slice mismatches",
                            histories, violations, slice_mismatches)};
}

RunRecord synthetic(const std::string& id, std::uint64_t seed, bool adaptation,
                    const std::vector<double>& returns, const std::vector<bool>& unstable = {}) {
  RunRecord r;
  r.run_id = id;
  r.status = "completed";
  r.seed = seed;
  r.target = 1;
  r.adaptation = adaptation;
  r.n_columns = 2;
  r.n_levels = 1;
  r.lambda_0 = 2.0;
  for (std::size_t e = 0; e < returns.size(); ++e) {
    const bool bad = e < unstable.size() && unstable[e];
    r.episodes.push_back({static_cast<long>(e), returns[e], returns[e], 0.01, bad, 10});
    r.muscles.push_back({{2.0, 0.0, 0.0}, {2.0, 0.0, 0.0}});
  }
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> attributes(const std::string& svg, const std::string& name) {
  std::vector<std::string> out;
  const std::regex re(name + "=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back((*it)[1]);
  return out;
}

std::vector<std::string> column(const CsvTable& t, const std::string& name) {
  std::vector<std::string> out;
  for (const auto& row : t.rows) out.push_back(row[t.column(name)]);
  return out;
}

Outcome reporting(const fs::path& work) {
  std::vector<std::string> failures;
  const auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  std::vector<RunRecord> recs{
      synthetic("t1_s0_adapt", 0, true, {1.0, 2.0, 4.0}),
      synthetic("t1_s1_adapt", 1, true, {3.0, 0.0, 2.0}, {false, true, false}),
      synthetic("t1_s0_noadapt", 0, false, {0.5, 0.25, -1.0 / 3.0}),
  };
  recs[0].muscles = {{{2.0, 2.0, 1.0}, {2.0, 0.3, 0.15}},
                     {{2.2, 1.1, 0.5}, {2.0, 0.0, 0.0}},
                     {{2.5, 2.5, 1.0}, {2.0, 0.0, 0.0}}};

  // window 2, unstable episode dropped: s1 rolling = 3 @0, 2.5 @2
  const RewardCurve curve = reward_curve(recs, 1, 2);
  expect(curve.mean_adaptive == std::vector<double>{2.0, 1.5, 2.75}, "curve means");
  expect(curve.std_adaptive == std::vector<double>{std::sqrt(2.0), 0.0, std::sqrt(0.125)},
         "curve stds");
  expect(curve.mean_nonadaptive[2] == (0.25 - 1.0 / 3.0) / 2.0, "non-adaptive curve");

  const BarChart bars = max_reward_bars(recs);
  expect(bars.bars.size() == 2 && bars.bars[0].mean == 3.5 && bars.bars[0].std == std::sqrt(0.5) &&
             bars.bars[1].mean == 0.5 && bars.bars[1].std == 0.0,
         "bar means and stds");

  const TraceSet traces = adaptation_traces(recs[0]);
  expect(traces.points.size() == 6 && traces.points[2].lambda == 2.2 && traces.points[2].force == 1.1,
         "trace values");

  const Heatmap heat = activation_heatmap(recs[0], 0, 2);
  expect(std::abs(heat.cells[0].mean_activation - 2.5 / 3.0) < 1e-15 &&
             std::abs(heat.cells[1].mean_activation - 0.05) < 1e-15 &&
             heat.cells[0].normalized == 1.0 && std::abs(heat.cells[1].normalized - 0.06) < 1e-14,
         "heatmap normalization");

  const fs::path dir = work / "reporting";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto curve_paths = emit_reward_curves(recs, dir, 2);
  for (const auto& stem : curve_paths) {
    const CsvTable t = read_csv(stem.string() + ".csv");
    const std::string svg = slurp(stem.string() + ".svg");
    std::vector<std::string> means, stds;
    for (const std::string arm : {"adaptive", "nonadaptive"})
      for (const auto& row : t.rows) {
        if (row[t.column("mean_" + arm)].empty()) continue;
        means.push_back(row[t.column("mean_" + arm)]);
        stds.push_back(row[t.column("std_" + arm)]);
      }
    expect(attributes(svg, "data-mean") == means && attributes(svg, "data-std") == stds,
           "reward curve svg/csv");
  }
  {
    const fs::path stem = emit_max_reward_bars(recs, dir);
    const CsvTable t = read_csv(stem.string() + ".csv");
    const std::string svg = slurp(stem.string() + ".svg");
    expect(attributes(svg, "data-mean") == column(t, "mean_max_return") &&
               attributes(svg, "data-std") == column(t, "std_max_return"),
           "bars svg/csv");
  }
  {
    const fs::path stem = emit_adaptation_traces(recs[0], dir);
    const CsvTable t = read_csv(stem.string() + ".csv");
    const std::string svg = slurp(stem.string() + ".svg");
    std::map<std::pair<std::string, std::string>, std::pair<std::string, std::string>> a, b;
    for (const auto& row : t.rows)
      a[{row[t.column("episode")], row[t.column("muscle_id")]}] = {row[t.column("lambda")],
                                                                   row[t.column("force")]};
    const std::regex point(
        "data-episode=\"([^\"]*)\" data-muscle=\"([^\"]*)\" data-lambda=\"([^\"]*)\" "
        "data-force=\"([^\"]*)\"");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), point); it != std::sregex_iterator();
         ++it)
      b[{(*it)[1], (*it)[2]}] = {(*it)[3], (*it)[4]};
    expect(a.size() == 6 && a == b, "traces svg/csv");
  }
  {
    const fs::path stem = emit_activation_heatmap(recs[0], 0, 2, dir);
    const CsvTable t = read_csv(stem.string() + ".csv");
    const std::string svg = slurp(stem.string() + ".svg");
    expect(attributes(svg, "data-mean") == column(t, "mean_activation") &&
               attributes(svg, "data-normalized") == column(t, "normalized"),
           "heatmap svg/csv");
  }
  std::string detail = "hand-computed curve, bars, traces and heatmap; 4 svg/csv pairs identical";
  if (!failures.empty()) {
    detail = "mismatch:";
    for (const auto& f : failures) detail += " " + f + ";";
  }
  return {failures.empty(), detail};
}

struct TrainingResults {
  std::vector<RunRecord> adaptive, nonadaptive;
  RunRecord rerun;
};

TrainingResults train_desk_runs(const fs::path& work, const fs::path& cli) {
  const auto sweep = [&](const ExperimentConfig& c, const std::string& name) {
    const fs::path out = work / name;
    fs::remove_all(out);
    spdlog::info("training {} ({} runs of {} episodes)", name, c.seeds.size(),
                 c.train.total_episodes);
    const SweepSummary s = run_sweep(c, SweepOptions{out, 1, false, cli});
    if (s.failed > 0) throw std::runtime_error(name + ": " + std::to_string(s.failed) + " runs failed");
    return load_records(out);
  };
  TrainingResults r;
  r.adaptive = sweep(desk_experiment({0, 1, 2, 3, 4}, true), "adaptive");
  r.nonadaptive = sweep(desk_experiment({0, 1, 2}, false), "nonadaptive");
  r.rerun = sweep(desk_experiment({0}, true), "rerun").at(0);
  return r;
}

const RunRecord& by_seed(const std::vector<RunRecord>& records, std::uint64_t seed) {
  for (const auto& r : records)
    if (r.seed == seed) return r;
  throw std::runtime_error("missing seed " + std::to_string(seed));
}

Outcome determinism(const TrainingResults& t) {
  const RunRecord& a = by_seed(t.adaptive, 0);
  const RunRecord& b = t.rerun;
  bool same = a.episodes.size() == b.episodes.size() && a.episodes.size() == 1000;
  double worst = 0.0;
  for (std::size_t i = 0; same && i < a.episodes.size(); ++i) {
    const double x = a.episodes[i].episode_return, y = b.episodes[i].episode_return;
    worst = std::max(worst, std::abs(x - y) / std::max(std::abs(x), 1e-300));
    same = same && (x == y || worst <= 1e-12);
  }
  return {same, fmt::format("seed 0 adaptive run twice: {} episodes, largest relative difference {:.3e}",
                            a.episodes.size(), worst)};
}

double window_mean(const RunRecord& r, std::size_t first, std::size_t last) {
  double sum = 0.0;
  for (std::size_t i = first; i < last; ++i) sum += r.episodes[i].episode_return;
  return sum / static_cast<double>(last - first);
}

Outcome learning(const TrainingResults& t) {
  int improved = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RunRecord& r = by_seed(t.adaptive, seed);
    const std::size_t n = r.episodes.size();
    const double head = window_mean(r, 0, 100), tail = window_mean(r, n - 100, n);
    improved += tail > head;
    detail += fmt::format(" s{}: {:.4f} -> {:.4f};", seed, head, tail);
  }
  return {improved >= 4, fmt::format("{}/5 seeds improved (first 100 -> last 100 mean return):{}",
                                     improved, detail)};
}

Outcome adaptation_benefit(const TrainingResults& t) {
  const auto maxima = [](const std::vector<RunRecord>& runs, std::string& seeds) {
    std::vector<double> out;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const RunRecord& r = by_seed(runs, seed);
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& e : r.episodes)
        if (!e.unstable) best = std::max(best, e.episode_return);
      out.push_back(best);
      seeds += fmt::format(" s{}={:.4f}", seed, best);
    }
    return out;
  };
  std::string sa, sn;
  const auto a = maxima(t.adaptive, sa), n = maxima(t.nonadaptive, sn);
  double ma, sda, mn, sdn;
  mean_and_std(a, ma, sda);
  mean_and_std(n, mn, sdn);
  return {ma >= mn, fmt::format("mean max return adaptive {:.4f} (sd {:.4f};{}) vs non-adaptive "
                                "{:.4f} (sd {:.4f};{})",
                                ma, sda, sa, mn, sdn, sn)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  bool fast = false, training = false;
  std::string work_dir = "acceptance";
  std::string cli = WORMSIM_CLI;
  app.add_flag("--fast", fast, "criteria that run in seconds");
  app.add_flag("--training", training, "desk-scale training criteria");
  app.add_option("--work-dir", work_dir, "scratch directory");
  app.add_option("--cli", cli, "wormsim executable used for training runs");
  CLI11_PARSE(app, argc, argv);
  if (!fast && !training) fast = training = true;
  spdlog::set_level(spdlog::level::warn);

  const fs::path work(work_dir);
  fs::create_directories(work);
  int failures = 0;
  const auto report = [&](int id, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };

  if (fast) {
    report(1, adaptation_law);
    report(2, reward_values);
    report(3, rod_statics);
    report(4, passivity);
    report(5, gradient_check);
    report(6, invariants);
    report(10, [&] { return reporting(work); });
  }
  if (training) {
    spdlog::set_level(spdlog::level::info);
    TrainingResults results;
    try {
      results = train_desk_runs(work, cli);
    } catch (const std::exception& e) {
      for (int id : {7, 8, 9}) std::printf("FAIL criterion %d: training failed: %s\n", id, e.what());
      return 1;
    }
    spdlog::set_level(spdlog::level::warn);
    report(7, [&] { return determinism(results); });
    report(8, [&] { return learning(results); });
    report(9, [&] { return adaptation_benefit(results); });
    try {
      const fs::path run_dir = work / "adaptive" / "runs" / by_seed(results.adaptive, 0).run_id;
      const ReplayResult r = replay_run(run_dir, std::nullopt, work / "replay_s0.csv");
      std::printf("INFO replay of trained seed 0: distance %.6f m -> %.6f m\n", r.initial_distance,
                  r.final_distance);
    } catch (const std::exception& e) {
      std::printf("INFO replay failed: %s\n", e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}
