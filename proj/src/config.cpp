#include "wormsim/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "wormsim/io.hpp"

namespace wormsim {

using nlohmann::json;

namespace {

constexpr double kMm = 1e-3;
constexpr double kKpa = 1e3;
constexpr double kMn = 1e-3;

// Reads keys from one JSON object and rejects any key nobody asked for.
class Section {
 public:
  Section(const json& parent, const std::string& name) : name_(name) {
    if (!parent.contains(name)) return;
    node_ = &parent.at(name);
    if (!node_->is_object()) throw ConfigError("'" + name + "' must be an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("'" + name_ + "." + key + "' has the wrong type");
    }
  }

  void get_scaled(const std::string& key, double& out, double scale) {
    double v = out / scale;
    get(key, v);
    out = v * scale;
  }

  void get_vec3(const std::string& key, Eigen::Vector3d& out, double scale) {
    std::vector<double> v{out.x() / scale, out.y() / scale, out.z() / scale};
    get(key, v);
    if (v.size() != 3) throw ConfigError("'" + name_ + "." + key + "' needs 3 entries");
    out = Eigen::Vector3d(v[0], v[1], v[2]) * scale;
  }

  void finish() const {
    if (!node_) return;
    for (const auto& item : node_->items())
      if (!seen_.count(item.key()))
        throw ConfigError("unknown key '" + name_ + "." + item.key() + "'");
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

const std::set<std::string> kSections{"lattice",    "simulation", "adaptation", "reward",
                                      "episode",    "targets",    "train",      "experiment"};

std::string nodes_name(ObservationNodes n) {
  return n == ObservationNodes::kAll ? "all" : "attachments";
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    env.lattice.validate();
    env.sim.validate();
    env.adapt.validate();
    env.reward.validate();
    env.episode.validate();
    env.prism.validate();
    train.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (seeds.empty()) throw ConfigError("experiment.seeds must not be empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("experiment.seeds must be distinct");
  if (targets.empty()) throw ConfigError("experiment.targets must not be empty");
  for (int t : targets)
    if (t < 1 || t > 8) throw ConfigError("target " + std::to_string(t) + " is outside 1..8");
  if (std::set<int>(targets.begin(), targets.end()).size() != targets.size())
    throw ConfigError("experiment.targets must be distinct");
  if (adaptation.empty() || adaptation.size() > 2 ||
      (adaptation.size() == 2 && adaptation[0] == adaptation[1]))
    throw ConfigError("experiment.adaptation must list 'on' and/or 'off' once each");
  if (log_cadence < 1) throw ConfigError("experiment.log_cadence must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("experiment.checkpoint_every must be >= 1");
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : j.items())
    if (!kSections.count(item.key())) throw ConfigError("unknown section '" + item.key() + "'");

  ExperimentConfig c;
  auto& lat = c.env.lattice;
  Section s(j, "lattice");
  s.get_scaled("height_mm", lat.height, kMm);
  s.get_scaled("diameter_mm", lat.diameter, kMm);
  s.get("n_columns", lat.n_columns);
  s.get("n_levels", lat.n_levels);
  s.get("structural_elements", lat.structural_elements);
  s.get("muscle_elements", lat.muscle_elements);
  s.get_scaled("structural_radius_mm", lat.structural_radius, kMm);
  s.get_scaled("muscle_radius_mm", lat.muscle_radius, kMm);
  s.get_scaled("structural_youngs_modulus_kpa", lat.structural_material.youngs_modulus, kKpa);
  s.get_scaled("muscle_youngs_modulus_kpa", lat.muscle_material.youngs_modulus, kKpa);
  s.get("structural_poisson_ratio", lat.structural_material.poisson_ratio);
  s.get("muscle_poisson_ratio", lat.muscle_material.poisson_ratio);
  s.get("structural_density_kg_m3", lat.structural_material.density);
  s.get("muscle_density_kg_m3", lat.muscle_material.density);
  // mN/mm is N/m
  s.get("connection_stiffness_mn_per_mm", lat.connection_stiffness);
  s.get_scaled("connection_damping_mns_per_m", lat.connection_damping, kMn);
  s.finish();

  Section sim(j, "simulation");
  sim.get("dt_s", c.env.sim.dt);
  sim.get_scaled("damping_mns_per_m", c.env.sim.damping_coefficient, kMn);
  sim.get("gravity", c.env.sim.gravity);
  sim.finish();

  Section ad(j, "adaptation");
  ad.get("beta", c.env.adapt.beta);
  ad.get("gamma_per_mn", c.env.adapt.gamma_per_mn);
  ad.get_scaled("lambda_0_mn", c.env.adapt.lambda_0, kMn);
  ad.finish();

  Section rw(j, "reward");
  rw.get_scaled("bonus_radius_mm", c.env.reward.bonus_radius, kMm);
  rw.get("inner_bonus", c.env.reward.inner_bonus);
  rw.get("outer_bonus", c.env.reward.outer_bonus);
  rw.get("instability_penalty", c.env.reward.instability_penalty);
  rw.finish();

  Section ep(j, "episode");
  ep.get("control_steps", c.env.episode.control_steps);
  ep.get("control_dt_s", c.env.episode.control_dt);
  ep.get("action_hold", c.env.episode.action_hold);
  std::string nodes = nodes_name(c.env.episode.observation_nodes);
  ep.get("observation_nodes", nodes);
  if (nodes == "all")
    c.env.episode.observation_nodes = ObservationNodes::kAll;
  else if (nodes == "attachments")
    c.env.episode.observation_nodes = ObservationNodes::kAttachments;
  else
    throw ConfigError("episode.observation_nodes must be 'attachments' or 'all'");
  ep.finish();

  Section tg(j, "targets");
  tg.get_vec3("center_mm", c.env.prism.center, kMm);
  tg.get_vec3("half_extents_mm", c.env.prism.half_extents, kMm);
  tg.finish();

  auto& t = c.train;
  Section tr(j, "train");
  tr.get("n_steps", t.n_steps);
  tr.get("learning_rate", t.learning_rate);
  tr.get("discount_gamma", t.discount_gamma);
  tr.get("gae_lambda", t.gae_lambda);
  tr.get("clip_range", t.clip_range);
  tr.get("n_epochs", t.n_epochs);
  tr.get("minibatch_size", t.minibatch_size);
  tr.get("value_coef", t.value_coef);
  tr.get("entropy_coef", t.entropy_coef);
  tr.get("max_grad_norm", t.max_grad_norm);
  tr.get("total_episodes", t.total_episodes);
  tr.get("hidden_sizes", t.hidden_sizes);
  tr.get("adam_epsilon", t.adam_epsilon);
  tr.get("normalize_observations", t.normalize_observations);
  tr.get("observation_clip", t.observation_clip);
  tr.get("max_consecutive_failures", t.max_consecutive_failures);
  tr.finish();

  Section ex(j, "experiment");
  ex.get("targets", c.targets);
  ex.get("seeds", c.seeds);
  std::vector<std::string> arms;
  for (bool a : c.adaptation) arms.push_back(a ? "on" : "off");
  ex.get("adaptation", arms);
  c.adaptation.clear();
  for (const auto& a : arms) {
    if (a != "on" && a != "off") throw ConfigError("experiment.adaptation entries must be 'on' or 'off'");
    c.adaptation.push_back(a == "on");
  }
  ex.get("log_cadence", c.log_cadence);
  ex.get("checkpoint_every", c.checkpoint_every);
  ex.finish();

  c.env.adapt.adaptation_enabled = c.adaptation.front();
  c.env.target_index = c.targets.front();
  c.train.seed = c.seeds.front();
  c.env.seed = c.seeds.front();
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  const auto& lat = c.env.lattice;
  const auto vec3 = [](const Eigen::Vector3d& v, double scale) {
    return std::vector<double>{v.x() / scale, v.y() / scale, v.z() / scale};
  };
  json j;
  j["lattice"] = {
      {"height_mm", lat.height / kMm},
      {"diameter_mm", lat.diameter / kMm},
      {"n_columns", lat.n_columns},
      {"n_levels", lat.n_levels},
      {"structural_elements", lat.structural_elements},
      {"muscle_elements", lat.muscle_elements},
      {"structural_radius_mm", lat.structural_radius / kMm},
      {"muscle_radius_mm", lat.muscle_radius / kMm},
      {"structural_youngs_modulus_kpa", lat.structural_material.youngs_modulus / kKpa},
      {"muscle_youngs_modulus_kpa", lat.muscle_material.youngs_modulus / kKpa},
      {"structural_poisson_ratio", lat.structural_material.poisson_ratio},
      {"muscle_poisson_ratio", lat.muscle_material.poisson_ratio},
      {"structural_density_kg_m3", lat.structural_material.density},
      {"muscle_density_kg_m3", lat.muscle_material.density},
      {"connection_stiffness_mn_per_mm", lat.connection_stiffness},
      {"connection_damping_mns_per_m", lat.connection_damping / kMn},
  };
  j["simulation"] = {{"dt_s", c.env.sim.dt},
                     {"damping_mns_per_m", c.env.sim.damping_coefficient / kMn},
                     {"gravity", c.env.sim.gravity}};
  j["adaptation"] = {{"beta", c.env.adapt.beta},
                     {"gamma_per_mn", c.env.adapt.gamma_per_mn},
                     {"lambda_0_mn", c.env.adapt.lambda_0 / kMn}};
  j["reward"] = {{"bonus_radius_mm", c.env.reward.bonus_radius / kMm},
                 {"inner_bonus", c.env.reward.inner_bonus},
                 {"outer_bonus", c.env.reward.outer_bonus},
                 {"instability_penalty", c.env.reward.instability_penalty}};
  j["episode"] = {{"control_steps", c.env.episode.control_steps},
                  {"control_dt_s", c.env.episode.control_dt},
                  {"action_hold", c.env.episode.action_hold},
                  {"observation_nodes", nodes_name(c.env.episode.observation_nodes)}};
  j["targets"] = {{"center_mm", vec3(c.env.prism.center, kMm)},
                  {"half_extents_mm", vec3(c.env.prism.half_extents, kMm)}};
  const auto& t = c.train;
  j["train"] = {{"n_steps", t.n_steps},
                {"learning_rate", t.learning_rate},
                {"discount_gamma", t.discount_gamma},
                {"gae_lambda", t.gae_lambda},
                {"clip_range", t.clip_range},
                {"n_epochs", t.n_epochs},
                {"minibatch_size", t.minibatch_size},
                {"value_coef", t.value_coef},
                {"entropy_coef", t.entropy_coef},
                {"max_grad_norm", t.max_grad_norm},
                {"total_episodes", t.total_episodes},
                {"hidden_sizes", t.hidden_sizes},
                {"adam_epsilon", t.adam_epsilon},
                {"normalize_observations", t.normalize_observations},
                {"observation_clip", t.observation_clip},
                {"max_consecutive_failures", t.max_consecutive_failures}};
  std::vector<std::string> arms;
  for (bool a : c.adaptation) arms.push_back(a ? "on" : "off");
  j["experiment"] = {{"targets", c.targets},
                     {"seeds", c.seeds},
                     {"adaptation", arms},
                     {"log_cadence", c.log_cadence},
                     {"checkpoint_every", c.checkpoint_every}};
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  write_json_atomic(path, config_to_json(config));
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config_to_json(config).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunSpec::run_id() const {
  return "t" + std::to_string(target) + "_s" + std::to_string(seed) +
         (adaptation ? "_adapt" : "_noadapt");
}

ExperimentConfig run_config(const ExperimentConfig& base, const RunSpec& spec) {
  ExperimentConfig c = base;
  c.seeds = {spec.seed};
  c.targets = {spec.target};
  c.adaptation = {spec.adaptation};
  c.env.adapt.adaptation_enabled = spec.adaptation;
  c.env.target_index = spec.target;
  c.env.seed = spec.seed;
  c.train.seed = spec.seed;
  c.validate();
  return c;
}

std::vector<RunSpec> expand_runs(const ExperimentConfig& config) {
  std::vector<RunSpec> runs;
  for (int target : config.targets)
    for (bool adaptation : config.adaptation)
      for (auto seed : config.seeds) runs.push_back({seed, target, adaptation});
  return runs;
}

}  // namespace wormsim
