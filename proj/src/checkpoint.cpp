#include "wormsim/checkpoint.hpp"

#include <stdexcept>

namespace wormsim {

using nlohmann::json;

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const json& j, Eigen::Index expected, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != expected)
    throw std::runtime_error(std::string("checkpoint field '") + what + "' has " +
                             std::to_string(v.size()) + " entries, expected " +
                             std::to_string(expected));
  return Eigen::Map<const Eigen::VectorXd>(v.data(), expected);
}

}  // namespace

json trainer_to_json(const Trainer& trainer) {
  const auto& p = trainer.params();
  const auto& n = trainer.normalizer();
  json j;
  j["version"] = kCheckpointVersion;
  j["params"] = to_vector(p.flatten());
  j["adam"] = {{"m", to_vector(p.adam.m)}, {"v", to_vector(p.adam.v)}, {"step", p.adam.step}};
  j["normalizer"] = {{"mean", to_vector(n.mean)},
                     {"var", to_vector(n.var)},
                     {"count", n.count},
                     {"clip", n.clip},
                     {"epsilon", n.epsilon}};
  j["rng"] = trainer.rng().serialize();
  j["progress"] = {{"episodes", trainer.episodes_done()},
                   {"updates", trainer.updates_done()},
                   {"steps", trainer.steps_done()},
                   {"consecutive_failures", trainer.consecutive_failures()}};
  j["observation"] = to_vector(trainer.current_observation());
  return j;
}

void trainer_from_json(const json& j, Trainer& trainer) {
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version");
  auto& p = trainer.params();
  p.assign(from_vector(j.at("params"), p.size(), "params"));
  p.adam.m = from_vector(j.at("adam").at("m"), p.size(), "adam.m");
  p.adam.v = from_vector(j.at("adam").at("v"), p.size(), "adam.v");
  p.adam.step = j.at("adam").at("step").get<long>();

  auto& n = trainer.normalizer();
  const auto& nj = j.at("normalizer");
  n.mean = from_vector(nj.at("mean"), n.mean.size(), "normalizer.mean");
  n.var = from_vector(nj.at("var"), n.var.size(), "normalizer.var");
  n.count = nj.at("count").get<double>();
  n.clip = nj.at("clip").get<double>();
  n.epsilon = nj.at("epsilon").get<double>();

  trainer.rng().deserialize(j.at("rng").get<std::string>());
  const auto& pr = j.at("progress");
  trainer.restore_progress(pr.at("episodes").get<long>(), pr.at("updates").get<long>(),
                           pr.at("steps").get<long>(), pr.at("consecutive_failures").get<int>(),
                           from_vector(j.at("observation"), n.mean.size(), "observation"));
}

json muscles_to_json(const std::vector<MuscleState>& muscles) {
  json arr = json::array();
  for (const auto& m : muscles)
    arr.push_back({{"muscle_id", m.muscle_id},
                   {"lambda", m.lambda},
                   {"last_episode_strain", m.last_episode_strain},
                   {"last_episode_force", m.last_episode_force},
                   {"activation", m.activation}});
  return arr;
}

std::vector<MuscleState> muscles_from_json(const json& j) {
  std::vector<MuscleState> muscles;
  for (const auto& m : j)
    muscles.push_back({m.at("muscle_id").get<int>(), m.at("lambda").get<double>(),
                       m.at("last_episode_strain").get<double>(),
                       m.at("last_episode_force").get<double>(), m.at("activation").get<double>()});
  return muscles;
}

}  // namespace wormsim
