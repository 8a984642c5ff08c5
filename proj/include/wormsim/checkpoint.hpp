#ifndef WORMSIM_CHECKPOINT_HPP_
#define WORMSIM_CHECKPOINT_HPP_

#include <vector>

#include <json.hpp>

#include "wormsim/muscle.hpp"
#include "wormsim/ppo.hpp"

namespace wormsim {

inline constexpr int kCheckpointVersion = 1;

/// Parameters, optimizer moments, normalizer, rng and loop counters. Doubles
/// are written in shortest round-trip form, so a reload is bit-exact.
nlohmann::json trainer_to_json(const Trainer& trainer);

/// Inverse of trainer_to_json. Sizes must match the trainer's environment.
void trainer_from_json(const nlohmann::json& j, Trainer& trainer);

nlohmann::json muscles_to_json(const std::vector<MuscleState>& muscles);
std::vector<MuscleState> muscles_from_json(const nlohmann::json& j);

}  // namespace wormsim

#endif  // WORMSIM_CHECKPOINT_HPP_
