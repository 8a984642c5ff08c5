#ifndef WORMSIM_DESCRIBE_HPP_
#define WORMSIM_DESCRIBE_HPP_

#include <json.hpp>

#include "wormsim/config.hpp"

namespace wormsim {

/// Built topology for inspection: rods, connections, muscle layout, targets,
/// observation layout and the resolved config with its hash.
nlohmann::json describe(const ExperimentConfig& config);

}  // namespace wormsim

#endif  // WORMSIM_DESCRIBE_HPP_
