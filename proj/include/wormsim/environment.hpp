#ifndef WORMSIM_ENVIRONMENT_HPP_
#define WORMSIM_ENVIRONMENT_HPP_

#include <limits>

#include <Eigen/Core>

namespace wormsim {

struct StepResult {
  Eigen::VectorXd observation;
  double reward{};
  bool done{};
  bool unstable{};
  double distance = std::numeric_limits<double>::quiet_NaN();
};

/// Episodic task consumed by the learner.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual Eigen::Index observation_size() const = 0;
  virtual Eigen::Index action_size() const = 0;
  virtual Eigen::VectorXd reset() = 0;
  virtual StepResult step(const Eigen::VectorXd& action) = 0;
};

}  // namespace wormsim

#endif  // WORMSIM_ENVIRONMENT_HPP_
