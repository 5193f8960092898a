#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "polopt/errors.hpp"
#include "polopt/perturbation.hpp"
#include "polopt/policy.hpp"
#include "polopt/response.hpp"

namespace polopt {

struct OptimizerConfig {
  double step_size = 0.1;  // tuned over {0.01, 0.1, 1}
  std::size_t iterations = 60;
  LogisticPolicy init;
  bool use_perturbation = false;
  double h = 2.0;  // finite-difference parameter of the expanded objective

  void validate() const;
};

struct TrajectoryPoint {
  LogisticPolicy policy;
  double objective = 0.0;
  double grad_norm = 0.0;
};

struct PolicyTrajectory {
  std::vector<TrajectoryPoint> points;  // length iterations + 1
  LogisticPolicy final_policy;
  LogisticPolicy best_policy;
  double best_objective = 0.0;
};

/// Divergence during descent, carrying the iterations completed so far.
class PolicyDivergenceError : public DivergenceError {
 public:
  PolicyDivergenceError(const std::string& what, PolicyTrajectory trajectory)
      : DivergenceError(what), trajectory(std::move(trajectory)) {}

  PolicyTrajectory trajectory;
};

/// Subgradient of the plug-in value in (slope, intercept): solve the inner
/// problem, fix its solution, and differentiate the objective through the
/// policy probabilities only.
Eigen::Vector2d danskin_subgradient(const LogisticPolicy& policy,
                                    const OutcomeModel& model,
                                    const ContextSet& contexts,
                                    const LinearResponseOracle& oracle);

/// Subgradient of the debiased (expanded) objective
/// (1 + 1/h) * v0 - 1/(h*s) * sum_j v_j, each term differentiated as above.
Eigen::Vector2d danskin_subgradient(const LogisticPolicy& policy,
                                    const OutcomeModel& model0,
                                    const std::vector<OutcomeModel>& replicates,
                                    double h, const ContextSet& contexts,
                                    const LinearResponseOracle& oracle);

/// Constant-step subgradient descent.  Replicates are required when
/// config.use_perturbation is set and ignored otherwise.
PolicyTrajectory optimize(const OptimizerConfig& config,
                          const OutcomeModel& model0,
                          const std::vector<OutcomeModel>& replicates,
                          const ContextSet& contexts,
                          const LinearResponseOracle& oracle);

/// CSV with header "iter,phi_slope,phi_intercept,objective,grad_norm".
std::string trajectory_to_csv(const PolicyTrajectory& trajectory);

}  // namespace polopt
