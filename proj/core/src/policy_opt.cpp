#include "polopt/policy_opt.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "polopt/propensity.hpp"

namespace polopt {

void OptimizerConfig::validate() const {
  if (step_size <= 0.0) throw ConfigError("OptimizerConfig: step_size must be > 0");
  if (iterations == 0) throw ConfigError("OptimizerConfig: iterations must be >= 1");
  if (use_perturbation && h <= 0.0) {
    throw ConfigError("OptimizerConfig: h must be > 0");
  }
}

namespace {

/// Gradient of sum_i x*_i * mu_pi(w_i) with x* held fixed.
Eigen::Vector2d fixed_solution_gradient(const LogisticPolicy& policy,
                                        const OutcomeModel& model,
                                        const ContextSet& contexts,
                                        const ResponseSolution& solution) {
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < contexts.w.size(); ++i) {
    if (solution.x[i] == 0.0) continue;
    double w = contexts.w[i];
    double p = policy.prob_treat(w);
    double contrast = model.predict(1, w) - model.predict(0, w);
    double scale = solution.x[i] * p * (1.0 - p) * contrast;
    grad[0] += scale * w;
    grad[1] += scale;
  }
  return grad;
}

}  // namespace

Eigen::Vector2d danskin_subgradient(const LogisticPolicy& policy,
                                    const OutcomeModel& model,
                                    const ContextSet& contexts,
                                    const LinearResponseOracle& oracle) {
  ResponseSolution solution = plug_in_objective(model, policy, contexts, oracle);
  return fixed_solution_gradient(policy, model, contexts, solution);
}

Eigen::Vector2d danskin_subgradient(const LogisticPolicy& policy,
                                    const OutcomeModel& model0,
                                    const std::vector<OutcomeModel>& replicates,
                                    double h, const ContextSet& contexts,
                                    const LinearResponseOracle& oracle) {
  if (replicates.empty()) {
    throw ConfigError("danskin_subgradient: empty replicate set");
  }
  if (h <= 0.0) throw ConfigError("danskin_subgradient: h must be > 0");
  Eigen::Vector2d grad =
      (1.0 + 1.0 / h) * danskin_subgradient(policy, model0, contexts, oracle);
  double replicate_weight = -1.0 / (h * static_cast<double>(replicates.size()));
  for (const auto& model : replicates) {
    grad += replicate_weight * danskin_subgradient(policy, model, contexts, oracle);
  }
  return grad;
}

PolicyTrajectory optimize(const OptimizerConfig& config,
                          const OutcomeModel& model0,
                          const std::vector<OutcomeModel>& replicates,
                          const ContextSet& contexts,
                          const LinearResponseOracle& oracle) {
  config.validate();
  if (config.use_perturbation && replicates.empty()) {
    throw ConfigError("optimize: perturbation enabled but no replicates given");
  }

  auto objective = [&](const LogisticPolicy& policy) {
    double v0 = plug_in_objective(model0, policy, contexts, oracle).value;
    if (!config.use_perturbation) return v0;
    double sum = 0.0;
    for (const auto& model : replicates) {
      sum += plug_in_objective(model, policy, contexts, oracle).value;
    }
    double mean = sum / static_cast<double>(replicates.size());
    return v0 + (v0 - mean) / config.h;
  };
  auto gradient = [&](const LogisticPolicy& policy) {
    return config.use_perturbation
               ? danskin_subgradient(policy, model0, replicates, config.h,
                                     contexts, oracle)
               : danskin_subgradient(policy, model0, contexts, oracle);
  };

  PolicyTrajectory trajectory;
  LogisticPolicy policy = config.init;
  trajectory.best_objective = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter <= config.iterations; ++iter) {
    Eigen::Vector2d grad = gradient(policy);
    double value = objective(policy);
    trajectory.points.push_back({policy, value, grad.norm()});
    if (value < trajectory.best_objective) {
      trajectory.best_objective = value;
      trajectory.best_policy = policy;
    }
    if (!grad.allFinite() || !std::isfinite(value)) {
      trajectory.final_policy = policy;
      throw PolicyDivergenceError(
          "optimize: non-finite objective or gradient at iteration " +
              std::to_string(iter),
          trajectory);
    }
    if (iter == config.iterations) break;
    policy.slope -= config.step_size * grad[0];
    policy.intercept -= config.step_size * grad[1];
  }
  trajectory.final_policy = policy;
  return trajectory;
}

std::string trajectory_to_csv(const PolicyTrajectory& trajectory) {
  std::ostringstream os;
  os.precision(17);
  os << "iter,phi_slope,phi_intercept,objective,grad_norm\n";
  for (std::size_t i = 0; i < trajectory.points.size(); ++i) {
    const auto& p = trajectory.points[i];
    os << i << ',' << p.policy.slope << ',' << p.policy.intercept << ','
       << p.objective << ',' << p.grad_norm << '\n';
  }
  return os.str();
}

}  // namespace polopt
