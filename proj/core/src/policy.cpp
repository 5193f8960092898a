#include "polopt/policy.hpp"

#include "polopt/errors.hpp"
#include "polopt/propensity.hpp"

namespace polopt {

double LogisticPolicy::prob_treat(double w) const {
  return sigmoid(slope * w + intercept);
}

LogisticPolicy LogisticPolicy::reference_eval() { return {1.0, 0.5}; }

double policy_induced_mu(const OutcomeModel& model, const LogisticPolicy& policy,
                         double w) {
  double p1 = policy.prob_treat(w);
  return p1 * model.predict(1, w) + (1.0 - p1) * model.predict(0, w);
}

std::vector<double> plug_in_costs(const OutcomeModel& model,
                                  const LogisticPolicy& policy,
                                  const ContextSet& contexts) {
  if (contexts.w.empty()) throw EmptyInputError("plug_in_costs: no contexts");
  std::vector<double> costs(contexts.w.size());
  for (std::size_t i = 0; i < contexts.w.size(); ++i) {
    costs[i] = policy_induced_mu(model, policy, contexts.w[i]);
  }
  return costs;
}

ResponseSolution plug_in_objective(const OutcomeModel& model,
                                   const LogisticPolicy& policy,
                                   const ContextSet& contexts,
                                   const LinearResponseOracle& oracle) {
  return oracle.solve(plug_in_costs(model, policy, contexts));
}

ResponseSolution true_objective(const OutcomeSpec& truth,
                                const LogisticPolicy& policy,
                                const ContextSet& contexts,
                                const LinearResponseOracle& oracle) {
  if (contexts.w.empty()) throw EmptyInputError("true_objective: no contexts");
  std::vector<double> costs(contexts.w.size());
  for (std::size_t i = 0; i < contexts.w.size(); ++i) {
    double w = contexts.w[i];
    double p1 = policy.prob_treat(w);
    costs[i] = p1 * true_outcome_mean(truth, 1, w) +
               (1.0 - p1) * true_outcome_mean(truth, 0, w);
  }
  return oracle.solve(costs);
}

}  // namespace polopt
