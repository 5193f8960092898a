#pragma once

#include <vector>

#include "polopt/outcome.hpp"
#include "polopt/response.hpp"
#include "polopt/synthdata.hpp"

namespace polopt {

/// Stochastic intervention policy pi_1(w) = sigmoid(slope*w + intercept).
struct LogisticPolicy {
  double slope = 0.0;
  double intercept = 0.0;

  double prob_treat(double w) const;

  /// The evaluation policy sigmoid(w + 0.5).
  static LogisticPolicy reference_eval();
};

/// Policy-induced mean cost pi_1(w)*mu_hat_1(w) + pi_0(w)*mu_hat_0(w).
double policy_induced_mu(const OutcomeModel& model, const LogisticPolicy& policy,
                         double w);

/// One plug-in cost per context.
std::vector<double> plug_in_costs(const OutcomeModel& model,
                                  const LogisticPolicy& policy,
                                  const ContextSet& contexts);

/// Downstream optimum under the plug-in costs: the point estimate of the
/// policy value before any debiasing.
ResponseSolution plug_in_objective(const OutcomeModel& model,
                                   const LogisticPolicy& policy,
                                   const ContextSet& contexts,
                                   const LinearResponseOracle& oracle);

/// Same plug-in objective, but with costs from the true outcome means:
/// the ground-truth value of a policy on a fixed context set.
ResponseSolution true_objective(const OutcomeSpec& truth,
                                const LogisticPolicy& policy,
                                const ContextSet& contexts,
                                const LinearResponseOracle& oracle);

}  // namespace polopt
