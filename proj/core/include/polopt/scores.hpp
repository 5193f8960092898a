#pragma once

#include <cstdint>
#include <string>

#include "polopt/outcome.hpp"
#include "polopt/policy.hpp"
#include "polopt/response.hpp"
#include "polopt/synthdata.hpp"

namespace polopt {

enum class ScoreKind { IPW, AIPW };

/// Policy-weighted inverse-propensity score:
/// sum_t pi_t(w) * 1[T=t] * c / e_t(w).
double ipw_score(const Observation& row, const LogisticPolicy& policy,
                 const PropensityModel& propensity);

/// Policy-weighted augmented score:
/// sum_t pi_t(w) * [1[T=t](c - mu_t(w))/e_t(w) + mu_t(w)].
double aipw_score(const Observation& row, const LogisticPolicy& policy,
                  const PropensityModel& propensity, const OutcomeModel& model);

/// Plug-in average treatment effect n^-1 sum_i mu_1(w_i) - mu_0(w_i).
double plug_in_ate(const OutcomeModel& model, const ObservationalDataset& data);

/// Sample IPW ATE.
double ipw_ate(const ObservationalDataset& data,
               const PropensityModel& propensity);

/// Sample AIPW ATE using the model's predictions as the outcome nuisance.
double aipw_ate(const ObservationalDataset& data,
                const PropensityModel& propensity, const OutcomeModel& model);

/// K-fold sample-split estimate of the downstream policy value, with the
/// decision problem defined over the data's own covariates.
///
/// Per fold: out-of-fold rows are split into two subfolds that fit the
/// propensity and outcome nuisances separately; the response problem is
/// projected onto the fold (selection count scaled by the fold's share of
/// the data) and solved on the fold's predicted costs; the chosen points'
/// policy-weighted scores are summed and rescaled to the full problem.
/// Returns the average over folds.
///
/// Supports feasible sets with selection structure (SelectKOracle, or a
/// MatchingOracle in NodeCost mode).
double crossfit_policy_value(const ObservationalDataset& data,
                             const LogisticPolicy& policy, std::size_t folds,
                             const LinearResponseOracle& oracle,
                             ScoreKind score, EstimatorKind estimator,
                             const BasisSpec& basis, std::uint64_t seed);

std::string to_string(ScoreKind kind);
ScoreKind score_kind_from_string(const std::string& name);

}  // namespace polopt
