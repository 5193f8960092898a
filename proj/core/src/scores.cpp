#include "polopt/scores.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "polopt/errors.hpp"
#include "polopt/rng.hpp"

namespace polopt {

double ipw_score(const Observation& row, const LogisticPolicy& policy,
                 const PropensityModel& propensity) {
  double p1 = policy.prob_treat(row.w);
  double pi_obs = row.t == 1 ? p1 : 1.0 - p1;
  return pi_obs * row.c / propensity.e(row.t, row.w);
}

double aipw_score(const Observation& row, const LogisticPolicy& policy,
                  const PropensityModel& propensity, const OutcomeModel& model) {
  double p1 = policy.prob_treat(row.w);
  double mu1 = model.predict(1, row.w);
  double mu0 = model.predict(0, row.w);
  double mu_obs = row.t == 1 ? mu1 : mu0;
  double pi_obs = row.t == 1 ? p1 : 1.0 - p1;
  double augmentation = p1 * mu1 + (1.0 - p1) * mu0;
  return pi_obs * (row.c - mu_obs) / propensity.e(row.t, row.w) + augmentation;
}

double plug_in_ate(const OutcomeModel& model, const ObservationalDataset& data) {
  if (data.rows.empty()) throw EmptyInputError("plug_in_ate: empty dataset");
  double sum = 0.0;
  for (const auto& r : data.rows) {
    sum += model.predict(1, r.w) - model.predict(0, r.w);
  }
  return sum / static_cast<double>(data.rows.size());
}

double ipw_ate(const ObservationalDataset& data,
               const PropensityModel& propensity) {
  if (data.rows.empty()) throw EmptyInputError("ipw_ate: empty dataset");
  double sum = 0.0;
  for (const auto& r : data.rows) {
    sum += r.t == 1 ? r.c / propensity.e1(r.w) : -r.c / propensity.e0(r.w);
  }
  return sum / static_cast<double>(data.rows.size());
}

double aipw_ate(const ObservationalDataset& data,
                const PropensityModel& propensity, const OutcomeModel& model) {
  if (data.rows.empty()) throw EmptyInputError("aipw_ate: empty dataset");
  double sum = 0.0;
  for (const auto& r : data.rows) {
    double mu1 = model.predict(1, r.w);
    double mu0 = model.predict(0, r.w);
    double resid_term = r.t == 1 ? (r.c - mu1) / propensity.e1(r.w)
                                 : -(r.c - mu0) / propensity.e0(r.w);
    sum += mu1 - mu0 + resid_term;
  }
  return sum / static_cast<double>(data.rows.size());
}

namespace {

/// Number of selected units in a selection-structured feasible set.
std::size_t selection_count(const LinearResponseOracle& oracle) {
  if (const auto* sel = dynamic_cast<const SelectKOracle*>(&oracle)) {
    return sel->k();
  }
  if (const auto* match = dynamic_cast<const MatchingOracle*>(&oracle)) {
    if (match->instance().cost_mode == CostMode::NodeCost) {
      return match->instance().m_right;
    }
  }
  throw ConfigError(
      "crossfit_policy_value: feasible set does not support fold projection "
      "(need SelectKOracle or a NodeCost MatchingOracle)");
}

ObservationalDataset subset(const ObservationalDataset& data,
                            const std::vector<std::size_t>& idx) {
  ObservationalDataset out;
  out.rows.reserve(idx.size());
  for (std::size_t i : idx) out.rows.push_back(data.rows[i]);
  return out;
}

}  // namespace

double crossfit_policy_value(const ObservationalDataset& data,
                             const LogisticPolicy& policy, std::size_t folds,
                             const LinearResponseOracle& oracle,
                             ScoreKind score, EstimatorKind estimator,
                             const BasisSpec& basis, std::uint64_t seed) {
  const std::size_t n = data.rows.size();
  if (n == 0) throw EmptyInputError("crossfit_policy_value: empty dataset");
  if (folds < 2) throw ConfigError("crossfit_policy_value: need folds >= 2");
  if (oracle.dimension() != n) {
    throw ConfigError(
        "crossfit_policy_value: oracle dimension must equal the sample size");
  }
  const std::size_t m_select = selection_count(oracle);

  // Seeded uniform permutation, chunked into near-equal folds.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RandomStream shuffle(seed, "crossfit-folds");
  for (std::size_t i = n - 1; i > 0; --i) {
    std::size_t j = shuffle.uniform_int(i, i + 1);
    std::swap(perm[i], perm[j]);
  }

  double total = 0.0;
  for (std::size_t k = 0; k < folds; ++k) {
    std::vector<std::size_t> fold_idx, nuis_e_idx, nuis_mu_idx;
    std::size_t out_pos = 0;
    for (std::size_t pos = 0; pos < n; ++pos) {
      if (pos % folds == k) {
        fold_idx.push_back(perm[pos]);
      } else {
        // Alternate out-of-fold rows between the two nuisance subfolds.
        (out_pos++ % 2 == 0 ? nuis_e_idx : nuis_mu_idx).push_back(perm[pos]);
      }
    }
    ObservationalDataset fold = subset(data, fold_idx);
    ObservationalDataset nuis_e = subset(data, nuis_e_idx);
    ObservationalDataset nuis_mu = subset(data, nuis_mu_idx);
    if (nuis_e.rows.size() < 3 || nuis_mu.rows.size() < basis.dim() + 2 ||
        fold.rows.empty()) {
      throw InsufficientFoldError(
          "crossfit_policy_value: a fold is too small to fit the nuisances");
    }

    PropensityModel e_hat;
    OutcomeModel mu_hat;
    try {
      e_hat = fit_propensity(nuis_e);
      mu_hat = fit_outcome(estimator, nuis_mu, basis, e_hat);
    } catch (const DegenerateArmError&) {
      throw InsufficientFoldError(
          "crossfit_policy_value: a nuisance subfold has a single arm");
    }

    // Projected selection count for this fold.
    std::size_t k_fold = (m_select * fold.rows.size()) / n;
    if (k_fold == 0) k_fold = 1;
    if (k_fold > fold.rows.size()) k_fold = fold.rows.size();

    // Decision rule: rank fold points by out-of-fold predicted cost.
    std::vector<double> pred_cost(fold.rows.size());
    for (std::size_t i = 0; i < fold.rows.size(); ++i) {
      pred_cost[i] = policy_induced_mu(mu_hat, policy, fold.rows[i].w);
    }
    std::vector<std::size_t> order(fold.rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (pred_cost[a] != pred_cost[b]) return pred_cost[a] < pred_cost[b];
      return a < b;
    });

    // Evaluate the selected points with honest scores; rescale the fold's
    // partial sum to the full problem size.
    double fold_sum = 0.0;
    for (std::size_t j = 0; j < k_fold; ++j) {
      const Observation& row = fold.rows[order[j]];
      fold_sum += score == ScoreKind::IPW
                      ? ipw_score(row, policy, e_hat)
                      : aipw_score(row, policy, e_hat, mu_hat);
    }
    total += fold_sum * static_cast<double>(m_select) /
             static_cast<double>(k_fold);
  }
  return total / static_cast<double>(folds);
}

std::string to_string(ScoreKind kind) {
  return kind == ScoreKind::IPW ? "ipw" : "aipw";
}

ScoreKind score_kind_from_string(const std::string& name) {
  if (name == "ipw") return ScoreKind::IPW;
  if (name == "aipw") return ScoreKind::AIPW;
  throw ConfigError("unknown score kind: " + name);
}

}  // namespace polopt
