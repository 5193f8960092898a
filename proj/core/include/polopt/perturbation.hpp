#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "polopt/outcome.hpp"
#include "polopt/policy.hpp"
#include "polopt/response.hpp"
#include "polopt/synthdata.hpp"

namespace polopt {

enum class ReplicateStrategy { ParametricBootstrap, GaussianVariance };

struct PerturbationConfig {
  double h = 2.0;
  std::size_t s = 20;
  ReplicateStrategy strategy = ReplicateStrategy::ParametricBootstrap;
  std::uint64_t seed = 0;

  void validate() const;
};

/// How to (re)fit the nuisance models on a resample.
struct FitRecipe {
  EstimatorKind estimator = EstimatorKind::DirectMethod;
  BasisSpec basis;
  double clip_lo = 0.01;
  double clip_hi = 0.99;
  // Optional warm start for nonlinear bases; small resamples can otherwise
  // send the curve fit into a divergent basin.
  Eigen::VectorXd theta_init;
};

/// Output of the finite-difference debiasing of the plug-in value.
struct DebiasedEstimate {
  double v0 = 0.0;                       // plug-in value of the point fit
  std::vector<double> replicate_values;  // one inflated-noise value per replicate
  double rho = 0.0;                      // v0 + (v0 - mean(replicates)) / h
  std::vector<Eigen::VectorXd> replicate_params;  // stacked [theta,(eps),gamma]
};

/// Joint refit of propensity + outcome on the full dataset.
OutcomeModel fit_recipe(const FitRecipe& recipe, const ObservationalDataset& data);

/// Stacked parameter vector [theta, eps1, eps0 (doubly-robust only), gamma].
Eigen::VectorXd pack_params(const OutcomeModel& model);

/// Model with the prototype's structure and the given stacked parameters.
OutcomeModel unpack_params(const OutcomeModel& prototype,
                           const Eigen::VectorXd& params);

/// s models, each jointly refit on an independent with-replacement resample
/// of size floor(N / (1+h)^2): replicate parameters carry noise inflated by
/// (1+h) relative to the point fit.
std::vector<OutcomeModel> gen_replicates_bootstrap(
    const ObservationalDataset& data, const FitRecipe& recipe, double h,
    std::size_t s, std::uint64_t seed);

/// s stacked parameter draws theta_hat + delta_j,
/// delta_j ~ N(0, ((1+h)^2 - 1)/N * Sigma), via a symmetric square root.
std::vector<Eigen::VectorXd> gen_replicates_gaussian(
    const Eigen::VectorXd& params_hat, const Eigen::MatrixXd& Sigma,
    std::size_t N, double h, std::size_t s, std::uint64_t seed);

/// Gaussian-strategy replicates materialized as models.
std::vector<OutcomeModel> gaussian_replicate_models(
    const OutcomeModel& fitted, const Eigen::MatrixXd& Sigma, std::size_t N,
    double h, std::size_t s, std::uint64_t seed);

/// Finite-difference extrapolation over the replicate values.
DebiasedEstimate debias(const LogisticPolicy& policy, const OutcomeModel& model0,
                        const std::vector<OutcomeModel>& replicates,
                        const ContextSet& contexts,
                        const LinearResponseOracle& oracle, double h);

/// Downstream optimum under the true outcome means; reference value for
/// every error metric.
double oracle_policy_value(const LogisticPolicy& policy,
                           const OutcomeSpec& truth, const ContextSet& contexts,
                           const LinearResponseOracle& oracle);

}  // namespace polopt
