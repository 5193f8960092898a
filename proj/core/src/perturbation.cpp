#include "polopt/perturbation.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "polopt/errors.hpp"
#include "polopt/rng.hpp"

namespace polopt {

void PerturbationConfig::validate() const {
  if (h <= 0.0) throw ConfigError("PerturbationConfig: h must be > 0");
  if (s == 0) throw ConfigError("PerturbationConfig: s must be >= 1");
}

OutcomeModel fit_recipe(const FitRecipe& recipe, const ObservationalDataset& data) {
  if (recipe.estimator == EstimatorKind::DirectMethod) {
    return fit_dm(data, recipe.basis, recipe.theta_init);
  }
  PropensityModel propensity =
      fit_propensity(data, recipe.clip_lo, recipe.clip_hi);
  return fit_outcome(recipe.estimator, data, recipe.basis, propensity,
                     recipe.theta_init);
}

namespace {
bool has_clever(const OutcomeModel& model) {
  return model.estimator == EstimatorKind::GeneralizedRegressionDR;
}
}  // namespace

Eigen::VectorXd pack_params(const OutcomeModel& model) {
  Eigen::Index p = model.theta.size();
  Eigen::Index extra = has_clever(model) ? 2 : 0;
  Eigen::Index gamma = model.has_propensity ? 2 : 0;
  Eigen::VectorXd params(p + extra + gamma);
  params.head(p) = model.theta;
  if (extra > 0) {
    params[p] = model.eps1;
    params[p + 1] = model.eps0;
  }
  if (gamma > 0) params.tail(2) = model.propensity.gamma;
  return params;
}

OutcomeModel unpack_params(const OutcomeModel& prototype,
                           const Eigen::VectorXd& params) {
  Eigen::Index p = prototype.theta.size();
  Eigen::Index extra = has_clever(prototype) ? 2 : 0;
  Eigen::Index gamma = prototype.has_propensity ? 2 : 0;
  if (params.size() != p + extra + gamma) {
    throw ConfigError("unpack_params: parameter vector has wrong dimension");
  }
  OutcomeModel model = prototype;
  model.theta = params.head(p);
  if (extra > 0) {
    model.eps1 = params[p];
    model.eps0 = params[p + 1];
  }
  if (gamma > 0) model.propensity.gamma = params.tail(2);
  return model;
}

std::vector<OutcomeModel> gen_replicates_bootstrap(
    const ObservationalDataset& data, const FitRecipe& recipe, double h,
    std::size_t s, std::uint64_t seed) {
  if (h <= 0.0) throw ConfigError("gen_replicates_bootstrap: h must be > 0");
  if (s == 0) throw ConfigError("gen_replicates_bootstrap: s must be >= 1");
  const std::size_t n = data.rows.size();
  const double inflate = (1.0 + h) * (1.0 + h);
  const std::size_t resample_n =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) / inflate));
  if (resample_n < recipe.basis.dim() + 2) {
    throw EmptyInputError(
        "gen_replicates_bootstrap: resample size floor(N/(1+h)^2) = " +
        std::to_string(resample_n) + " is too small to fit the recipe");
  }
  RandomStream stream(seed, "bootstrap-resample");
  std::vector<OutcomeModel> replicates;
  replicates.reserve(s);
  for (std::size_t j = 0; j < s; ++j) {
    ObservationalDataset resample;
    resample.rows.reserve(resample_n);
    for (std::size_t i = 0; i < resample_n; ++i) {
      std::size_t idx = stream.uniform_int(j * resample_n + i, n);
      resample.rows.push_back(data.rows[idx]);
    }
    replicates.push_back(fit_recipe(recipe, resample));
  }
  return replicates;
}

std::vector<Eigen::VectorXd> gen_replicates_gaussian(
    const Eigen::VectorXd& params_hat, const Eigen::MatrixXd& Sigma,
    std::size_t N, double h, std::size_t s, std::uint64_t seed) {
  if (h <= 0.0) throw ConfigError("gen_replicates_gaussian: h must be > 0");
  if (s == 0) throw ConfigError("gen_replicates_gaussian: s must be >= 1");
  if (N == 0) throw EmptyInputError("gen_replicates_gaussian: N must be >= 1");
  const Eigen::Index d = params_hat.size();
  if (Sigma.rows() != d || Sigma.cols() != d) {
    throw InvalidCovarianceError(
        "gen_replicates_gaussian: covariance dimension mismatch");
  }
  double scale_ref = std::max(1.0, Sigma.cwiseAbs().maxCoeff());
  if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale_ref) {
    throw InvalidCovarianceError("gen_replicates_gaussian: Sigma not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (Sigma + Sigma.transpose()));
  Eigen::VectorXd evals = eig.eigenvalues();
  if (evals.minCoeff() < -1e-8 * scale_ref) {
    throw InvalidCovarianceError(
        "gen_replicates_gaussian: Sigma not positive semidefinite");
  }
  Eigen::VectorXd sqrt_evals = evals.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd root = eig.eigenvectors() * sqrt_evals.asDiagonal() *
                         eig.eigenvectors().transpose();
  const double noise_scale =
      std::sqrt(((1.0 + h) * (1.0 + h) - 1.0) / static_cast<double>(N));

  RandomStream stream(seed, "gaussian-replicates");
  std::vector<Eigen::VectorXd> replicates;
  replicates.reserve(s);
  for (std::size_t j = 0; j < s; ++j) {
    Eigen::VectorXd z(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      z[i] = stream.normal(j * static_cast<std::size_t>(d) +
                           static_cast<std::size_t>(i));
    }
    replicates.push_back(params_hat + noise_scale * (root * z));
  }
  return replicates;
}

std::vector<OutcomeModel> gaussian_replicate_models(
    const OutcomeModel& fitted, const Eigen::MatrixXd& Sigma, std::size_t N,
    double h, std::size_t s, std::uint64_t seed) {
  auto params = gen_replicates_gaussian(pack_params(fitted), Sigma, N, h, s, seed);
  std::vector<OutcomeModel> models;
  models.reserve(params.size());
  for (const auto& p : params) models.push_back(unpack_params(fitted, p));
  return models;
}

DebiasedEstimate debias(const LogisticPolicy& policy, const OutcomeModel& model0,
                        const std::vector<OutcomeModel>& replicates,
                        const ContextSet& contexts,
                        const LinearResponseOracle& oracle, double h) {
  if (replicates.empty()) throw ConfigError("debias: empty replicate set");
  if (h <= 0.0) throw ConfigError("debias: h must be > 0");
  DebiasedEstimate est;
  est.v0 = plug_in_objective(model0, policy, contexts, oracle).value;
  est.replicate_values.reserve(replicates.size());
  est.replicate_params.reserve(replicates.size());
  double sum = 0.0;
  for (const auto& model : replicates) {
    double v = plug_in_objective(model, policy, contexts, oracle).value;
    est.replicate_values.push_back(v);
    est.replicate_params.push_back(pack_params(model));
    sum += v;
  }
  double mean = sum / static_cast<double>(replicates.size());
  est.rho = est.v0 + (est.v0 - mean) / h;
  return est;
}

double oracle_policy_value(const LogisticPolicy& policy,
                           const OutcomeSpec& truth, const ContextSet& contexts,
                           const LinearResponseOracle& oracle) {
  return true_objective(truth, policy, contexts, oracle).value;
}

}  // namespace polopt
