#pragma once

#include <functional>

#include <Eigen/Core>

#include "polopt/outcome.hpp"
#include "polopt/synthdata.hpp"

namespace polopt {

/// Estimating equations of a two-step fit: outcome moments g(row; theta,
/// gamma) and first-stage propensity moments h(row; gamma).  Both are
/// just-identified (dim g = dim theta, dim h = dim gamma); gamma_dim may be
/// zero when the propensity is known and held fixed.
struct MomentSystem {
  Eigen::Index theta_dim = 0;
  Eigen::Index gamma_dim = 0;
  std::function<Eigen::VectorXd(const Observation&, const Eigen::VectorXd&,
                                const Eigen::VectorXd&)>
      g;
  std::function<Eigen::VectorXd(const Observation&, const Eigen::VectorXd&)> h;

  // Analytic per-row derivatives (optional; finite differences otherwise).
  bool has_analytic = false;
  std::function<Eigen::MatrixXd(const Observation&, const Eigen::VectorXd&,
                                const Eigen::VectorXd&)>
      dg_dtheta;
  std::function<Eigen::MatrixXd(const Observation&, const Eigen::VectorXd&,
                                const Eigen::VectorXd&)>
      dg_dgamma;
  std::function<Eigen::MatrixXd(const Observation&, const Eigen::VectorXd&)>
      dh_dgamma;
};

struct JacobianSet {
  Eigen::MatrixXd G_theta;  // theta_dim x theta_dim
  Eigen::MatrixXd G_gamma;  // theta_dim x gamma_dim
  Eigen::MatrixXd H;        // gamma_dim x gamma_dim
};

struct SandwichVariance {
  JacobianSet jacobians;
  Eigen::MatrixXd Omega_gg;   // n^-1 sum g_i g_i'
  Eigen::MatrixXd Omega_hh;   // n^-1 sum h_i h_i'
  Eigen::MatrixXd psi;        // rows psi_i' = (-H^-1 h_i)'
  Eigen::MatrixXd V_gamma;    // H^-1 Omega_hh H^-T
  Eigen::MatrixXd V_theta;    // two-term generated-regressor formula
  Eigen::MatrixXd V_stacked;  // full [theta; gamma] block sandwich
  double condition_G_theta = 0.0;
  bool ill_conditioned = false;  // condition number above 1e12
};

enum class JacobianMode { Analytic, FiniteDifference };

/// Sample Jacobians of the mean moments at the fitted parameters.
/// Finite differences are central with step 1e-5.
JacobianSet estimate_jacobians(const MomentSystem& system,
                               const ObservationalDataset& data,
                               const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& gamma, JacobianMode mode);

/// Sandwich variance of sqrt(n)*(params_hat - params): the two-term
/// theta formula, the first-stage V_gamma, and the full stacked block form
/// (which must agree with the two-term formula on the theta block).
SandwichVariance stacked_variance(const MomentSystem& system,
                                  const ObservationalDataset& data,
                                  const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& gamma,
                                  const JacobianSet& jacobians);

/// Moment system matching a fitted model's estimator kind.  Analytic
/// derivatives are available for linear-in-parameters bases.
MomentSystem moment_system_for(const OutcomeModel& model);

/// Asymptotic covariance of the model's stacked parameter vector
/// [theta, (eps1, eps0), gamma], for the Gaussian replicate strategy.
Eigen::MatrixXd estimate_sigma(const OutcomeModel& model,
                               const ObservationalDataset& data);

}  // namespace polopt
