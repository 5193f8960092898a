#pragma once

#include <string>

#include <Eigen/Core>

#include "polopt/basis.hpp"
#include "polopt/propensity.hpp"
#include "polopt/synthdata.hpp"

namespace polopt {

enum class EstimatorKind {
  DirectMethod,             // unweighted least squares
  WeightedDirectMethod,     // inverse-propensity-weighted least squares
  GeneralizedRegressionDR,  // doubly-robust fit with clever covariates
};

/// Fitted conditional-mean model mu_hat_t(w).
struct OutcomeModel {
  EstimatorKind estimator = EstimatorKind::DirectMethod;
  BasisSpec basis;
  Eigen::VectorXd theta;
  // Clever-covariate coefficients (GeneralizedRegressionDR only).
  double eps1 = 0.0;
  double eps0 = 0.0;
  PropensityModel propensity;
  bool has_propensity = false;
  FitReport report;

  /// mu_hat_t(w).  For GeneralizedRegressionDR this includes the
  /// propensity-scaled correction eps_t / e_t(w).
  double predict(int t, double w) const;
};

/// Unweighted least squares of c on the basis.  `init` warm-starts the
/// solver for nonlinear bases (ignored when empty or for linear bases).
OutcomeModel fit_dm(const ObservationalDataset& data, const BasisSpec& basis,
                    const Eigen::VectorXd& init = Eigen::VectorXd());

/// Least squares weighted by 1 / e_{t_i}(w_i).
OutcomeModel fit_wdm(const ObservationalDataset& data, const BasisSpec& basis,
                     const PropensityModel& propensity,
                     const Eigen::VectorXd& init = Eigen::VectorXd());

/// Unweighted least squares of c on the basis augmented with the clever
/// covariates t/e1(w) and (1-t)/e0(w); their coefficients become the
/// prediction corrections eps1, eps0.
OutcomeModel fit_grdr(const ObservationalDataset& data, const BasisSpec& basis,
                      const PropensityModel& propensity,
                      const Eigen::VectorXd& init = Eigen::VectorXd());

/// Dispatch on estimator kind; DirectMethod ignores the propensity model.
OutcomeModel fit_outcome(EstimatorKind estimator,
                         const ObservationalDataset& data,
                         const BasisSpec& basis,
                         const PropensityModel& propensity,
                         const Eigen::VectorXd& init = Eigen::VectorXd());

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& name);

}  // namespace polopt
