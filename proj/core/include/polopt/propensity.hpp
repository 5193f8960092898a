#pragma once

#include <Eigen/Core>

#include "polopt/synthdata.hpp"

namespace polopt {

/// Convergence record shared by the estimation routines.
struct FitReport {
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
};

/// Logistic treatment model P(T=1 | W=w) = sigmoid(gamma0*w + gamma1),
/// with predictions clipped away from 0 and 1.
struct PropensityModel {
  Eigen::Vector2d gamma = Eigen::Vector2d::Zero();  // (slope, intercept)
  double clip_lo = 0.01;
  double clip_hi = 0.99;
  FitReport report;

  /// Unclipped sigmoid(gamma0*w + gamma1).
  double raw_e1(double w) const;
  /// Clipped P(T=1 | W=w).
  double e1(double w) const;
  /// Clipped P(T=0 | W=w) = 1 - raw, clipped.
  double e0(double w) const;
  /// Clipped probability of the observed arm.
  double e(int t, double w) const;
};

/// Maximum-likelihood logistic fit by Newton's method.
/// Throws DegenerateArmError when only one arm is present and
/// EmptyInputError on an empty dataset.
PropensityModel fit_propensity(const ObservationalDataset& data,
                               double clip_lo = 0.01, double clip_hi = 0.99);

double sigmoid(double z);

}  // namespace polopt
