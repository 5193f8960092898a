#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace polopt {

/// Outcome-regression function classes.
///
/// WellSpecified and MisSpecified are linear in parameters;
/// ExponentialCurve matches the exponential data-generating family and is
/// nonlinear in its rate parameters.
enum class BasisKind { WellSpecified, MisSpecified, Custom, ExponentialCurve };

/// Single feature w^w_pow * t^t_pow.
struct Monomial {
  int w_pow = 0;
  int t_pow = 0;
};

struct BasisSpec {
  BasisKind kind = BasisKind::WellSpecified;
  std::vector<Monomial> features;  // populated for all monomial kinds

  /// Full quadratic basis (1, w, t, w^2, w*t); t^2 coincides with t for
  /// binary treatment and is folded into the treatment main effect.
  static BasisSpec well_specified();
  /// Reduced basis (1, w, t, w*t): affine in w within each arm, missing
  /// the curvature terms of the data-generating process.
  static BasisSpec mis_specified();
  static BasisSpec custom(std::vector<Monomial> features);
  /// theta = [a1, a2, b1, b2, c1, c2] in
  /// a1 + a2*exp(b1 + b2*w) + c1*t + c2*t*w^2.
  static BasisSpec exponential_curve();

  std::size_t dim() const;
  bool linear_in_parameters() const;

  /// Model mean mu(t, w; theta).
  double mean(const Eigen::VectorXd& theta, int t, double w) const;

  /// d mean / d theta at (t, w).  For linear kinds this is the feature
  /// vector and does not depend on theta.
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta, int t, double w) const;

  /// Feature vector of a linear-in-parameters basis; throws for
  /// ExponentialCurve.
  Eigen::VectorXd features_at(int t, double w) const;

  void validate() const;
};

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

}  // namespace polopt
