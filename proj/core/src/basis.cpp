#include "polopt/basis.hpp"

#include <cmath>

#include "polopt/errors.hpp"

namespace polopt {

BasisSpec BasisSpec::well_specified() {
  // t^2 = t for binary treatment, so the quadratic's t^2 column is folded
  // into the treatment main effect to keep the design full-rank; the
  // spanned function class is unchanged.
  return {BasisKind::WellSpecified, {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}}};
}

BasisSpec BasisSpec::mis_specified() {
  return {BasisKind::MisSpecified, {{0, 0}, {1, 0}, {0, 1}, {1, 1}}};
}

BasisSpec BasisSpec::custom(std::vector<Monomial> features) {
  BasisSpec spec{BasisKind::Custom, std::move(features)};
  spec.validate();
  return spec;
}

BasisSpec BasisSpec::exponential_curve() {
  return {BasisKind::ExponentialCurve, {}};
}

void BasisSpec::validate() const {
  if (kind == BasisKind::ExponentialCurve) return;
  if (features.empty()) {
    throw ConfigError("BasisSpec: monomial basis must have >= 1 feature");
  }
  for (const auto& m : features) {
    if (m.w_pow < 0 || m.t_pow < 0) {
      throw ConfigError("BasisSpec: monomial powers must be >= 0");
    }
  }
}

std::size_t BasisSpec::dim() const {
  return kind == BasisKind::ExponentialCurve ? 6 : features.size();
}

bool BasisSpec::linear_in_parameters() const {
  return kind != BasisKind::ExponentialCurve;
}

namespace {
double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}
}  // namespace

Eigen::VectorXd BasisSpec::features_at(int t, double w) const {
  if (!linear_in_parameters()) {
    throw ConfigError("BasisSpec: ExponentialCurve has no fixed features");
  }
  Eigen::VectorXd phi(static_cast<Eigen::Index>(features.size()));
  for (std::size_t j = 0; j < features.size(); ++j) {
    phi[static_cast<Eigen::Index>(j)] =
        ipow(w, features[j].w_pow) * ipow(static_cast<double>(t), features[j].t_pow);
  }
  return phi;
}

double BasisSpec::mean(const Eigen::VectorXd& theta, int t, double w) const {
  if (theta.size() != static_cast<Eigen::Index>(dim())) {
    throw ConfigError("BasisSpec::mean: theta has wrong dimension");
  }
  if (linear_in_parameters()) return features_at(t, w).dot(theta);
  double e = std::exp(theta[2] + theta[3] * w);
  return theta[0] + theta[1] * e + theta[4] * t + theta[5] * t * w * w;
}

Eigen::VectorXd BasisSpec::gradient(const Eigen::VectorXd& theta, int t,
                                    double w) const {
  if (linear_in_parameters()) return features_at(t, w);
  if (theta.size() != 6) {
    throw ConfigError("BasisSpec::gradient: theta has wrong dimension");
  }
  double e = std::exp(theta[2] + theta[3] * w);
  Eigen::VectorXd g(6);
  g << 1.0, e, theta[1] * e, theta[1] * e * w, static_cast<double>(t),
      static_cast<double>(t) * w * w;
  return g;
}

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::WellSpecified:
      return "well_specified";
    case BasisKind::MisSpecified:
      return "mis_specified";
    case BasisKind::Custom:
      return "custom";
    case BasisKind::ExponentialCurve:
      return "exponential_curve";
  }
  throw ConfigError("unknown basis kind");
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "well_specified") return BasisKind::WellSpecified;
  if (name == "mis_specified") return BasisKind::MisSpecified;
  if (name == "custom") return BasisKind::Custom;
  if (name == "exponential_curve") return BasisKind::ExponentialCurve;
  throw ConfigError("unknown basis kind: " + name);
}

}  // namespace polopt
