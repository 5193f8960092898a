#include "polopt/propensity.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "polopt/errors.hpp"

namespace polopt {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double PropensityModel::raw_e1(double w) const {
  return sigmoid(gamma[0] * w + gamma[1]);
}

double PropensityModel::e1(double w) const {
  return std::clamp(raw_e1(w), clip_lo, clip_hi);
}

double PropensityModel::e0(double w) const {
  return std::clamp(1.0 - raw_e1(w), clip_lo, clip_hi);
}

double PropensityModel::e(int t, double w) const {
  return t == 1 ? e1(w) : e0(w);
}

PropensityModel fit_propensity(const ObservationalDataset& data,
                               double clip_lo, double clip_hi) {
  if (data.rows.empty()) throw EmptyInputError("fit_propensity: empty dataset");
  if (!(0.0 < clip_lo && clip_lo < clip_hi && clip_hi < 1.0)) {
    throw ConfigError("fit_propensity: need 0 < clip_lo < clip_hi < 1");
  }
  std::size_t n_treated = 0;
  for (const auto& r : data.rows) n_treated += (r.t == 1);
  if (n_treated == 0 || n_treated == data.rows.size()) {
    throw DegenerateArmError(
        "fit_propensity: dataset contains a single treatment arm");
  }

  const double n = static_cast<double>(data.rows.size());
  PropensityModel model;
  model.clip_lo = clip_lo;
  model.clip_hi = clip_hi;

  const int max_iter = 100;
  const double tol = 1e-10;
  for (int iter = 1; iter <= max_iter; ++iter) {
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
    double loglik = 0.0;
    for (const auto& r : data.rows) {
      Eigen::Vector2d x(r.w, 1.0);
      double z = model.gamma.dot(x);
      double p = sigmoid(z);
      grad += (static_cast<double>(r.t) - p) * x;
      hess += p * (1.0 - p) * x * x.transpose();
      loglik += r.t == 1 ? std::log(std::max(p, 1e-300))
                         : std::log(std::max(1.0 - p, 1e-300));
    }
    model.report.iterations = iter;
    model.report.objective = loglik / n;
    model.report.gradient_norm = grad.norm() / n;
    if (model.report.gradient_norm < tol) {
      model.report.converged = true;
      break;
    }
    // Tiny ridge keeps the step defined under near-separation.
    hess += 1e-10 * Eigen::Matrix2d::Identity();
    model.gamma += hess.ldlt().solve(grad);
    if (!model.gamma.allFinite()) {
      throw DivergenceError("fit_propensity: Newton step diverged");
    }
  }
  return model;
}

}  // namespace polopt
