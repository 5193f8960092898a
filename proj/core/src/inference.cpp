#include "polopt/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "polopt/errors.hpp"
#include "polopt/propensity.hpp"

namespace polopt {

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kCondWarn = 1e12;

struct Pinv {
  Eigen::MatrixXd inv;
  double condition = 0.0;
  bool ill_conditioned = false;
};

Pinv pseudo_inverse(const Eigen::MatrixXd& A, const char* name) {
  Pinv out;
  if (A.size() == 0) {
    out.inv = A;
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  double smax = s[0];
  double smin = s[s.size() - 1];
  if (smax <= 0.0 || smin <= smax * 1e-14) {
    throw SingularJacobianError(std::string(name) +
                                " is singular; variance undefined");
  }
  out.condition = smax / smin;
  out.ill_conditioned = out.condition > kCondWarn;
  out.inv = svd.matrixV() * s.cwiseInverse().asDiagonal() *
            svd.matrixU().transpose();
  return out;
}

Eigen::VectorXd mean_g(const MomentSystem& system,
                       const ObservationalDataset& data,
                       const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& gamma) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(system.theta_dim);
  for (const auto& row : data.rows) acc += system.g(row, theta, gamma);
  return acc / static_cast<double>(data.rows.size());
}

Eigen::VectorXd mean_h(const MomentSystem& system,
                       const ObservationalDataset& data,
                       const Eigen::VectorXd& gamma) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(system.gamma_dim);
  for (const auto& row : data.rows) acc += system.h(row, gamma);
  return acc / static_cast<double>(data.rows.size());
}

}  // namespace

JacobianSet estimate_jacobians(const MomentSystem& system,
                               const ObservationalDataset& data,
                               const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& gamma,
                               JacobianMode mode) {
  if (data.rows.empty()) throw EmptyInputError("estimate_jacobians: empty dataset");
  if (theta.size() != system.theta_dim || gamma.size() != system.gamma_dim) {
    throw ConfigError("estimate_jacobians: parameter dimension mismatch");
  }
  const double n = static_cast<double>(data.rows.size());
  JacobianSet J;
  J.G_theta = Eigen::MatrixXd::Zero(system.theta_dim, system.theta_dim);
  J.G_gamma = Eigen::MatrixXd::Zero(system.theta_dim, system.gamma_dim);
  J.H = Eigen::MatrixXd::Zero(system.gamma_dim, system.gamma_dim);

  if (mode == JacobianMode::Analytic) {
    if (!system.has_analytic) {
      throw ConfigError(
          "estimate_jacobians: no analytic derivatives for this system");
    }
    for (const auto& row : data.rows) {
      J.G_theta += system.dg_dtheta(row, theta, gamma);
      if (system.gamma_dim > 0) {
        J.G_gamma += system.dg_dgamma(row, theta, gamma);
        J.H += system.dh_dgamma(row, gamma);
      }
    }
    J.G_theta /= n;
    J.G_gamma /= n;
    J.H /= n;
    return J;
  }

  for (Eigen::Index k = 0; k < system.theta_dim; ++k) {
    Eigen::VectorXd hi = theta, lo = theta;
    hi[k] += kFdStep;
    lo[k] -= kFdStep;
    J.G_theta.col(k) =
        (mean_g(system, data, hi, gamma) - mean_g(system, data, lo, gamma)) /
        (2.0 * kFdStep);
  }
  for (Eigen::Index k = 0; k < system.gamma_dim; ++k) {
    Eigen::VectorXd hi = gamma, lo = gamma;
    hi[k] += kFdStep;
    lo[k] -= kFdStep;
    J.G_gamma.col(k) =
        (mean_g(system, data, theta, hi) - mean_g(system, data, theta, lo)) /
        (2.0 * kFdStep);
    J.H.col(k) = (mean_h(system, data, hi) - mean_h(system, data, lo)) /
                 (2.0 * kFdStep);
  }
  return J;
}

SandwichVariance stacked_variance(const MomentSystem& system,
                                  const ObservationalDataset& data,
                                  const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& gamma,
                                  const JacobianSet& jacobians) {
  if (data.rows.empty()) throw EmptyInputError("stacked_variance: empty dataset");
  const std::size_t n = data.rows.size();
  const Eigen::Index p = system.theta_dim;
  const Eigen::Index q = system.gamma_dim;

  SandwichVariance sv;
  sv.jacobians = jacobians;
  sv.Omega_gg = Eigen::MatrixXd::Zero(p, p);
  sv.Omega_hh = Eigen::MatrixXd::Zero(q, q);
  Eigen::MatrixXd h_rows(n, q);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd gi = system.g(data.rows[i], theta, gamma);
    sv.Omega_gg += gi * gi.transpose();
    if (q > 0) {
      Eigen::VectorXd hi = system.h(data.rows[i], gamma);
      sv.Omega_hh += hi * hi.transpose();
      h_rows.row(static_cast<Eigen::Index>(i)) = hi.transpose();
    }
  }
  sv.Omega_gg /= static_cast<double>(n);
  sv.Omega_hh /= static_cast<double>(n);

  Pinv Gt_inv = pseudo_inverse(jacobians.G_theta, "G_theta");
  sv.condition_G_theta = Gt_inv.condition;
  sv.ill_conditioned = Gt_inv.ill_conditioned;

  if (q > 0) {
    Pinv H_inv = pseudo_inverse(jacobians.H, "H");
    sv.ill_conditioned = sv.ill_conditioned || H_inv.ill_conditioned;
    sv.psi = -(H_inv.inv * h_rows.transpose()).transpose();
    sv.V_gamma = H_inv.inv * sv.Omega_hh * H_inv.inv.transpose();
  } else {
    sv.psi = Eigen::MatrixXd(n, 0);
    sv.V_gamma = Eigen::MatrixXd(0, 0);
  }

  sv.V_theta = Gt_inv.inv * sv.Omega_gg * Gt_inv.inv.transpose();
  if (q > 0) {
    sv.V_theta += Gt_inv.inv * jacobians.G_gamma * sv.V_gamma *
                  jacobians.G_gamma.transpose() * Gt_inv.inv.transpose();
  }
  sv.V_theta = 0.5 * (sv.V_theta + sv.V_theta.transpose()).eval();

  // Full stacked sandwich over [theta; gamma], block-diagonal second
  // moments as in the two-term formula; its theta block must reproduce
  // V_theta exactly.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(p + q, p + q);
  J.topLeftCorner(p, p) = jacobians.G_theta;
  if (q > 0) {
    J.topRightCorner(p, q) = jacobians.G_gamma;
    J.bottomRightCorner(q, q) = jacobians.H;
  }
  Eigen::MatrixXd Omega = Eigen::MatrixXd::Zero(p + q, p + q);
  Omega.topLeftCorner(p, p) = sv.Omega_gg;
  if (q > 0) Omega.bottomRightCorner(q, q) = sv.Omega_hh;
  Pinv J_inv = pseudo_inverse(J, "stacked Jacobian");
  sv.V_stacked = J_inv.inv * Omega * J_inv.inv.transpose();
  sv.V_stacked = 0.5 * (sv.V_stacked + sv.V_stacked.transpose()).eval();
  return sv;
}

namespace {

Eigen::Vector2d propensity_score_x(const Observation& row) {
  return {row.w, 1.0};
}

/// Gradient of the clipped e_t(w; gamma) in gamma (zero where the clip
/// binds).
Eigen::Vector2d de_dgamma(const Observation& row, const Eigen::VectorXd& gamma,
                          int t, double clip_lo, double clip_hi) {
  double praw = sigmoid(gamma[0] * row.w + gamma[1]);
  double et_raw = t == 1 ? praw : 1.0 - praw;
  if (et_raw < clip_lo || et_raw > clip_hi) return Eigen::Vector2d::Zero();
  double sign = t == 1 ? 1.0 : -1.0;
  return sign * praw * (1.0 - praw) * propensity_score_x(row);
}

double e_clipped(const Observation& row, const Eigen::VectorXd& gamma, int t,
                 double clip_lo, double clip_hi) {
  double praw = sigmoid(gamma[0] * row.w + gamma[1]);
  double et = t == 1 ? praw : 1.0 - praw;
  return std::clamp(et, clip_lo, clip_hi);
}

void attach_propensity_moments(MomentSystem& system) {
  system.h = [](const Observation& row, const Eigen::VectorXd& gamma) {
    double p = sigmoid(gamma[0] * row.w + gamma[1]);
    return Eigen::VectorXd((static_cast<double>(row.t) - p) *
                           propensity_score_x(row));
  };
  system.dh_dgamma = [](const Observation& row, const Eigen::VectorXd& gamma) {
    double p = sigmoid(gamma[0] * row.w + gamma[1]);
    Eigen::Vector2d x = propensity_score_x(row);
    return Eigen::MatrixXd(-p * (1.0 - p) * x * x.transpose());
  };
}

MomentSystem dm_system(const BasisSpec& basis) {
  MomentSystem system;
  system.theta_dim = static_cast<Eigen::Index>(basis.dim());
  system.gamma_dim = 0;
  system.g = [basis](const Observation& row, const Eigen::VectorXd& theta,
                     const Eigen::VectorXd&) {
    Eigen::VectorXd grad = basis.gradient(theta, row.t, row.w);
    return Eigen::VectorXd((row.c - basis.mean(theta, row.t, row.w)) * grad);
  };
  system.h = [](const Observation&, const Eigen::VectorXd&) {
    return Eigen::VectorXd(0);
  };
  system.has_analytic = basis.linear_in_parameters();
  if (system.has_analytic) {
    system.dg_dtheta = [basis](const Observation& row,
                               const Eigen::VectorXd& theta,
                               const Eigen::VectorXd&) {
      Eigen::VectorXd grad = basis.gradient(theta, row.t, row.w);
      return Eigen::MatrixXd(-grad * grad.transpose());
    };
  }
  return system;
}

MomentSystem wdm_system(const BasisSpec& basis, double clip_lo, double clip_hi) {
  MomentSystem system;
  system.theta_dim = static_cast<Eigen::Index>(basis.dim());
  system.gamma_dim = 2;
  attach_propensity_moments(system);
  system.g = [basis, clip_lo, clip_hi](const Observation& row,
                                       const Eigen::VectorXd& theta,
                                       const Eigen::VectorXd& gamma) {
    double e = e_clipped(row, gamma, row.t, clip_lo, clip_hi);
    Eigen::VectorXd grad = basis.gradient(theta, row.t, row.w);
    return Eigen::VectorXd((row.c - basis.mean(theta, row.t, row.w)) / e * grad);
  };
  system.has_analytic = basis.linear_in_parameters();
  if (system.has_analytic) {
    system.dg_dtheta = [basis, clip_lo, clip_hi](const Observation& row,
                                                 const Eigen::VectorXd& theta,
                                                 const Eigen::VectorXd& gamma) {
      double e = e_clipped(row, gamma, row.t, clip_lo, clip_hi);
      Eigen::VectorXd grad = basis.gradient(theta, row.t, row.w);
      return Eigen::MatrixXd(-grad * grad.transpose() / e);
    };
    system.dg_dgamma = [basis, clip_lo, clip_hi](const Observation& row,
                                                 const Eigen::VectorXd& theta,
                                                 const Eigen::VectorXd& gamma) {
      double e = e_clipped(row, gamma, row.t, clip_lo, clip_hi);
      Eigen::Vector2d de = de_dgamma(row, gamma, row.t, clip_lo, clip_hi);
      Eigen::VectorXd grad = basis.gradient(theta, row.t, row.w);
      double resid = row.c - basis.mean(theta, row.t, row.w);
      // d(1/e)/dgamma = -de/e^2.
      return Eigen::MatrixXd(resid * grad * (-de / (e * e)).transpose());
    };
  }
  return system;
}

MomentSystem grdr_system(const BasisSpec& basis, double clip_lo, double clip_hi) {
  const Eigen::Index p = static_cast<Eigen::Index>(basis.dim());
  MomentSystem system;
  system.theta_dim = p + 2;  // [theta, eps1, eps0]
  system.gamma_dim = 2;
  attach_propensity_moments(system);

  auto clever = [clip_lo, clip_hi](const Observation& row,
                                   const Eigen::VectorXd& gamma) {
    double e1 = e_clipped(row, gamma, 1, clip_lo, clip_hi);
    double e0 = e_clipped(row, gamma, 0, clip_lo, clip_hi);
    return Eigen::Vector2d(static_cast<double>(row.t) / e1,
                           static_cast<double>(1 - row.t) / e0);
  };
  auto regressor = [basis, clever, p](const Observation& row,
                                      const Eigen::VectorXd& params,
                                      const Eigen::VectorXd& gamma) {
    Eigen::VectorXd a(p + 2);
    a.head(p) = basis.gradient(params.head(p), row.t, row.w);
    a.tail(2) = clever(row, gamma);
    return a;
  };
  auto residual = [basis, clever, p](const Observation& row,
                                     const Eigen::VectorXd& params,
                                     const Eigen::VectorXd& gamma) {
    Eigen::Vector2d cc = clever(row, gamma);
    return row.c - basis.mean(params.head(p), row.t, row.w) -
           params[p] * cc[0] - params[p + 1] * cc[1];
  };

  system.g = [regressor, residual](const Observation& row,
                                   const Eigen::VectorXd& params,
                                   const Eigen::VectorXd& gamma) {
    return Eigen::VectorXd(residual(row, params, gamma) *
                           regressor(row, params, gamma));
  };
  system.has_analytic = basis.linear_in_parameters();
  if (system.has_analytic) {
    system.dg_dtheta = [regressor](const Observation& row,
                                   const Eigen::VectorXd& params,
                                   const Eigen::VectorXd& gamma) {
      Eigen::VectorXd a = regressor(row, params, gamma);
      return Eigen::MatrixXd(-a * a.transpose());
    };
    system.dg_dgamma = [regressor, residual, clip_lo, clip_hi, p](
                           const Observation& row, const Eigen::VectorXd& params,
                           const Eigen::VectorXd& gamma) {
      double e1 = e_clipped(row, gamma, 1, clip_lo, clip_hi);
      double e0 = e_clipped(row, gamma, 0, clip_lo, clip_hi);
      Eigen::Vector2d de1 = de_dgamma(row, gamma, 1, clip_lo, clip_hi);
      Eigen::Vector2d de0 = de_dgamma(row, gamma, 0, clip_lo, clip_hi);
      // d(T/e1)/dgamma and d((1-T)/e0)/dgamma.
      Eigen::Vector2d dc1 = -static_cast<double>(row.t) / (e1 * e1) * de1;
      Eigen::Vector2d dc0 = -static_cast<double>(1 - row.t) / (e0 * e0) * de0;
      Eigen::MatrixXd da = Eigen::MatrixXd::Zero(p + 2, 2);
      da.row(p) = dc1.transpose();
      da.row(p + 1) = dc0.transpose();
      Eigen::Vector2d dr = -params[p] * dc1 - params[p + 1] * dc0;
      Eigen::VectorXd a = regressor(row, params, gamma);
      double r = residual(row, params, gamma);
      return Eigen::MatrixXd(r * da + a * dr.transpose());
    };
  }
  return system;
}

}  // namespace

MomentSystem moment_system_for(const OutcomeModel& model) {
  switch (model.estimator) {
    case EstimatorKind::DirectMethod:
      return dm_system(model.basis);
    case EstimatorKind::WeightedDirectMethod:
      return wdm_system(model.basis, model.propensity.clip_lo,
                        model.propensity.clip_hi);
    case EstimatorKind::GeneralizedRegressionDR:
      return grdr_system(model.basis, model.propensity.clip_lo,
                         model.propensity.clip_hi);
  }
  throw ConfigError("unknown estimator kind");
}

Eigen::MatrixXd estimate_sigma(const OutcomeModel& model,
                               const ObservationalDataset& data) {
  MomentSystem system = moment_system_for(model);
  Eigen::VectorXd theta(system.theta_dim);
  theta.head(model.theta.size()) = model.theta;
  if (model.estimator == EstimatorKind::GeneralizedRegressionDR) {
    theta[model.theta.size()] = model.eps1;
    theta[model.theta.size() + 1] = model.eps0;
  }
  Eigen::VectorXd gamma =
      system.gamma_dim > 0 ? Eigen::VectorXd(model.propensity.gamma)
                           : Eigen::VectorXd(0);
  JacobianSet J = estimate_jacobians(
      system, data, theta, gamma,
      system.has_analytic ? JacobianMode::Analytic
                          : JacobianMode::FiniteDifference);
  SandwichVariance sv = stacked_variance(system, data, theta, gamma, J);
  return system.gamma_dim > 0 ? sv.V_stacked : sv.V_theta;
}

}  // namespace polopt
