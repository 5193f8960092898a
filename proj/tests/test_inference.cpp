#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "polopt/errors.hpp"
#include "polopt/inference.hpp"
#include "polopt/outcome.hpp"
#include "polopt/perturbation.hpp"
#include "polopt/propensity.hpp"
#include "polopt/synthdata.hpp"

using namespace polopt;

TEST_SUITE_BEGIN("inference");

namespace {

ObservationalDataset reference_data(std::size_t n, std::uint64_t seed) {
  return gen_dataset(OutcomeSpec::reference_polynomial(), BehaviorPolicySpec{},
                     n, seed);
}

Eigen::VectorXd stacked_theta(const OutcomeModel& model,
                              const MomentSystem& system) {
  Eigen::VectorXd theta(system.theta_dim);
  theta.head(model.theta.size()) = model.theta;
  if (model.estimator == EstimatorKind::GeneralizedRegressionDR) {
    theta[model.theta.size()] = model.eps1;
    theta[model.theta.size() + 1] = model.eps0;
  }
  return theta;
}

Eigen::VectorXd gamma_of(const OutcomeModel& model,
                         const MomentSystem& system) {
  return system.gamma_dim > 0 ? Eigen::VectorXd(model.propensity.gamma)
                              : Eigen::VectorXd(0);
}

}  // namespace

TEST_CASE("the unweighted sandwich matches the closed form") {
  // For ordinary least squares, V = (X'X/n)^-1 (X'diag(r^2)X/n) (X'X/n)^-1.
  ObservationalDataset data = reference_data(400, 101);
  OutcomeModel model = fit_dm(data, BasisSpec::well_specified());
  MomentSystem system = moment_system_for(model);
  JacobianSet J = estimate_jacobians(system, data, model.theta,
                                     Eigen::VectorXd(0), JacobianMode::Analytic);
  SandwichVariance sv =
      stacked_variance(system, data, model.theta, Eigen::VectorXd(0), J);

  const Eigen::Index p = model.theta.size();
  const double n = static_cast<double>(data.rows.size());
  Eigen::MatrixXd XtX = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
  for (const auto& row : data.rows) {
    Eigen::VectorXd x = model.basis.features_at(row.t, row.w);
    double r = row.c - x.dot(model.theta);
    XtX += x * x.transpose();
    meat += r * r * x * x.transpose();
  }
  XtX /= n;
  meat /= n;
  Eigen::MatrixXd bread = XtX.inverse();
  Eigen::MatrixXd closed = bread * meat * bread.transpose();

  CHECK((sv.V_theta - closed).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((J.G_theta + XtX).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("analytic and finite-difference jacobians agree") {
  ObservationalDataset data = reference_data(500, 102);
  PropensityModel propensity = fit_propensity(data);
  for (EstimatorKind est :
       {EstimatorKind::DirectMethod, EstimatorKind::WeightedDirectMethod,
        EstimatorKind::GeneralizedRegressionDR}) {
    OutcomeModel model = fit_outcome(est, data, BasisSpec::well_specified(),
                                     propensity);
    MomentSystem system = moment_system_for(model);
    REQUIRE(system.has_analytic);
    Eigen::VectorXd theta = stacked_theta(model, system);
    Eigen::VectorXd gamma = gamma_of(model, system);
    JacobianSet a =
        estimate_jacobians(system, data, theta, gamma, JacobianMode::Analytic);
    JacobianSet f = estimate_jacobians(system, data, theta, gamma,
                                       JacobianMode::FiniteDifference);
    CHECK((a.G_theta - f.G_theta).cwiseAbs().maxCoeff() < 1e-4);
    if (system.gamma_dim > 0) {
      CHECK((a.G_gamma - f.G_gamma).cwiseAbs().maxCoeff() < 1e-4);
      CHECK((a.H - f.H).cwiseAbs().maxCoeff() < 1e-4);
    }
  }
}

TEST_CASE("variance matrices are symmetric positive semidefinite") {
  ObservationalDataset data = reference_data(600, 103);
  PropensityModel propensity = fit_propensity(data);
  for (EstimatorKind est :
       {EstimatorKind::DirectMethod, EstimatorKind::WeightedDirectMethod,
        EstimatorKind::GeneralizedRegressionDR}) {
    OutcomeModel model =
        fit_outcome(est, data, BasisSpec::mis_specified(), propensity);
    MomentSystem system = moment_system_for(model);
    Eigen::VectorXd theta = stacked_theta(model, system);
    Eigen::VectorXd gamma = gamma_of(model, system);
    JacobianSet J =
        estimate_jacobians(system, data, theta, gamma, JacobianMode::Analytic);
    SandwichVariance sv = stacked_variance(system, data, theta, gamma, J);

    for (const Eigen::MatrixXd& V : {sv.V_theta, sv.V_stacked}) {
      CHECK((V - V.transpose()).cwiseAbs().maxCoeff() < 1e-10);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(V);
      CHECK(eig.eigenvalues().minCoeff() >
            -1e-8 * std::max(1.0, V.cwiseAbs().maxCoeff()));
    }
    CHECK_FALSE(sv.ill_conditioned);
  }
}

TEST_CASE("the stacked form reproduces the two-term theta block") {
  ObservationalDataset data = reference_data(500, 104);
  PropensityModel propensity = fit_propensity(data);
  OutcomeModel model =
      fit_outcome(EstimatorKind::GeneralizedRegressionDR, data,
                  BasisSpec::well_specified(), propensity);
  MomentSystem system = moment_system_for(model);
  Eigen::VectorXd theta = stacked_theta(model, system);
  Eigen::VectorXd gamma = gamma_of(model, system);
  JacobianSet J =
      estimate_jacobians(system, data, theta, gamma, JacobianMode::Analytic);
  SandwichVariance sv = stacked_variance(system, data, theta, gamma, J);

  const Eigen::Index p = system.theta_dim;
  CHECK((sv.V_stacked.topLeftCorner(p, p) - sv.V_theta).cwiseAbs().maxCoeff() <
        1e-8);
  CHECK((sv.V_stacked.bottomRightCorner(2, 2) - sv.V_gamma)
            .cwiseAbs()
            .maxCoeff() < 1e-8);
}

TEST_CASE("rescaling the outcome rescales the variance quadratically") {
  ObservationalDataset data = reference_data(300, 105);
  ObservationalDataset scaled = data;
  for (auto& row : scaled.rows) row.c *= 3.0;

  auto variance_of = [](const ObservationalDataset& d) {
    OutcomeModel model = fit_dm(d, BasisSpec::well_specified());
    MomentSystem system = moment_system_for(model);
    JacobianSet J = estimate_jacobians(system, d, model.theta,
                                       Eigen::VectorXd(0), JacobianMode::Analytic);
    return stacked_variance(system, d, model.theta, Eigen::VectorXd(0), J)
        .V_theta;
  };
  Eigen::MatrixXd V = variance_of(data);
  Eigen::MatrixXd V3 = variance_of(scaled);
  CHECK((V3 - 9.0 * V).cwiseAbs().maxCoeff() < 1e-8 * V3.cwiseAbs().maxCoeff());
}

TEST_CASE("estimate_sigma covers the stacked parameter vector") {
  ObservationalDataset data = reference_data(400, 106);
  PropensityModel propensity = fit_propensity(data);

  OutcomeModel dm = fit_dm(data, BasisSpec::well_specified());
  CHECK(estimate_sigma(dm, data).rows() == 5);

  OutcomeModel wdm = fit_wdm(data, BasisSpec::well_specified(), propensity);
  CHECK(estimate_sigma(wdm, data).rows() == 7);  // theta + gamma

  OutcomeModel grdr = fit_grdr(data, BasisSpec::well_specified(), propensity);
  Eigen::MatrixXd sigma = estimate_sigma(grdr, data);
  CHECK(sigma.rows() == 9);  // theta + (eps1, eps0) + gamma
  CHECK(sigma.rows() == pack_params(grdr).size());
}

TEST_CASE("a rank-deficient sample leaves the variance undefined") {
  // Three rows cannot identify five coefficients.
  ObservationalDataset tiny;
  tiny.rows = {{0.1, 0, 4.9}, {-0.3, 1, 2.2}, {0.8, 1, 3.7}};
  BasisSpec basis = BasisSpec::well_specified();
  MomentSystem system = moment_system_for(OutcomeModel{
      EstimatorKind::DirectMethod, basis, Eigen::VectorXd::Zero(5)});
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(5);
  JacobianSet J = estimate_jacobians(system, tiny, theta, Eigen::VectorXd(0),
                                     JacobianMode::Analytic);
  CHECK_THROWS_AS(
      stacked_variance(system, tiny, theta, Eigen::VectorXd(0), J),
      SingularJacobianError);
}

TEST_CASE("inference rejects unusable inputs") {
  ObservationalDataset data = reference_data(100, 107);
  OutcomeModel model = fit_dm(data, BasisSpec::well_specified());
  MomentSystem system = moment_system_for(model);

  CHECK_THROWS_AS(
      estimate_jacobians(system, ObservationalDataset{}, model.theta,
                         Eigen::VectorXd(0), JacobianMode::Analytic),
      EmptyInputError);
  CHECK_THROWS_AS(
      estimate_jacobians(system, data, Eigen::VectorXd::Zero(3),
                         Eigen::VectorXd(0), JacobianMode::Analytic),
      ConfigError);
  CHECK_THROWS_AS(stacked_variance(system, ObservationalDataset{}, model.theta,
                                   Eigen::VectorXd(0), JacobianSet{}),
                  EmptyInputError);

  // The exponential family has no analytic moment derivatives.
  ObservationalDataset expo = gen_dataset(OutcomeSpec::reference_exponential(),
                                          BehaviorPolicySpec{}, 200, 108);
  OutcomeModel curve = fit_dm(expo, BasisSpec::exponential_curve());
  MomentSystem curve_system = moment_system_for(curve);
  CHECK_FALSE(curve_system.has_analytic);
  CHECK_THROWS_AS(
      estimate_jacobians(curve_system, expo, curve.theta, Eigen::VectorXd(0),
                         JacobianMode::Analytic),
      ConfigError);
}

TEST_SUITE_END();
