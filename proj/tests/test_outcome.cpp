#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "polopt/errors.hpp"
#include "polopt/outcome.hpp"
#include "polopt/propensity.hpp"
#include "polopt/synthdata.hpp"
#include "test_data.hpp"

using namespace polopt;

TEST_SUITE_BEGIN("outcome");

TEST_CASE("unweighted fit solves the normal equations") {
  // Reference solution computed with an independent linear-algebra package
  // on the shared eight-row dataset (quadratic basis).
  OutcomeModel model =
      fit_dm(polopt_test::eight_rows(), BasisSpec::well_specified());
  Eigen::VectorXd expected(5);
  expected << 6.043066817536168, 0.3966215591839959, -3.764826730196683,
      1.8704466778794855, 1.0810194611124568;
  REQUIRE(model.theta.size() == 5);
  CHECK((model.theta - expected).norm() < 1e-8);
  CHECK(model.estimator == EstimatorKind::DirectMethod);
  CHECK_FALSE(model.has_propensity);
}

TEST_CASE("weighted fit solves the weighted normal equations") {
  OutcomeModel model =
      fit_wdm(polopt_test::eight_rows(), BasisSpec::well_specified(),
              polopt_test::reference_propensity());
  Eigen::VectorXd expected(5);
  expected << 6.0350033889485495, 0.548736480793679, -3.6700532791339504,
      1.8372464840888492, 1.0058220291133178;
  REQUIRE(model.theta.size() == 5);
  CHECK((model.theta - expected).norm() < 1e-8);
  CHECK(model.has_propensity);
}

TEST_CASE("constant weights reduce the weighted fit to the unweighted one") {
  // gamma = (0, 0) gives e_t(w) = 1/2 everywhere, so the weights cancel.
  PropensityModel half;
  half.gamma << 0.0, 0.0;
  ObservationalDataset data = polopt_test::eight_rows();
  OutcomeModel dm = fit_dm(data, BasisSpec::mis_specified());
  OutcomeModel wdm = fit_wdm(data, BasisSpec::mis_specified(), half);
  CHECK((dm.theta - wdm.theta).norm() < 1e-9);
}

TEST_CASE("noiseless data is recovered exactly") {
  OutcomeSpec truth = OutcomeSpec::reference_polynomial(0.0);
  ObservationalDataset data = gen_dataset(truth, BehaviorPolicySpec{}, 400, 21);
  OutcomeModel model = fit_dm(data, BasisSpec::well_specified());
  Eigen::VectorXd expected(5);
  expected << 5.0, 1.0, -2.0, 2.0, 2.0;  // t^2 folded into the t coefficient
  CHECK((model.theta - expected).norm() < 1e-8);
  CHECK(model.predict(1, 0.0) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("doubly robust residuals satisfy the first-order conditions") {
  ObservationalDataset data = gen_dataset(OutcomeSpec::reference_polynomial(),
                                          BehaviorPolicySpec{}, 2000, 33);
  PropensityModel propensity = fit_propensity(data);
  OutcomeModel model =
      fit_grdr(data, BasisSpec::mis_specified(), propensity);

  BasisSpec basis = BasisSpec::mis_specified();
  Eigen::VectorXd moment = Eigen::VectorXd::Zero(basis.dim() + 2);
  for (const auto& r : data.rows) {
    double resid = r.c - model.predict(r.t, r.w);
    Eigen::VectorXd phi = basis.features_at(r.t, r.w);
    moment.head(basis.dim()) += resid * phi;
    moment[basis.dim()] += resid * r.t / propensity.e1(r.w);
    moment[basis.dim() + 1] += resid * (1 - r.t) / propensity.e0(r.w);
  }
  moment /= static_cast<double>(data.rows.size());
  CHECK(moment.lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("doubly robust predictions include the propensity correction") {
  OutcomeModel model;
  model.estimator = EstimatorKind::GeneralizedRegressionDR;
  model.basis = BasisSpec::mis_specified();
  model.theta = Eigen::VectorXd::Zero(4);
  model.theta[0] = 1.0;
  model.eps1 = 0.2;
  model.eps0 = -0.4;
  model.propensity = polopt_test::reference_propensity();
  model.has_propensity = true;
  double w = 0.6;
  CHECK(model.predict(1, w) ==
        doctest::Approx(1.0 + 0.2 / model.propensity.e1(w)));
  CHECK(model.predict(0, w) ==
        doctest::Approx(1.0 - 0.4 / model.propensity.e0(w)));
}

TEST_CASE("nonlinear fit reproduces the exponential mean on clean data") {
  OutcomeSpec truth = OutcomeSpec::reference_exponential(0.0);
  ObservationalDataset data = gen_dataset(truth, BehaviorPolicySpec{}, 600, 8);
  OutcomeModel model = fit_dm(data, BasisSpec::exponential_curve());
  CHECK(model.report.converged);
  // The curve parameters are only identified up to a2 * exp(b1), so compare
  // fitted means rather than coefficients.
  for (int t = 0; t <= 1; ++t) {
    for (double w = -1.5; w <= 1.5; w += 0.31) {
      CHECK(model.predict(t, w) ==
            doctest::Approx(true_outcome_mean(truth, t, w)).epsilon(1e-5));
    }
  }
}

TEST_CASE("warm starts override the default initialization") {
  OutcomeSpec truth = OutcomeSpec::reference_exponential(0.5);
  ObservationalDataset data = gen_dataset(truth, BehaviorPolicySpec{}, 300, 44);
  OutcomeModel cold = fit_dm(data, BasisSpec::exponential_curve());
  OutcomeModel warm = fit_dm(data, BasisSpec::exponential_curve(), cold.theta);
  // Restarting at the optimum stays at the optimum.
  CHECK((warm.theta - cold.theta).norm() < 1e-6);
}

TEST_CASE("rank-deficient designs are rejected") {
  // Two identical monomials make the design exactly collinear.
  BasisSpec degenerate = BasisSpec::custom({{0, 0}, {1, 0}, {1, 0}});
  CHECK_THROWS_AS(fit_dm(polopt_test::eight_rows(), degenerate),
                  SingularDesignError);
}

TEST_CASE("estimator names round-trip") {
  for (EstimatorKind kind :
       {EstimatorKind::DirectMethod, EstimatorKind::WeightedDirectMethod,
        EstimatorKind::GeneralizedRegressionDR}) {
    CHECK(estimator_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(estimator_kind_from_string("ols"), ConfigError);
}

TEST_SUITE_END();
