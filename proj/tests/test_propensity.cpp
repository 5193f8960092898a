#include <doctest.h>

#include <cmath>

#include "polopt/errors.hpp"
#include "polopt/propensity.hpp"
#include "polopt/synthdata.hpp"
#include "test_data.hpp"

using namespace polopt;

TEST_SUITE_BEGIN("propensity");

TEST_CASE("sigmoid basics") {
  CHECK(sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(sigmoid(3.0) + sigmoid(-3.0) == doctest::Approx(1.0));
  CHECK(sigmoid(30.0) > 0.999999);
}

TEST_CASE("maximum-likelihood fit matches the reference optimizer") {
  // Coefficients from an independent quasi-Newton fit of the same
  // log-likelihood on the shared eight-row dataset.
  PropensityModel model = fit_propensity(polopt_test::eight_rows());
  CHECK(model.report.converged);
  CHECK(model.gamma[0] == doctest::Approx(-0.17633049919105043).epsilon(1e-5));
  CHECK(model.gamma[1] == doctest::Approx(0.03746580664357168).epsilon(1e-5));
}

TEST_CASE("large samples recover the behavior mechanism") {
  ObservationalDataset data = gen_dataset(OutcomeSpec::reference_polynomial(),
                                          BehaviorPolicySpec{}, 20000, 404);
  PropensityModel model = fit_propensity(data);
  CHECK(model.report.converged);
  // P(T=1|w) = sigmoid(0.5 w - 0.5), so gamma -> (0.5, -0.5).
  CHECK(model.gamma[0] == doctest::Approx(0.5).epsilon(0.1));
  CHECK(model.gamma[1] == doctest::Approx(-0.5).epsilon(0.1));
}

TEST_CASE("predictions are clipped and complementary") {
  PropensityModel model;
  model.gamma << 4.0, 0.0;
  model.clip_lo = 0.05;
  model.clip_hi = 0.95;
  CHECK(model.e1(10.0) == doctest::Approx(0.95));
  CHECK(model.e1(-10.0) == doctest::Approx(0.05));
  CHECK(model.e0(10.0) == doctest::Approx(0.05));
  CHECK(model.raw_e1(10.0) > 0.999);
  CHECK(model.e(1, 0.3) == doctest::Approx(model.e1(0.3)));
  CHECK(model.e(0, 0.3) == doctest::Approx(model.e0(0.3)));
  // Inside the clip region the raw and clipped values coincide.
  CHECK(model.e1(0.1) == doctest::Approx(model.raw_e1(0.1)));
}

TEST_CASE("degenerate inputs are rejected") {
  CHECK_THROWS_AS(fit_propensity(ObservationalDataset{}), EmptyInputError);

  ObservationalDataset one_arm;
  for (int i = 0; i < 10; ++i) {
    one_arm.rows.push_back({0.1 * i, 1, 1.0});
  }
  CHECK_THROWS_AS(fit_propensity(one_arm), DegenerateArmError);
}

TEST_SUITE_END();
