// End-to-end acceptance suite: one summary line per criterion, plus
// doctest checks on every sub-condition so failures are visible in ctest.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "polopt/errors.hpp"
#include "polopt/experiments.hpp"
#include "polopt/inference.hpp"
#include "polopt/outcome.hpp"
#include "polopt/perturbation.hpp"
#include "polopt/policy.hpp"
#include "polopt/policy_opt.hpp"
#include "polopt/propensity.hpp"
#include "polopt/response.hpp"
#include "polopt/rng.hpp"
#include "polopt/scores.hpp"
#include "polopt/synthdata.hpp"

using namespace polopt;

namespace {

std::size_t pool_size() {
  return std::max(1u, std::thread::hardware_concurrency());
}

using Timer = std::chrono::steady_clock;

double seconds_since(Timer::time_point start) {
  return std::chrono::duration<double>(Timer::now() - start).count();
}

/// metric values keyed by estimator then axis, pooled across runs.
using MetricTable = std::map<std::string, std::map<double, std::vector<double>>>;

MetricTable collect(const std::vector<ResultRow>& rows,
                    const std::string& metric) {
  MetricTable table;
  for (const auto& row : rows) {
    if (row.metric == metric) table[row.estimator][row.axis].push_back(row.value);
  }
  return table;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sem(const std::vector<double>& v) {
  double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) /
                   static_cast<double>(v.size()));
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  std::vector<double> rx = ranks(x), ry = ranks(y);
  double mx = mean(rx), my = mean(ry);
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s — %s\n", criterion, ok ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

TEST_CASE("criterion 1: debiased per-edge error across the h grid") {
  auto start = Timer::now();
  ExperimentConfig config = ExperimentConfig::defaults(ExperimentKind::EvalHTable);
  config.jobs = pool_size();
  REQUIRE(config.n_grid == std::vector<std::size_t>{3000});
  REQUIRE(config.s == 20);
  REQUIRE(config.runs == 10);
  std::vector<ResultRow> mis_rows = run_experiment_rows(config);
  config.basis = BasisKind::WellSpecified;
  std::vector<ResultRow> well_rows = run_experiment_rows(config);
  double elapsed = seconds_since(start);

  MetricTable mis = collect(mis_rows, "sq_err_edge");
  MetricTable well = collect(well_rows, "sq_err_edge");

  bool ok = true;
  std::string detail;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (double h : config.h_grid) {
    double dm = mean(mis.at("dm").at(h));
    double wdm = mean(mis.at("wdm").at(h));
    double grdr = mean(mis.at("grdr").at(h));
    ok = ok && dm >= 0.2 && dm <= 1.5 && wdm <= 0.002 && grdr <= 0.002 &&
         dm / wdm >= 100.0;
    worst_ratio = std::min(worst_ratio, dm / wdm);
    detail += "h=" + fmt(h) + " mis dm=" + fmt(dm) + " wdm=" + fmt(wdm) +
              " grdr=" + fmt(grdr) + "; ";
    double wdm_well = mean(well.at("wdm").at(h));
    double grdr_well = mean(well.at("grdr").at(h));
    double dm_well = mean(well.at("dm").at(h));
    ok = ok && dm_well <= 0.003 && wdm_well <= 0.003 && grdr_well <= 0.003;
  }
  detail += "min dm/wdm ratio " + fmt(worst_ratio) + "; " + fmt(elapsed) + "s";
  report(1, ok && elapsed <= 600.0, detail);

  for (double h : config.h_grid) {
    double dm = mean(mis.at("dm").at(h));
    CHECK(dm >= 0.2);
    CHECK(dm <= 1.5);
    CHECK(mean(mis.at("wdm").at(h)) <= 0.002);
    CHECK(mean(mis.at("grdr").at(h)) <= 0.002);
    CHECK(dm / mean(mis.at("wdm").at(h)) >= 100.0);
    CHECK(mean(well.at("dm").at(h)) <= 0.003);
    CHECK(mean(well.at("wdm").at(h)) <= 0.003);
    CHECK(mean(well.at("grdr").at(h)) <= 0.003);
  }
  CHECK(elapsed <= 600.0);
}

TEST_CASE("criterion 2: debiased error decays with the sample size") {
  ExperimentConfig config = ExperimentConfig::defaults(ExperimentKind::Eval);
  config.jobs = pool_size();
  REQUIRE(config.n_grid == std::vector<std::size_t>{500, 1000, 1500, 2000});
  std::vector<ResultRow> rows = run_experiment_rows(config);
  MetricTable table = collect(rows, "sq_err_edge");

  std::vector<double> ns(config.n_grid.begin(), config.n_grid.end());
  auto curve = [&](const std::string& est) {
    std::vector<double> out;
    for (double n : ns) out.push_back(mean(table.at(est).at(n)));
    return out;
  };
  std::vector<double> wdm = curve("wdm"), grdr = curve("grdr"), dm = curve("dm");
  double rho_wdm = spearman(ns, wdm);
  double rho_grdr = spearman(ns, grdr);
  double ratio_wdm = dm.back() / wdm.back();
  double ratio_grdr = dm.back() / grdr.back();

  bool ok = rho_wdm <= -0.8 && rho_grdr <= -0.8 && ratio_wdm >= 50.0 &&
            ratio_grdr >= 50.0;
  report(2, ok,
         "spearman(n, mse): wdm " + fmt(rho_wdm) + ", grdr " + fmt(rho_grdr) +
             "; dm/wdm at n=2000 " + fmt(ratio_wdm) + ", dm/grdr " +
             fmt(ratio_grdr));
  CHECK(rho_wdm <= -0.8);
  CHECK(rho_grdr <= -0.8);
  CHECK(ratio_wdm >= 50.0);
  CHECK(ratio_grdr >= 50.0);
}

TEST_CASE("criterion 3: conditional-contrast quality on the covariate grid") {
  ExperimentConfig config = ExperimentConfig::defaults(ExperimentKind::Cate);
  config.jobs = pool_size();
  REQUIRE(config.n_grid == std::vector<std::size_t>{1000});
  std::vector<ResultRow> mis_rows = run_experiment_rows(config);
  config.basis = BasisKind::WellSpecified;
  std::vector<ResultRow> well_rows = run_experiment_rows(config);

  MetricTable mae = collect(mis_rows, "mae");
  double dm = mean(mae.at("dm").at(1000.0));
  double wdm = mean(mae.at("wdm").at(1000.0));
  double grdr = mean(mae.at("grdr").at(1000.0));

  MetricTable contrast = collect(well_rows, "contrast");
  const auto& truth = contrast.at("oracle");
  double max_z = 0.0;
  for (const char* est : {"dm", "wdm", "grdr"}) {
    for (const auto& [w, values] : contrast.at(est)) {
      double target = truth.at(w).front();
      double band = 2.0 * sem(values);
      double dev = std::abs(mean(values) - target);
      max_z = std::max(max_z, band > 0.0 ? dev / (band / 2.0) : 0.0);
    }
  }

  bool ok = dm >= 3.0 * wdm && dm >= 3.0 * grdr && max_z <= 2.0;
  report(3, ok,
         "mis mae dm=" + fmt(dm) + " wdm=" + fmt(wdm) + " grdr=" + fmt(grdr) +
             " (ratios " + fmt(dm / wdm) + ", " + fmt(dm / grdr) +
             "); well max |dev|/sem " + fmt(max_z));
  CHECK(dm >= 3.0 * wdm);
  CHECK(dm >= 3.0 * grdr);
  CHECK(max_z <= 2.0);
}

TEST_CASE("criterion 4: extrapolation removes optimization bias on the toy") {
  auto start = Timer::now();
  const std::size_t m = 20, k = 5;
  ContextSet contexts = gen_contexts(m, 430);
  SelectKOracle oracle(m, k);
  LogisticPolicy policy = LogisticPolicy::reference_eval();
  OutcomeSpec truth{OutcomeKind::Polynomial2, {5, 0, 0, 0, 0, 0}, 1.0};
  const double v_star = oracle_policy_value(policy, truth, contexts, oracle);

  OutcomeModel base;
  base.basis = BasisSpec::well_specified();
  base.theta = Eigen::VectorXd(5);
  base.theta << 5.0, 0.0, 0.0, 0.0, 0.0;

  const Eigen::Index d = 5;
  Eigen::MatrixXd Sigma = 100.0 * 0.25 * Eigen::MatrixXd::Identity(d, d);
  const std::size_t N = 100;
  const double h = 1.0;
  const int trials = 500;

  RandomStream trial_stream(431, "acceptance-toy");
  double sum_v0 = 0.0, sum_rho = 0.0, sumsq_v0 = 0.0, sumsq_rho = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    OutcomeModel noisy = base;
    for (Eigen::Index j = 0; j < d; ++j) {
      noisy.theta[j] +=
          0.5 * trial_stream.normal(static_cast<std::uint64_t>(trial) * d + j);
    }
    auto replicates =
        gaussian_replicate_models(noisy, Sigma, N, h, 40, derive_seed(432, trial));
    DebiasedEstimate est = debias(policy, noisy, replicates, contexts, oracle, h);
    sum_v0 += est.v0;
    sum_rho += est.rho;
    sumsq_v0 += est.v0 * est.v0;
    sumsq_rho += est.rho * est.rho;
  }
  double mean_v0 = sum_v0 / trials, mean_rho = sum_rho / trials;
  double var_v0 = sumsq_v0 / trials - mean_v0 * mean_v0;
  double var_rho = sumsq_rho / trials - mean_rho * mean_rho;
  double elapsed = seconds_since(start);

  double bias_v0 = mean_v0 - v_star, bias_rho = mean_rho - v_star;
  bool ok = std::abs(bias_rho) <= 0.5 * std::abs(bias_v0) &&
            var_rho >= var_v0 && elapsed <= 60.0;
  report(4, ok,
         "bias: plug-in " + fmt(bias_v0) + ", debiased " + fmt(bias_rho) +
             "; variance " + fmt(var_v0) + " -> " + fmt(var_rho) + "; " +
             fmt(elapsed) + "s");
  CHECK(std::abs(bias_rho) <= 0.5 * std::abs(bias_v0));
  CHECK(var_rho >= var_v0);
  CHECK(elapsed <= 60.0);
}

TEST_CASE("criterion 5: the matching solver is exact") {
  auto start = Timer::now();
  RandomStream stream(450, "acceptance-matching");
  std::uint64_t counter = 0;
  double max_gap = 0.0;
  int failures = 0;
  for (int inst = 0; inst < 500; ++inst) {
    std::size_t m_left = 2 + stream.uniform_int(counter++, 7);  // 2..8
    std::size_t m_right = 1 + stream.uniform_int(counter++, m_left);
    CostMode mode = inst % 2 == 0 ? CostMode::NodeCost : CostMode::NodePlusBase;
    MatchingInstance instance{m_left, m_right, mode, {}};
    if (mode == CostMode::NodePlusBase) {
      instance = MatchingInstance::with_random_base(m_left, m_right,
                                                    derive_seed(451, inst));
    }
    std::vector<double> costs(m_left);
    for (auto& c : costs) c = 4.0 * stream.uniform(counter++) - 2.0;
    double fast = solve_matching(instance, costs).value;
    double exact = brute_force_value(instance, costs);
    max_gap = std::max(max_gap, std::abs(fast - exact));
    if (std::abs(fast - exact) > 1e-9) ++failures;
  }
  double elapsed = seconds_since(start);
  bool ok = failures == 0 && elapsed <= 30.0;
  report(5, ok,
         "500 instances, max |solver - brute force| " + fmt(max_gap) + "; " +
             fmt(elapsed) + "s");
  CHECK(failures == 0);
  CHECK(elapsed <= 30.0);
}

TEST_CASE("criterion 6: the doubly robust plug-in reproduces the augmented ATE") {
  double max_gap = 0.0;
  for (int i = 0; i < 50; ++i) {
    ObservationalDataset data =
        gen_dataset(OutcomeSpec::reference_polynomial(), BehaviorPolicySpec{},
                    500, derive_seed(460, i));
    PropensityModel propensity = fit_propensity(data);
    OutcomeModel model = fit_grdr(data, BasisSpec::mis_specified(), propensity);
    double gap = std::abs(plug_in_ate(model, data) -
                          aipw_ate(data, propensity, model));
    max_gap = std::max(max_gap, gap);
  }
  bool ok = max_gap <= 1e-6;
  report(6, ok, "50 datasets, max |plug-in ATE - AIPW ATE| " + fmt(max_gap));
  CHECK(max_gap <= 1e-6);
}

TEST_CASE("criterion 7: the envelope subgradient matches finite differences") {
  ObservationalDataset data = gen_dataset(OutcomeSpec::reference_polynomial(),
                                          BehaviorPolicySpec{}, 800, 470);
  OutcomeModel model = fit_dm(data, BasisSpec::well_specified());
  const double step = 1e-6;
  double max_rel = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    ContextSet contexts = gen_contexts(12, derive_seed(471, inst));
    MatchingOracle oracle(
        MatchingInstance::with_random_base(12, 7, derive_seed(472, inst)));
    LogisticPolicy policy{0.4 + 0.01 * inst, -0.2 + 0.005 * inst};
    Eigen::Vector2d grad = danskin_subgradient(policy, model, contexts, oracle);
    for (int coord = 0; coord < 2; ++coord) {
      LogisticPolicy up = policy, dn = policy;
      (coord == 0 ? up.slope : up.intercept) += step;
      (coord == 0 ? dn.slope : dn.intercept) -= step;
      double fd = (plug_in_objective(model, up, contexts, oracle).value -
                   plug_in_objective(model, dn, contexts, oracle).value) /
                  (2.0 * step);
      double rel = std::abs(grad[coord] - fd) / std::max(1.0, std::abs(fd));
      max_rel = std::max(max_rel, rel);
    }
  }
  bool ok = max_rel <= 1e-4;
  report(7, ok, "100 instances, max relative gradient error " + fmt(max_rel));
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("criterion 8: policy optimization approaches the oracle optimum") {
  auto start = Timer::now();
  ExperimentConfig config = ExperimentConfig::defaults(ExperimentKind::Opt);
  config.jobs = pool_size();
  REQUIRE(config.n_grid == std::vector<std::size_t>{1000});
  REQUIRE(config.m == 100);
  REQUIRE(config.m_prime == 60);
  REQUIRE(config.opt_iterations == 60);
  std::vector<ResultRow> rows = run_experiment_rows(config);
  double elapsed = seconds_since(start);

  MetricTable value = collect(rows, "true_value");
  auto final_value = [&](const std::string& est) {
    const auto& by_axis = value.at(est);
    return mean(by_axis.begin()->second);
  };
  double oracle = final_value("oracle");
  double dm = final_value("dm");
  double wdm = final_value("wdm");
  double grdr = final_value("grdr");
  double scale = std::abs(oracle);
  double gap_dm = dm - oracle, gap_wdm = wdm - oracle, gap_grdr = grdr - oracle;

  bool ok = gap_wdm <= 0.02 * scale && gap_grdr <= 0.02 * scale &&
            gap_dm > std::max(gap_wdm, gap_grdr) && elapsed <= 600.0;
  report(8, ok,
         "oracle value " + fmt(oracle) + "; gaps dm " + fmt(gap_dm) + ", wdm " +
             fmt(gap_wdm) + ", grdr " + fmt(gap_grdr) + "; " + fmt(elapsed) +
             "s");
  CHECK(gap_wdm <= 0.02 * scale);
  CHECK(gap_grdr <= 0.02 * scale);
  CHECK(gap_dm > std::max(gap_wdm, gap_grdr));
  CHECK(elapsed <= 600.0);
}

TEST_CASE("criterion 9: the sandwich variance matches the bootstrap") {
  const std::size_t n = 2000;
  ObservationalDataset data = gen_dataset(OutcomeSpec::reference_polynomial(),
                                          BehaviorPolicySpec{}, n, 490);
  PropensityModel propensity = fit_propensity(data);
  OutcomeModel model = fit_wdm(data, BasisSpec::well_specified(), propensity);

  // Analytic vs finite-difference Jacobians.
  MomentSystem system = moment_system_for(model);
  Eigen::VectorXd gamma = model.propensity.gamma;
  JacobianSet analytic = estimate_jacobians(system, data, model.theta, gamma,
                                            JacobianMode::Analytic);
  JacobianSet fd = estimate_jacobians(system, data, model.theta, gamma,
                                      JacobianMode::FiniteDifference);
  double jac_gap = std::max(
      {(analytic.G_theta - fd.G_theta).cwiseAbs().maxCoeff(),
       (analytic.G_gamma - fd.G_gamma).cwiseAbs().maxCoeff(),
       (analytic.H - fd.H).cwiseAbs().maxCoeff()});

  // Nonparametric bootstrap covariance of the stacked parameters.
  Eigen::MatrixXd sigma = estimate_sigma(model, data);
  const int reps = 200;
  RandomStream stream(491, "acceptance-bootstrap");
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    ObservationalDataset resample;
    resample.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      resample.rows.push_back(
          data.rows[stream.uniform_int(static_cast<std::uint64_t>(r) * n + i, n)]);
    }
    PropensityModel prop_b = fit_propensity(resample);
    OutcomeModel model_b =
        fit_wdm(resample, BasisSpec::well_specified(), prop_b);
    draws.push_back(pack_params(model_b));
  }
  Eigen::VectorXd center = Eigen::VectorXd::Zero(draws[0].size());
  for (const auto& v : draws) center += v;
  center /= static_cast<double>(reps);
  Eigen::VectorXd boot_var = Eigen::VectorXd::Zero(center.size());
  for (const auto& v : draws) {
    boot_var += (v - center).cwiseProduct(v - center);
  }
  boot_var /= static_cast<double>(reps - 1);
  // sigma is the covariance of sqrt(n)(params_hat - params).
  Eigen::VectorXd analytic_var = sigma.diagonal() / static_cast<double>(n);

  double max_rel = 0.0;
  for (Eigen::Index i = 0; i < analytic_var.size(); ++i) {
    max_rel = std::max(max_rel, std::abs(analytic_var[i] - boot_var[i]) /
                                    boot_var[i]);
  }
  bool ok = max_rel <= 0.25 && jac_gap <= 1e-4;
  report(9, ok,
         "max relative diagonal gap " + fmt(max_rel) +
             "; analytic vs fd jacobian gap " + fmt(jac_gap));
  CHECK(max_rel <= 0.25);
  CHECK(jac_gap <= 1e-4);
}
