#include "polopt/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "polopt/errors.hpp"
#include "polopt/perturbation.hpp"
#include "polopt/policy_opt.hpp"
#include "polopt/response.hpp"
#include "polopt/rng.hpp"
#include "polopt/serialize.hpp"

namespace polopt {

namespace fs = std::filesystem;

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig config;
  config.experiment = kind;
  switch (kind) {
    case ExperimentKind::Cate:
      config.n_grid = {1000};
      for (int i = 0; i <= 20; ++i) {
        config.contrast_grid.push_back(-2.5 + 0.25 * i);
      }
      break;
    case ExperimentKind::Eval:
      config.n_grid = {500, 1000, 1500, 2000};
      break;
    case ExperimentKind::EvalHTable:
      config.n_grid = {3000};
      config.h_grid = {1.0, 2.0, 3.0, 4.0};
      break;
    case ExperimentKind::Opt:
      config.n_grid = {1000};
      config.m = 100;
      config.m_prime = 60;
      break;
    case ExperimentKind::Nonlinear:
      config.n_grid = {1000};
      config.outcome = OutcomeSpec::reference_exponential();
      config.basis = BasisKind::ExponentialCurve;
      break;
  }
  return config;
}

void ExperimentConfig::validate() const {
  outcome.validate();
  if (estimators.empty()) throw ConfigError("ExperimentConfig: no estimators");
  if (n_grid.empty()) throw ConfigError("ExperimentConfig: empty n_grid");
  if (runs == 0) throw ConfigError("ExperimentConfig: runs must be >= 1");
  if (m == 0 || m_prime == 0 || m_prime > m) {
    throw ConfigError("ExperimentConfig: need 1 <= m_prime <= m");
  }
  if (s == 0) throw ConfigError("ExperimentConfig: s must be >= 1");
  if (h <= 0.0) throw ConfigError("ExperimentConfig: h must be > 0");
  if (experiment == ExperimentKind::EvalHTable) {
    if (h_grid.empty()) throw ConfigError("ExperimentConfig: empty h_grid");
    for (double hv : h_grid) {
      if (hv <= 0.0) throw ConfigError("ExperimentConfig: h values must be > 0");
    }
  }
  if (experiment == ExperimentKind::Cate && contrast_grid.empty()) {
    throw ConfigError("ExperimentConfig: empty contrast_grid");
  }
  if (experiment == ExperimentKind::Opt) {
    if (opt_iterations == 0) {
      throw ConfigError("ExperimentConfig: opt_iterations must be >= 1");
    }
    if (step_grid.empty()) throw ConfigError("ExperimentConfig: empty step_grid");
  }
  basis_spec().validate();
}

BasisSpec ExperimentConfig::basis_spec() const {
  switch (basis) {
    case BasisKind::WellSpecified:
      return BasisSpec::well_specified();
    case BasisKind::MisSpecified:
      return BasisSpec::mis_specified();
    case BasisKind::ExponentialCurve:
      return BasisSpec::exponential_curve();
    case BasisKind::Custom:
      throw ConfigError("ExperimentConfig: custom bases are not sweepable");
  }
  throw ConfigError("unknown basis kind");
}

OutcomeModel truth_model(const OutcomeSpec& outcome) {
  outcome.validate();
  OutcomeModel model;
  model.estimator = EstimatorKind::DirectMethod;
  model.report.converged = true;
  const auto& a = outcome.coefficients;
  if (outcome.kind == OutcomeKind::Polynomial2) {
    model.basis = BasisSpec::well_specified();
    // The basis folds t^2 into t, so the two treatment coefficients merge.
    model.theta.resize(5);
    model.theta << a[0], a[1], a[2] + a[5], a[3], a[4];
  } else {
    model.basis = BasisSpec::exponential_curve();
    model.theta = Eigen::Map<const Eigen::VectorXd>(a.data(), 6);
  }
  return model;
}

namespace {

std::uint64_t estimator_tag(EstimatorKind kind) {
  return static_cast<std::uint64_t>(kind) + 1;
}

void eval_like(const ExperimentConfig& config, std::size_t run,
               std::vector<ResultRow>& rows) {
  const std::uint64_t run_seed = derive_seed(config.seed, run);
  const bool axis_is_h = config.experiment == ExperimentKind::EvalHTable;
  const std::vector<double> hs =
      axis_is_h ? config.h_grid : std::vector<double>{config.h};
  const double edges = static_cast<double>(config.m_prime);

  for (std::size_t ni = 0; ni < config.n_grid.size(); ++ni) {
    const std::size_t n = config.n_grid[ni];
    ObservationalDataset data = gen_dataset(
        config.outcome, config.behavior, n, derive_seed(run_seed, 2 * ni));
    ContextSet contexts =
        gen_contexts(config.m, derive_seed(run_seed, 2 * ni + 1));
    MatchingOracle oracle({config.m, config.m_prime, CostMode::NodeCost, {}});
    const double v_star =
        oracle_policy_value(config.policy, config.outcome, contexts, oracle);

    for (EstimatorKind est : config.estimators) {
      FitRecipe recipe{est, config.basis_spec()};
      OutcomeModel model0 = fit_recipe(recipe, data);
      recipe.theta_init = model0.theta;
      for (std::size_t hi = 0; hi < hs.size(); ++hi) {
        const double hv = hs[hi];
        std::uint64_t boot_seed = derive_seed(
            run_seed, 1000 + 100 * ni + 10 * estimator_tag(est) + hi);
        auto replicates =
            gen_replicates_bootstrap(data, recipe, hv, config.s, boot_seed);
        DebiasedEstimate de =
            debias(config.policy, model0, replicates, contexts, oracle, hv);
        const double axis = axis_is_h ? hv : static_cast<double>(n);
        const std::string name = to_string(est);
        double err_deb = (de.rho - v_star) / edges;
        double err_plug = (de.v0 - v_star) / edges;
        rows.push_back({run, name, axis, "value_plugin", de.v0});
        rows.push_back({run, name, axis, "value_debiased", de.rho});
        rows.push_back({run, name, axis, "value_oracle", v_star});
        rows.push_back({run, name, axis, "sq_err_edge", err_deb * err_deb});
        rows.push_back(
            {run, name, axis, "sq_err_edge_plugin", err_plug * err_plug});
      }
    }
  }
}

void cate(const ExperimentConfig& config, std::size_t run,
          std::vector<ResultRow>& rows) {
  const std::uint64_t run_seed = derive_seed(config.seed, run);
  const std::size_t n = config.n_grid.front();
  ObservationalDataset data =
      gen_dataset(config.outcome, config.behavior, n, derive_seed(run_seed, 0));

  for (double w : config.contrast_grid) {
    double truth = true_outcome_mean(config.outcome, 1, w) -
                   true_outcome_mean(config.outcome, 0, w);
    rows.push_back({run, "oracle", w, "contrast", truth});
  }
  for (EstimatorKind est : config.estimators) {
    FitRecipe recipe{est, config.basis_spec()};
    OutcomeModel model = fit_recipe(recipe, data);
    double abs_sum = 0.0;
    for (double w : config.contrast_grid) {
      double tau = model.predict(1, w) - model.predict(0, w);
      double truth = true_outcome_mean(config.outcome, 1, w) -
                     true_outcome_mean(config.outcome, 0, w);
      rows.push_back({run, to_string(est), w, "contrast", tau});
      rows.push_back({run, to_string(est), w, "abs_err", std::abs(tau - truth)});
      abs_sum += std::abs(tau - truth);
    }
    rows.push_back({run, to_string(est), static_cast<double>(n), "mae",
                    abs_sum / static_cast<double>(config.contrast_grid.size())});
  }
}

void opt(const ExperimentConfig& config, std::size_t run,
         std::vector<ResultRow>& rows) {
  const std::uint64_t run_seed = derive_seed(config.seed, run);
  const std::size_t n = config.n_grid.front();
  ObservationalDataset data =
      gen_dataset(config.outcome, config.behavior, n, derive_seed(run_seed, 0));
  ContextSet contexts = gen_contexts(config.m, derive_seed(run_seed, 1));
  MatchingOracle oracle({config.m, config.m_prime, CostMode::NodeCost, {}});

  struct Arm {
    std::string name;
    OutcomeModel model;
    std::vector<OutcomeModel> replicates;
    bool perturb = false;
  };
  std::vector<Arm> arms;
  for (EstimatorKind est : config.estimators) {
    FitRecipe recipe{est, config.basis_spec()};
    Arm arm;
    arm.name = to_string(est);
    arm.model = fit_recipe(recipe, data);
    recipe.theta_init = arm.model.theta;
    arm.replicates = gen_replicates_bootstrap(
        data, recipe, config.h, config.s,
        derive_seed(run_seed, 1000 + estimator_tag(est)));
    arm.perturb = true;
    arms.push_back(std::move(arm));
  }
  arms.push_back({"oracle", truth_model(config.outcome), {}, false});

  for (const Arm& arm : arms) {
    PolicyTrajectory best;
    double best_final = std::numeric_limits<double>::infinity();
    double best_step = config.step_grid.front();
    for (double step : config.step_grid) {
      OptimizerConfig oc;
      oc.step_size = step;
      oc.iterations = config.opt_iterations;
      oc.init = config.init_policy;
      oc.use_perturbation = arm.perturb;
      oc.h = config.h;
      PolicyTrajectory traj =
          optimize(oc, arm.model, arm.replicates, contexts, oracle);
      double final_obj = traj.points.back().objective;
      if (final_obj < best_final) {
        best_final = final_obj;
        best = std::move(traj);
        best_step = step;
      }
    }
    for (std::size_t it = 0; it < best.points.size(); ++it) {
      rows.push_back({run, arm.name, static_cast<double>(it), "objective",
                      best.points[it].objective});
    }
    double true_final = true_objective(config.outcome, best.final_policy,
                                       contexts, oracle)
                            .value;
    double axis = static_cast<double>(config.opt_iterations);
    rows.push_back({run, arm.name, 0.0, "step_size", best_step});
    rows.push_back({run, arm.name, axis, "true_value", true_final});
    rows.push_back({run, arm.name, axis, "final_slope", best.final_policy.slope});
    rows.push_back(
        {run, arm.name, axis, "final_intercept", best.final_policy.intercept});
  }
}

void run_pool(std::size_t runs, std::size_t jobs,
              const std::function<void(std::size_t)>& body) {
  if (jobs <= 1 || runs <= 1) {
    for (std::size_t r = 0; r < runs; ++r) body(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t r = next.fetch_add(1);
      if (r >= runs) return;
      try {
        body(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < std::min(jobs, runs); ++t) {
    threads.emplace_back(worker);
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string plot_script();

}  // namespace

std::vector<ResultRow> run_single(const ExperimentConfig& config,
                                  std::size_t run_index) {
  config.validate();
  if (run_index >= config.runs) {
    throw ConfigError("run_single: run index out of range");
  }
  std::vector<ResultRow> rows;
  switch (config.experiment) {
    case ExperimentKind::Cate:
      cate(config, run_index, rows);
      break;
    case ExperimentKind::Eval:
    case ExperimentKind::EvalHTable:
    case ExperimentKind::Nonlinear:
      eval_like(config, run_index, rows);
      break;
    case ExperimentKind::Opt:
      opt(config, run_index, rows);
      break;
  }
  return rows;
}

std::vector<ResultRow> run_experiment_rows(const ExperimentConfig& config) {
  config.validate();
  std::vector<std::vector<ResultRow>> per_run(config.runs);
  run_pool(config.runs, config.jobs,
           [&](std::size_t r) { per_run[r] = run_single(config, r); });
  std::vector<ResultRow> rows;
  for (auto& chunk : per_run) {
    rows.insert(rows.end(), chunk.begin(), chunk.end());
  }
  return rows;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "run,estimator,axis,metric,value\n";
  for (const auto& row : rows) {
    os << row.run << ',' << row.estimator << ',' << row.axis << ','
       << row.metric << ',' << row.value << '\n';
  }
  return os.str();
}

std::vector<ResultRow> rows_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    ResultRow row;
    std::getline(ls, field, ',');
    row.run = static_cast<std::size_t>(std::stoull(field));
    std::getline(ls, row.estimator, ',');
    std::getline(ls, field, ',');
    row.axis = std::stod(field);
    std::getline(ls, row.metric, ',');
    std::getline(ls, field, ',');
    row.value = std::stod(field);
    rows.push_back(std::move(row));
  }
  return rows;
}

void run_experiment(const ExperimentConfig& config) {
  config.validate();
  fs::path out_dir(config.output_dir);
  fs::path checkpoint_dir = out_dir / "checkpoints";
  fs::create_directories(checkpoint_dir);

  std::vector<std::vector<ResultRow>> per_run(config.runs);
  std::vector<std::size_t> pending;
  for (std::size_t r = 0; r < config.runs; ++r) {
    fs::path checkpoint = checkpoint_dir / ("run_" + std::to_string(r) + ".csv");
    if (fs::exists(checkpoint)) {
      std::ifstream in(checkpoint);
      std::stringstream buf;
      buf << in.rdbuf();
      per_run[r] = rows_from_csv(buf.str());
    } else {
      pending.push_back(r);
    }
  }
  run_pool(pending.size(), config.jobs, [&](std::size_t idx) {
    std::size_t r = pending[idx];
    per_run[r] = run_single(config, r);
    fs::path checkpoint = checkpoint_dir / ("run_" + std::to_string(r) + ".csv");
    fs::path tmp = checkpoint;
    tmp += ".tmp";
    std::ofstream(tmp) << rows_to_csv(per_run[r]);
    fs::rename(tmp, checkpoint);
  });

  std::vector<ResultRow> rows;
  for (auto& chunk : per_run) {
    rows.insert(rows.end(), chunk.begin(), chunk.end());
  }
  std::ofstream(out_dir / "results.csv") << rows_to_csv(rows);

  nlohmann::json lock;
  lock["config"] = config;
  lock["version"] = "0.1.0";
  std::vector<std::uint64_t> run_seeds;
  for (std::size_t r = 0; r < config.runs; ++r) {
    run_seeds.push_back(derive_seed(config.seed, r));
  }
  lock["run_seeds"] = run_seeds;
  std::ofstream(out_dir / "config.lock.json") << lock.dump(2) << '\n';

  std::ofstream(out_dir / "plot.py") << plot_script();
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Cate:
      return "cate";
    case ExperimentKind::Eval:
      return "eval";
    case ExperimentKind::EvalHTable:
      return "eval_h_table";
    case ExperimentKind::Opt:
      return "opt";
    case ExperimentKind::Nonlinear:
      return "nonlinear";
  }
  throw ConfigError("unknown experiment kind");
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "cate") return ExperimentKind::Cate;
  if (name == "eval") return ExperimentKind::Eval;
  if (name == "eval_h_table") return ExperimentKind::EvalHTable;
  if (name == "opt") return ExperimentKind::Opt;
  if (name == "nonlinear") return ExperimentKind::Nonlinear;
  throw ConfigError("unknown experiment kind: " + name);
}

void to_json(nlohmann::json& j, const ExperimentConfig& config) {
  std::vector<std::string> estimators;
  for (EstimatorKind est : config.estimators) estimators.push_back(to_string(est));
  j = {{"experiment", to_string(config.experiment)},
       {"estimators", estimators},
       {"n_grid", config.n_grid},
       {"m", config.m},
       {"m_prime", config.m_prime},
       {"s", config.s},
       {"h_grid", config.h_grid},
       {"h", config.h},
       {"runs", config.runs},
       {"seed", config.seed},
       {"basis", to_string(config.basis)},
       {"outcome", config.outcome},
       {"behavior", config.behavior},
       {"policy", config.policy},
       {"init_policy", config.init_policy},
       {"opt_iterations", config.opt_iterations},
       {"step_grid", config.step_grid},
       {"contrast_grid", config.contrast_grid},
       {"output_dir", config.output_dir},
       {"jobs", config.jobs}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& config) {
  config = ExperimentConfig::defaults(
      experiment_kind_from_string(j.at("experiment")));
  if (j.contains("estimators")) {
    config.estimators.clear();
    for (const auto& name : j.at("estimators")) {
      config.estimators.push_back(
          estimator_kind_from_string(name.get<std::string>()));
    }
  }
  if (j.contains("n_grid")) j.at("n_grid").get_to(config.n_grid);
  config.m = j.value("m", config.m);
  config.m_prime = j.value("m_prime", config.m_prime);
  config.s = j.value("s", config.s);
  if (j.contains("h_grid")) j.at("h_grid").get_to(config.h_grid);
  config.h = j.value("h", config.h);
  config.runs = j.value("runs", config.runs);
  config.seed = j.value("seed", config.seed);
  if (j.contains("basis")) {
    config.basis = basis_kind_from_string(j.at("basis"));
  }
  if (j.contains("outcome")) j.at("outcome").get_to(config.outcome);
  if (j.contains("behavior")) j.at("behavior").get_to(config.behavior);
  if (j.contains("policy")) j.at("policy").get_to(config.policy);
  if (j.contains("init_policy")) j.at("init_policy").get_to(config.init_policy);
  config.opt_iterations = j.value("opt_iterations", config.opt_iterations);
  if (j.contains("step_grid")) j.at("step_grid").get_to(config.step_grid);
  if (j.contains("contrast_grid")) {
    j.at("contrast_grid").get_to(config.contrast_grid);
  }
  config.output_dir = j.value("output_dir", config.output_dir);
  config.jobs = j.value("jobs", config.jobs);
  config.validate();
}

namespace {

std::string plot_script() {
  return R"PY(#!/usr/bin/env python3
"""Render figures from results.csv (written next to this script)."""
import json
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

HERE = os.path.dirname(os.path.abspath(__file__))
df = pd.read_csv(os.path.join(HERE, "results.csv"))
with open(os.path.join(HERE, "config.lock.json")) as f:
    lock = json.load(f)
kind = lock["config"]["experiment"]


def save(fig, name):
    path = os.path.join(HERE, name)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    print("wrote", path)


if kind == "cate":
    fig, ax = plt.subplots()
    sub = df[df.metric == "contrast"]
    for est, grp in sub.groupby("estimator"):
        mean = grp.groupby("axis").value.mean()
        style = {"oracle": dict(color="black", linestyle="--")}.get(est, {})
        ax.plot(mean.index, mean.values, label=est, **style)
    ax.set_xlabel("w")
    ax.set_ylabel("treatment contrast")
    ax.legend()
    save(fig, "contrast.png")
elif kind in ("eval", "nonlinear"):
    fig, ax = plt.subplots()
    sub = df[df.metric == "sq_err_edge"]
    for est, grp in sub.groupby("estimator"):
        mse = grp.groupby("axis").value.mean()
        ax.plot(mse.index, mse.values, marker="o", label=est)
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("per-edge MSE")
    ax.legend()
    save(fig, "mse_vs_n.png")
elif kind == "eval_h_table":
    sub = df[df.metric == "sq_err_edge"]
    table = sub.groupby(["estimator", "axis"]).value.agg(["mean", "sem"])
    print(table)
    fig, ax = plt.subplots()
    for est, grp in sub.groupby("estimator"):
        mse = grp.groupby("axis").value.mean()
        ax.plot(mse.index, mse.values, marker="o", label=est)
    ax.set_yscale("log")
    ax.set_xlabel("h")
    ax.set_ylabel("per-edge MSE")
    ax.legend()
    save(fig, "mse_vs_h.png")
elif kind == "opt":
    fig, ax = plt.subplots()
    sub = df[df.metric == "objective"]
    for est, grp in sub.groupby("estimator"):
        mean = grp.groupby("axis").value.mean()
        ax.plot(mean.index, mean.values, label=est)
    ax.set_xlabel("iteration")
    ax.set_ylabel("estimated objective")
    ax.legend()
    save(fig, "objective_vs_iter.png")
    print(df[df.metric == "true_value"].groupby("estimator").value.mean())
else:
    sys.exit("unknown experiment kind: " + kind)
)PY";
}

}  // namespace

}  // namespace polopt
