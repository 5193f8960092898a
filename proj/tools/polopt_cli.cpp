#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "polopt/errors.hpp"
#include "polopt/experiments.hpp"
#include "polopt/inference.hpp"
#include "polopt/perturbation.hpp"
#include "polopt/policy_opt.hpp"
#include "polopt/rng.hpp"
#include "polopt/serialize.hpp"

namespace {

using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw polopt::ConfigError("cannot open file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw polopt::ConfigError("cannot write file: " + path);
  out << content;
}

/// POLOPT_SEED overrides any configured or flag-provided seed.
std::uint64_t effective_seed(std::uint64_t seed) {
  if (const char* env = std::getenv("POLOPT_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw polopt::ConfigError("POLOPT_SEED is not a valid integer: " +
                                std::string(env));
    }
  }
  return seed;
}

struct CommonModelFlags {
  std::string estimator = "wdm";
  std::string basis = "mis_specified";
};

polopt::FitRecipe to_recipe(const CommonModelFlags& flags) {
  polopt::FitRecipe recipe;
  recipe.estimator = polopt::estimator_kind_from_string(flags.estimator);
  polopt::BasisSpec spec;
  polopt::from_json(json{{"kind", flags.basis}}, spec);
  recipe.basis = spec;
  return recipe;
}

int run(int argc, char** argv) {
  CLI::App app{"Off-policy evaluation and optimization of intervention "
               "policies with a downstream matching response"};
  app.require_subcommand(1);
  // Keep the short option space free for parameter names like --h.
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_help_all_flag("--help-all", "Print help for all subcommands");

  // ---- simulate ----
  auto* simulate = app.add_subcommand(
      "simulate", "Draw an observational dataset and optional context set");
  std::size_t sim_n = 1000, sim_m = 0;
  std::uint64_t sim_seed = 1;
  std::string sim_outcome = "polynomial2";
  double sim_noise = 1.0;
  polopt::BehaviorPolicySpec sim_behavior;
  std::string sim_out = "data.csv", sim_ctx_out = "contexts.csv";
  simulate->add_option("--n", sim_n, "Training rows");
  simulate->add_option("--seed", sim_seed, "RNG seed");
  simulate->add_option("--outcome", sim_outcome,
                       "Outcome family: polynomial2 | exponential");
  simulate->add_option("--noise-sd", sim_noise, "Outcome noise sd");
  simulate->add_option("--behavior-slope", sim_behavior.slope);
  simulate->add_option("--behavior-intercept", sim_behavior.intercept);
  simulate->add_option("--out", sim_out, "Dataset CSV path");
  simulate->add_option("--contexts", sim_m, "Also draw this many contexts");
  simulate->add_option("--contexts-out", sim_ctx_out, "Context CSV path");

  // ---- fit ----
  auto* fit = app.add_subcommand("fit", "Fit propensity and outcome models");
  std::string fit_data = "data.csv", fit_out = "model.json";
  CommonModelFlags fit_flags;
  fit->add_option("--data", fit_data, "Dataset CSV")->required();
  fit->add_option("--estimator", fit_flags.estimator, "dm | wdm | grdr");
  fit->add_option("--basis", fit_flags.basis,
                  "well_specified | mis_specified | exponential_curve");
  fit->add_option("--out", fit_out, "Model JSON path");

  // ---- evaluate ----
  auto* evaluate = app.add_subcommand(
      "evaluate", "Plug-in policy value on a context set");
  std::string eval_model = "model.json", eval_ctx = "contexts.csv";
  polopt::LogisticPolicy eval_policy = polopt::LogisticPolicy::reference_eval();
  std::size_t eval_mprime = 0;
  std::string eval_out;
  evaluate->add_option("--model", eval_model, "Model JSON")->required();
  evaluate->add_option("--contexts", eval_ctx, "Context CSV")->required();
  evaluate->add_option("--policy-slope", eval_policy.slope);
  evaluate->add_option("--policy-intercept", eval_policy.intercept);
  evaluate->add_option("--m-prime", eval_mprime, "Matched count")->required();
  evaluate->add_option("--out", eval_out, "Optional JSON output path");

  // ---- debias ----
  auto* debias_cmd = app.add_subcommand(
      "debias", "Perturbation-debiased policy value");
  std::string deb_data = "data.csv", deb_ctx = "contexts.csv", deb_out;
  CommonModelFlags deb_flags;
  polopt::LogisticPolicy deb_policy = polopt::LogisticPolicy::reference_eval();
  std::size_t deb_mprime = 0, deb_s = 20;
  double deb_h = 2.0;
  std::uint64_t deb_seed = 1;
  std::string deb_strategy = "bootstrap";
  debias_cmd->add_option("--data", deb_data, "Dataset CSV")->required();
  debias_cmd->add_option("--contexts", deb_ctx, "Context CSV")->required();
  debias_cmd->add_option("--estimator", deb_flags.estimator, "dm | wdm | grdr");
  debias_cmd->add_option("--basis", deb_flags.basis);
  debias_cmd->add_option("--policy-slope", deb_policy.slope);
  debias_cmd->add_option("--policy-intercept", deb_policy.intercept);
  debias_cmd->add_option("--m-prime", deb_mprime, "Matched count")->required();
  debias_cmd->add_option("--h", deb_h, "Finite-difference parameter");
  debias_cmd->add_option("--s", deb_s, "Replicates");
  debias_cmd->add_option("--seed", deb_seed, "Replicate RNG seed");
  debias_cmd->add_option("--strategy", deb_strategy, "bootstrap | gaussian");
  debias_cmd->add_option("--out", deb_out, "Optional JSON output path");

  // ---- optimize ----
  auto* optimize_cmd = app.add_subcommand(
      "optimize", "Subgradient policy search over the logistic class");
  std::string opt_data = "data.csv", opt_ctx = "contexts.csv",
              opt_out = "trajectory.csv";
  CommonModelFlags opt_flags;
  polopt::LogisticPolicy opt_init;
  std::size_t opt_mprime = 0, opt_iters = 60, opt_s = 20;
  double opt_step = 0.1, opt_h = 2.0;
  bool opt_no_perturb = false;
  std::uint64_t opt_seed = 1;
  optimize_cmd->add_option("--data", opt_data, "Dataset CSV")->required();
  optimize_cmd->add_option("--contexts", opt_ctx, "Context CSV")->required();
  optimize_cmd->add_option("--estimator", opt_flags.estimator, "dm | wdm | grdr");
  optimize_cmd->add_option("--basis", opt_flags.basis);
  optimize_cmd->add_option("--m-prime", opt_mprime, "Matched count")->required();
  optimize_cmd->add_option("--step", opt_step, "Step size");
  optimize_cmd->add_option("--iterations", opt_iters);
  optimize_cmd->add_option("--h", opt_h, "Finite-difference parameter");
  optimize_cmd->add_option("--s", opt_s, "Replicates");
  optimize_cmd->add_option("--init-slope", opt_init.slope);
  optimize_cmd->add_option("--init-intercept", opt_init.intercept);
  optimize_cmd->add_flag("--no-perturbation", opt_no_perturb,
                         "Descend on the raw plug-in objective");
  optimize_cmd->add_option("--seed", opt_seed, "Replicate RNG seed");
  optimize_cmd->add_option("--out", opt_out, "Trajectory CSV path");

  // ---- reproduce ----
  auto* reproduce = app.add_subcommand(
      "reproduce", "Run a frozen experiment configuration");
  std::string rep_name, rep_config, rep_outdir;
  std::size_t rep_jobs = 0;
  reproduce->add_option(
      "name", rep_name,
      "cate | cate_well | eval | eval_well | h_table | h_table_well | opt | "
      "nonlinear (or use --config)");
  reproduce->add_option("--config", rep_config, "Explicit config JSON path");
  reproduce->add_option("--output-dir", rep_outdir, "Override output dir");
  reproduce->add_option("--jobs", rep_jobs, "Worker pool size");
  std::size_t rep_runs_value = 0;
  auto* runs_opt = reproduce->add_option("--runs", rep_runs_value,
                                         "Override run count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*simulate) {
    polopt::OutcomeSpec outcome =
        sim_outcome == "exponential"
            ? polopt::OutcomeSpec::reference_exponential(sim_noise)
            : polopt::OutcomeSpec::reference_polynomial(sim_noise);
    if (sim_outcome != "polynomial2" && sim_outcome != "exponential") {
      throw polopt::ConfigError("simulate: unknown outcome: " + sim_outcome);
    }
    std::uint64_t seed = effective_seed(sim_seed);
    auto data = polopt::gen_dataset(outcome, sim_behavior, sim_n, seed);
    write_file(sim_out, polopt::dataset_to_csv(data));
    std::cout << "wrote " << sim_out << " (" << data.size() << " rows)\n";
    if (sim_m > 0) {
      auto contexts = polopt::gen_contexts(sim_m, polopt::derive_seed(seed, 1));
      write_file(sim_ctx_out, polopt::contexts_to_csv(contexts));
      std::cout << "wrote " << sim_ctx_out << " (" << contexts.size()
                << " rows)\n";
    }
    return 0;
  }

  if (*fit) {
    auto data = polopt::dataset_from_csv(read_file(fit_data));
    auto model = polopt::fit_recipe(to_recipe(fit_flags), data);
    json j = model;
    write_file(fit_out, j.dump(2) + "\n");
    std::cout << "wrote " << fit_out
              << " (converged=" << (model.report.converged ? "yes" : "no")
              << ")\n";
    return 0;
  }

  if (*evaluate) {
    polopt::OutcomeModel model;
    json::parse(read_file(eval_model)).get_to(model);
    auto contexts = polopt::contexts_from_csv(read_file(eval_ctx));
    polopt::MatchingOracle oracle(
        {contexts.size(), eval_mprime, polopt::CostMode::NodeCost, {}});
    auto solution =
        polopt::plug_in_objective(model, eval_policy, contexts, oracle);
    json j = {{"value", solution.value}, {"x", solution.x}};
    std::cout << "value " << solution.value << "\n";
    if (!eval_out.empty()) write_file(eval_out, j.dump(2) + "\n");
    return 0;
  }

  if (*debias_cmd) {
    auto data = polopt::dataset_from_csv(read_file(deb_data));
    auto contexts = polopt::contexts_from_csv(read_file(deb_ctx));
    polopt::FitRecipe recipe = to_recipe(deb_flags);
    polopt::MatchingOracle oracle(
        {contexts.size(), deb_mprime, polopt::CostMode::NodeCost, {}});
    auto model0 = polopt::fit_recipe(recipe, data);
    recipe.theta_init = model0.theta;
    std::uint64_t seed = effective_seed(deb_seed);
    std::vector<polopt::OutcomeModel> replicates;
    if (deb_strategy == "bootstrap") {
      replicates = polopt::gen_replicates_bootstrap(data, recipe, deb_h, deb_s,
                                                    seed);
    } else if (deb_strategy == "gaussian") {
      Eigen::MatrixXd sigma = polopt::estimate_sigma(model0, data);
      replicates = polopt::gaussian_replicate_models(model0, sigma, data.size(),
                                                     deb_h, deb_s, seed);
    } else {
      throw polopt::ConfigError("debias: unknown strategy: " + deb_strategy);
    }
    auto estimate =
        polopt::debias(deb_policy, model0, replicates, contexts, oracle, deb_h);
    json j = estimate;
    std::cout << "v0 " << estimate.v0 << "\nrho " << estimate.rho << "\n";
    if (!deb_out.empty()) write_file(deb_out, j.dump(2) + "\n");
    return 0;
  }

  if (*optimize_cmd) {
    auto data = polopt::dataset_from_csv(read_file(opt_data));
    auto contexts = polopt::contexts_from_csv(read_file(opt_ctx));
    polopt::FitRecipe recipe = to_recipe(opt_flags);
    polopt::MatchingOracle oracle(
        {contexts.size(), opt_mprime, polopt::CostMode::NodeCost, {}});
    auto model0 = polopt::fit_recipe(recipe, data);
    recipe.theta_init = model0.theta;
    std::vector<polopt::OutcomeModel> replicates;
    if (!opt_no_perturb) {
      replicates = polopt::gen_replicates_bootstrap(
          data, recipe, opt_h, opt_s, effective_seed(opt_seed));
    }
    polopt::OptimizerConfig config;
    config.step_size = opt_step;
    config.iterations = opt_iters;
    config.init = opt_init;
    config.use_perturbation = !opt_no_perturb;
    config.h = opt_h;
    auto trajectory =
        polopt::optimize(config, model0, replicates, contexts, oracle);
    write_file(opt_out, polopt::trajectory_to_csv(trajectory));
    std::cout << "final slope " << trajectory.final_policy.slope
              << " intercept " << trajectory.final_policy.intercept
              << " objective " << trajectory.points.back().objective << "\n";
    return 0;
  }

  if (*reproduce) {
    polopt::ExperimentConfig config;
    if (!rep_config.empty()) {
      json::parse(read_file(rep_config)).get_to(config);
    } else if (!rep_name.empty()) {
      std::filesystem::path dir(POLOPT_CONFIG_DIR);
      std::filesystem::path file = dir / (rep_name + ".json");
      if (!std::filesystem::exists(file)) {
        throw polopt::ConfigError("reproduce: no frozen config named '" +
                                  rep_name + "' (" + file.string() + ")");
      }
      json::parse(read_file(file.string())).get_to(config);
    } else {
      throw polopt::ConfigError("reproduce: give a name or --config");
    }
    if (!rep_outdir.empty()) config.output_dir = rep_outdir;
    if (rep_jobs > 0) config.jobs = rep_jobs;
    if (*runs_opt) config.runs = rep_runs_value;
    config.seed = effective_seed(config.seed);
    polopt::run_experiment(config);
    std::cout << "wrote " << config.output_dir << "/results.csv\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const polopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const polopt::Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}
