#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "polopt/outcome.hpp"
#include "polopt/policy.hpp"
#include "polopt/synthdata.hpp"

namespace polopt {

enum class ExperimentKind {
  Cate,       // conditional-contrast quality on a covariate grid
  Eval,       // policy-value error over increasing n
  EvalHTable, // policy-value error over the finite-difference parameter h
  Opt,        // subgradient policy optimization
  Nonlinear,  // policy-value error under the exponential outcome family
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Eval;
  std::vector<EstimatorKind> estimators = {
      EstimatorKind::DirectMethod, EstimatorKind::WeightedDirectMethod,
      EstimatorKind::GeneralizedRegressionDR};
  std::vector<std::size_t> n_grid;
  std::size_t m = 500;        // context count (left nodes)
  std::size_t m_prime = 300;  // matched count (right nodes)
  std::size_t s = 20;         // replicates
  std::vector<double> h_grid; // EvalHTable only
  double h = 2.0;
  std::size_t runs = 10;
  std::uint64_t seed = 7601;
  BasisKind basis = BasisKind::MisSpecified;
  OutcomeSpec outcome = OutcomeSpec::reference_polynomial();
  BehaviorPolicySpec behavior;
  LogisticPolicy policy = LogisticPolicy::reference_eval();
  LogisticPolicy init_policy;            // Opt starting point
  std::size_t opt_iterations = 60;
  std::vector<double> step_grid = {0.01, 0.1, 1.0};
  std::vector<double> contrast_grid;     // Cate covariate grid
  std::string output_dir = "results";
  std::size_t jobs = 1;

  /// Reference configuration for each experiment kind.
  static ExperimentConfig defaults(ExperimentKind kind);

  void validate() const;
  BasisSpec basis_spec() const;
};

/// One measurement in the long-format results table.  `axis` is the
/// experiment's sweep variable: n, h, iteration index, or grid covariate.
struct ResultRow {
  std::size_t run = 0;
  std::string estimator;
  double axis = 0.0;
  std::string metric;
  double value = 0.0;
};

/// All rows for a single seeded run (deterministic, thread-safe).
std::vector<ResultRow> run_single(const ExperimentConfig& config,
                                  std::size_t run_index);

/// All runs, executed on a pool of config.jobs workers and merged in run
/// order.  No files are written.
std::vector<ResultRow> run_experiment_rows(const ExperimentConfig& config);

/// Run and write artifacts under config.output_dir: results.csv,
/// config.lock.json, plot.py, and per-run checkpoint files (existing
/// checkpoints are reused, so interrupted invocations resume).
void run_experiment(const ExperimentConfig& config);

/// CSV with header "run,estimator,axis,metric,value".
std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_csv(const std::string& csv);

/// Exact representation of the data-generating outcome mean as a fitted
/// model (the reference point of the optimization experiment).
OutcomeModel truth_model(const OutcomeSpec& outcome);

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

void to_json(nlohmann::json& j, const ExperimentConfig& config);
void from_json(const nlohmann::json& j, ExperimentConfig& config);

}  // namespace polopt
