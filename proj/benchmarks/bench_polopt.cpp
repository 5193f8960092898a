#include <benchmark/benchmark.h>

#include <vector>

#include "polopt/outcome.hpp"
#include "polopt/perturbation.hpp"
#include "polopt/policy.hpp"
#include "polopt/policy_opt.hpp"
#include "polopt/propensity.hpp"
#include "polopt/response.hpp"
#include "polopt/rng.hpp"
#include "polopt/synthdata.hpp"

namespace {

using namespace polopt;

std::vector<double> random_costs(std::size_t m, std::uint64_t seed) {
  RandomStream stream(seed, "bench-costs");
  std::vector<double> costs(m);
  for (std::size_t i = 0; i < m; ++i) costs[i] = 4.0 * stream.uniform(i) - 2.0;
  return costs;
}

void BM_MatchingNodeCost(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  MatchingInstance instance{m, (3 * m) / 5, CostMode::NodeCost, {}};
  std::vector<double> costs = random_costs(m, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_matching(instance, costs));
  }
}
BENCHMARK(BM_MatchingNodeCost)->Arg(100)->Arg(500)->Arg(2000);

void BM_MatchingNodePlusBase(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  MatchingInstance instance =
      MatchingInstance::with_random_base(m, (3 * m) / 5, 2);
  std::vector<double> costs = random_costs(m, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_matching(instance, costs));
  }
}
BENCHMARK(BM_MatchingNodePlusBase)->Arg(20)->Arg(60)->Arg(120);

void BM_FitOutcome(benchmark::State& state) {
  ObservationalDataset data = gen_dataset(OutcomeSpec::reference_polynomial(),
                                          BehaviorPolicySpec{}, 2000, 4);
  PropensityModel propensity = fit_propensity(data);
  EstimatorKind kind = static_cast<EstimatorKind>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        fit_outcome(kind, data, BasisSpec::well_specified(), propensity));
  }
}
BENCHMARK(BM_FitOutcome)
    ->Arg(static_cast<int>(polopt::EstimatorKind::DirectMethod))
    ->Arg(static_cast<int>(polopt::EstimatorKind::WeightedDirectMethod))
    ->Arg(static_cast<int>(polopt::EstimatorKind::GeneralizedRegressionDR));

void BM_FitExponential(benchmark::State& state) {
  ObservationalDataset data = gen_dataset(OutcomeSpec::reference_exponential(),
                                          BehaviorPolicySpec{}, 1000, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_dm(data, BasisSpec::exponential_curve()));
  }
}
BENCHMARK(BM_FitExponential);

void BM_Debias(benchmark::State& state) {
  ObservationalDataset data = gen_dataset(OutcomeSpec::reference_polynomial(),
                                          BehaviorPolicySpec{}, 3000, 6);
  FitRecipe recipe;
  recipe.estimator = EstimatorKind::WeightedDirectMethod;
  recipe.basis = BasisSpec::mis_specified();
  OutcomeModel model0 = fit_recipe(recipe, data);
  recipe.theta_init = model0.theta;
  ContextSet contexts = gen_contexts(500, 7);
  MatchingOracle oracle({500, 300, CostMode::NodeCost, {}});
  LogisticPolicy policy = LogisticPolicy::reference_eval();
  const double h = 2.0;
  for (auto _ : state) {
    auto replicates = gen_replicates_bootstrap(data, recipe, h, 20, 8);
    benchmark::DoNotOptimize(
        debias(policy, model0, replicates, contexts, oracle, h));
  }
}
BENCHMARK(BM_Debias)->Unit(benchmark::kMillisecond);

void BM_DanskinSubgradient(benchmark::State& state) {
  ObservationalDataset data = gen_dataset(OutcomeSpec::reference_polynomial(),
                                          BehaviorPolicySpec{}, 1000, 9);
  OutcomeModel model = fit_dm(data, BasisSpec::well_specified());
  ContextSet contexts = gen_contexts(100, 10);
  MatchingOracle oracle({100, 60, CostMode::NodeCost, {}});
  LogisticPolicy policy = LogisticPolicy::reference_eval();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        danskin_subgradient(policy, model, contexts, oracle));
  }
}
BENCHMARK(BM_DanskinSubgradient);

}  // namespace
