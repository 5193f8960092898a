#include "polopt/response.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "polopt/errors.hpp"
#include "polopt/rng.hpp"

namespace polopt {

namespace {

void check_costs(const MatchingInstance& instance,
                 std::span<const double> left_costs) {
  if (left_costs.size() != instance.m_left) {
    throw ConfigError("solve_matching: expected " +
                      std::to_string(instance.m_left) + " costs, got " +
                      std::to_string(left_costs.size()));
  }
  for (double c : left_costs) {
    if (!std::isfinite(c)) {
      throw InvalidCostError("solve_matching: non-finite cost entry");
    }
  }
}

double edge_cost(const MatchingInstance& instance,
                 std::span<const double> left_costs, std::size_t left,
                 std::size_t right) {
  double c = left_costs[left];
  if (instance.cost_mode == CostMode::NodePlusBase) {
    c += instance.base_at(left, right);
  }
  return c;
}

/// Indices of left nodes ordered by (cost, index).
std::vector<std::size_t> argsort_costs(std::span<const double> costs) {
  std::vector<std::size_t> order(costs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (costs[a] != costs[b]) return costs[a] < costs[b];
    return a < b;
  });
  return order;
}

}  // namespace

void MatchingInstance::validate() const {
  if (m_right == 0) throw EmptyInputError("MatchingInstance: m_right must be >= 1");
  if (m_left < m_right) {
    throw InfeasibleError("MatchingInstance: m_left (" + std::to_string(m_left) +
                          ") < m_right (" + std::to_string(m_right) +
                          "); no injection exists");
  }
  if (cost_mode == CostMode::NodePlusBase && base.size() != m_left * m_right) {
    throw ConfigError("MatchingInstance: base matrix must be m_left*m_right");
  }
}

MatchingInstance MatchingInstance::with_random_base(std::size_t m_left,
                                                    std::size_t m_right,
                                                    std::uint64_t seed,
                                                    double scale) {
  MatchingInstance instance;
  instance.m_left = m_left;
  instance.m_right = m_right;
  instance.cost_mode = CostMode::NodePlusBase;
  instance.base.resize(m_left * m_right);
  RandomStream stream(seed, "matching-base");
  for (std::size_t i = 0; i < instance.base.size(); ++i) {
    instance.base[i] = scale * stream.normal(i);
  }
  instance.validate();
  return instance;
}

MatchingResult solve_matching(const MatchingInstance& instance,
                              std::span<const double> left_costs) {
  instance.validate();
  check_costs(instance, left_costs);

  MatchingResult result;
  result.assignment.assign(instance.m_right, 0);

  if (instance.cost_mode == CostMode::NodeCost) {
    // Base-free costs decouple over right nodes: the optimum uses the
    // m_right cheapest left nodes.  Pairing them with right nodes in
    // ascending index order makes the assignment lexicographically
    // smallest among optima.
    auto order = argsort_costs(left_costs);
    std::vector<std::size_t> chosen(order.begin(),
                                    order.begin() +
                                        static_cast<std::ptrdiff_t>(instance.m_right));
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t j = 0; j < instance.m_right; ++j) {
      result.assignment[j] = chosen[j];
      result.value += left_costs[chosen[j]];
    }
    return result;
  }

  // Shortest augmenting path assignment with potentials (rows = right
  // nodes, columns = left nodes, rows <= columns).
  const std::size_t n = instance.m_right;
  const std::size_t m = instance.m_left;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      std::size_t i0 = p[j0];
      std::size_t j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur =
            edge_cost(instance, left_costs, j - 1, i0 - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    result.assignment[p[j] - 1] = j - 1;
    result.value += edge_cost(instance, left_costs, j - 1, p[j] - 1);
  }
  return result;
}

namespace {

double brute_force_rec(const MatchingInstance& instance,
                       std::span<const double> left_costs, std::size_t right,
                       unsigned used_mask) {
  if (right == instance.m_right) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t left = 0; left < instance.m_left; ++left) {
    if (used_mask & (1u << left)) continue;
    double c = edge_cost(instance, left_costs, left, right) +
               brute_force_rec(instance, left_costs, right + 1,
                               used_mask | (1u << left));
    best = std::min(best, c);
  }
  return best;
}

}  // namespace

double brute_force_value(const MatchingInstance& instance,
                         std::span<const double> left_costs) {
  instance.validate();
  check_costs(instance, left_costs);
  if (instance.m_left > 8) {
    throw ConfigError("brute_force_value: m_left must be <= 8");
  }
  return brute_force_rec(instance, left_costs, 0, 0u);
}

MatchingOracle::MatchingOracle(MatchingInstance instance)
    : instance_(std::move(instance)) {
  instance_.validate();
}

ResponseSolution MatchingOracle::solve(std::span<const double> cost) const {
  MatchingResult match = solve_matching(instance_, cost);
  ResponseSolution solution;
  solution.x.assign(instance_.m_left, 0.0);
  for (std::size_t left : match.assignment) solution.x[left] = 1.0;
  solution.value = match.value;
  return solution;
}

SelectKOracle::SelectKOracle(std::size_t m, std::size_t k) : m_(m), k_(k) {
  if (m == 0) throw EmptyInputError("SelectKOracle: m must be >= 1");
  if (k > m) throw InfeasibleError("SelectKOracle: k must be <= m");
}

ResponseSolution SelectKOracle::solve(std::span<const double> cost) const {
  if (cost.size() != m_) {
    throw ConfigError("SelectKOracle: expected " + std::to_string(m_) +
                      " costs, got " + std::to_string(cost.size()));
  }
  for (double c : cost) {
    if (!std::isfinite(c)) {
      throw InvalidCostError("SelectKOracle: non-finite cost entry");
    }
  }
  auto order = argsort_costs(cost);
  ResponseSolution solution;
  solution.x.assign(m_, 0.0);
  for (std::size_t j = 0; j < k_; ++j) {
    solution.x[order[j]] = 1.0;
    solution.value += cost[order[j]];
  }
  return solution;
}

}  // namespace polopt
