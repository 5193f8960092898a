#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace polopt {

/// Solution of a downstream linear response problem.
struct ResponseSolution {
  std::vector<double> x;  // one entry per decision coordinate
  double value = 0.0;
};

/// Interface over min_x { c.x : x in X } for a fixed feasible set.
///
/// Implementations must be immutable after construction; solve() is
/// reentrant and safe to call concurrently.
class LinearResponseOracle {
 public:
  virtual ~LinearResponseOracle() = default;

  virtual std::size_t dimension() const = 0;
  virtual ResponseSolution solve(std::span<const double> cost) const = 0;
};

enum class CostMode {
  NodeCost,      // edge cost = left-node cost
  NodePlusBase,  // edge cost = left-node cost + fixed base matrix entry
};

/// Rectangular bipartite matching: every right node matched exactly once,
/// every left node at most once (m_right <= m_left).
struct MatchingInstance {
  std::size_t m_left = 0;
  std::size_t m_right = 0;
  CostMode cost_mode = CostMode::NodeCost;
  std::vector<double> base;  // row-major m_left x m_right, NodePlusBase only

  double base_at(std::size_t left, std::size_t right) const {
    return base[left * m_right + right];
  }

  void validate() const;

  /// Instance with a seeded standard-normal base matrix.
  static MatchingInstance with_random_base(std::size_t m_left,
                                           std::size_t m_right,
                                           std::uint64_t seed,
                                           double scale = 1.0);
};

struct MatchingResult {
  std::vector<std::size_t> assignment;  // right index -> left index
  double value = 0.0;
};

/// Min-cost rectangular assignment by shortest augmenting paths.
/// NodeCost instances take a partial-sort fast path (the optimum picks the
/// m_right cheapest left nodes).
MatchingResult solve_matching(const MatchingInstance& instance,
                              std::span<const double> left_costs);

/// Exact minimum by enumerating all injections right -> left (m_left <= 8).
double brute_force_value(const MatchingInstance& instance,
                         std::span<const double> left_costs);

/// Matching instance exposed through the oracle interface; x is the
/// 0/1 indicator over left nodes.  For NodePlusBase the value includes the
/// base-matrix contribution of the matched edges.
class MatchingOracle : public LinearResponseOracle {
 public:
  explicit MatchingOracle(MatchingInstance instance);

  std::size_t dimension() const override { return instance_.m_left; }
  ResponseSolution solve(std::span<const double> cost) const override;

  const MatchingInstance& instance() const { return instance_; }

 private:
  MatchingInstance instance_;
};

/// Feasible set {x in [0,1]^m : sum x = k}; solve picks the k smallest
/// costs, ties broken toward the lowest index.
class SelectKOracle : public LinearResponseOracle {
 public:
  SelectKOracle(std::size_t m, std::size_t k);

  std::size_t dimension() const override { return m_; }
  ResponseSolution solve(std::span<const double> cost) const override;

  std::size_t k() const { return k_; }

 private:
  std::size_t m_;
  std::size_t k_;
};

}  // namespace polopt
