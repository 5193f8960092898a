#pragma once

#include <cstdint>
#include <string_view>

namespace polopt {

// Counter-based random streams.  Every draw is a pure function of
// (seed, stream, index), so extending a sample leaves the existing
// prefix untouched and distinct streams never interact.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view stream_name);

  /// Uniform on [0, 1).
  double uniform(std::uint64_t index) const;

  /// Standard normal (Box-Muller on two counter slots).
  double normal(std::uint64_t index) const;

  /// Bernoulli draw with success probability p.
  bool bernoulli(std::uint64_t index, double p) const;

  /// Uniform integer in [0, bound).
  std::uint64_t uniform_int(std::uint64_t index, std::uint64_t bound) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

/// SplitMix64 finalizer; also usable as a seed derivation hash.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a hash of a string, for naming sub-streams.
std::uint64_t hash_name(std::string_view name);

/// Derive a child seed, e.g. one seed per experiment run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t child);

}  // namespace polopt
