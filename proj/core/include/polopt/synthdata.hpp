#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace polopt {

/// Ground-truth conditional outcome mean family.
enum class OutcomeKind { Polynomial2, Exponential };

/// Ground-truth data-generating outcome model.
///
/// Polynomial2: coefficients on (1, w, t, w^2, w*t, t^2).
/// Exponential: [a1, a2, b1, b2, c1, c2] in
///   a1 + a2*exp(b1 + b2*w) + c1*t + c2*t*w^2.
struct OutcomeSpec {
  OutcomeKind kind = OutcomeKind::Polynomial2;
  std::vector<double> coefficients;
  double noise_sd = 1.0;

  void validate() const;

  /// The reference quadratic outcome model with coefficients [5,1,-1,2,2,-1].
  static OutcomeSpec reference_polynomial(double noise_sd = 1.0);
  /// The reference exponential model with [5, 0.05, 0.5, -2, -2, -1].
  static OutcomeSpec reference_exponential(double noise_sd = 1.0);
};

/// Logistic treatment-assignment mechanism of the training data:
/// P(T=1 | W=w) = 1 / (1 + exp(-slope*w + intercept)).
/// Note the intercept enters with a negative sign.
struct BehaviorPolicySpec {
  double slope = 0.5;
  double intercept = 0.5;

  double treat_prob(double w) const;
};

struct Observation {
  double w = 0.0;
  int t = 0;
  double c = 0.0;
};

/// Training rows (w, t, c).
struct ObservationalDataset {
  std::vector<Observation> rows;

  std::size_t size() const { return rows.size(); }
};

/// Fresh covariate draws defining the downstream decision problem.
struct ContextSet {
  std::vector<double> w;

  std::size_t size() const { return w.size(); }
};

/// n i.i.d. standard-normal covariates; bitwise reproducible per seed.
std::vector<double> gen_covariates(std::size_t n, std::uint64_t seed);

/// Noiseless conditional mean under the data-generating process.
double true_outcome_mean(const OutcomeSpec& spec, int t, double w);

/// Draw a full (w, t, c) dataset.  Covariates, treatments, and noise use
/// independent sub-streams, so growing n extends the sample.
ObservationalDataset gen_dataset(const OutcomeSpec& outcome,
                                 const BehaviorPolicySpec& behavior,
                                 std::size_t n, std::uint64_t seed);

/// Out-of-sample context draws (stream distinct from gen_dataset).
ContextSet gen_contexts(std::size_t m, std::uint64_t seed);

/// CSV with header "w,t,c".
std::string dataset_to_csv(const ObservationalDataset& data);
ObservationalDataset dataset_from_csv(const std::string& csv);

/// CSV with header "w".
std::string contexts_to_csv(const ContextSet& contexts);
ContextSet contexts_from_csv(const std::string& csv);

}  // namespace polopt
