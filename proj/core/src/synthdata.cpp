#include "polopt/synthdata.hpp"

#include <cmath>
#include <sstream>

#include "polopt/errors.hpp"
#include "polopt/rng.hpp"

namespace polopt {

void OutcomeSpec::validate() const {
  if (coefficients.size() != 6) {
    throw ConfigError("OutcomeSpec requires exactly 6 coefficients, got " +
                      std::to_string(coefficients.size()));
  }
  if (noise_sd < 0.0) throw ConfigError("noise_sd must be >= 0");
}

OutcomeSpec OutcomeSpec::reference_polynomial(double noise_sd) {
  return {OutcomeKind::Polynomial2, {5, 1, -1, 2, 2, -1}, noise_sd};
}

OutcomeSpec OutcomeSpec::reference_exponential(double noise_sd) {
  return {OutcomeKind::Exponential, {5, 0.05, 0.5, -2, -2, -1}, noise_sd};
}

double BehaviorPolicySpec::treat_prob(double w) const {
  return 1.0 / (1.0 + std::exp(-slope * w + intercept));
}

std::vector<double> gen_covariates(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw EmptyInputError("gen_covariates: n must be >= 1");
  RandomStream stream(seed, "covariates");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = stream.normal(i);
  return w;
}

double true_outcome_mean(const OutcomeSpec& spec, int t, double w) {
  spec.validate();
  const auto& a = spec.coefficients;
  double td = static_cast<double>(t);
  switch (spec.kind) {
    case OutcomeKind::Polynomial2:
      return a[0] + a[1] * w + a[2] * td + a[3] * w * w + a[4] * w * td +
             a[5] * td * td;
    case OutcomeKind::Exponential:
      return a[0] + a[1] * std::exp(a[2] + a[3] * w) + a[4] * td +
             a[5] * td * w * w;
  }
  throw ConfigError("unknown outcome kind");
}

ObservationalDataset gen_dataset(const OutcomeSpec& outcome,
                                 const BehaviorPolicySpec& behavior,
                                 std::size_t n, std::uint64_t seed) {
  if (n == 0) throw EmptyInputError("gen_dataset: n must be >= 1");
  outcome.validate();
  RandomStream ws(seed, "covariates");
  RandomStream ts(seed, "treatment");
  RandomStream es(seed, "noise");
  ObservationalDataset data;
  data.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double w = ws.normal(i);
    int t = ts.bernoulli(i, behavior.treat_prob(w)) ? 1 : 0;
    double c = true_outcome_mean(outcome, t, w) +
               outcome.noise_sd * es.normal(i);
    data.rows[i] = {w, t, c};
  }
  return data;
}

ContextSet gen_contexts(std::size_t m, std::uint64_t seed) {
  if (m == 0) throw EmptyInputError("gen_contexts: m must be >= 1");
  RandomStream stream(seed, "contexts");
  ContextSet ctx;
  ctx.w.resize(m);
  for (std::size_t i = 0; i < m; ++i) ctx.w[i] = stream.normal(i);
  return ctx;
}

namespace {
std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}
}  // namespace

std::string dataset_to_csv(const ObservationalDataset& data) {
  std::string out = "w,t,c\n";
  for (const auto& r : data.rows) {
    out += fmt(r.w) + "," + std::to_string(r.t) + "," + fmt(r.c) + "\n";
  }
  return out;
}

ObservationalDataset dataset_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  ObservationalDataset data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f;
    Observation o;
    std::getline(ls, f, ',');
    o.w = std::stod(f);
    std::getline(ls, f, ',');
    o.t = std::stoi(f);
    std::getline(ls, f, ',');
    o.c = std::stod(f);
    data.rows.push_back(o);
  }
  if (data.rows.empty()) throw EmptyInputError("dataset_from_csv: no rows");
  return data;
}

std::string contexts_to_csv(const ContextSet& contexts) {
  std::string out = "w\n";
  for (double w : contexts.w) out += fmt(w) + "\n";
  return out;
}

ContextSet contexts_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  ContextSet ctx;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ctx.w.push_back(std::stod(line));
  }
  if (ctx.w.empty()) throw EmptyInputError("contexts_from_csv: no rows");
  return ctx;
}

}  // namespace polopt
