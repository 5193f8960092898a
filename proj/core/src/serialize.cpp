#include "polopt/serialize.hpp"

#include "polopt/errors.hpp"

namespace polopt {

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void to_json(nlohmann::json& j, const OutcomeSpec& spec) {
  j = {{"kind", spec.kind == OutcomeKind::Polynomial2 ? "polynomial2"
                                                      : "exponential"},
       {"coefficients", spec.coefficients},
       {"noise_sd", spec.noise_sd}};
}

void from_json(const nlohmann::json& j, OutcomeSpec& spec) {
  std::string kind = j.at("kind");
  if (kind == "polynomial2") {
    spec.kind = OutcomeKind::Polynomial2;
  } else if (kind == "exponential") {
    spec.kind = OutcomeKind::Exponential;
  } else {
    throw ConfigError("OutcomeSpec: unknown kind: " + kind);
  }
  j.at("coefficients").get_to(spec.coefficients);
  spec.noise_sd = j.value("noise_sd", 1.0);
  spec.validate();
}

void to_json(nlohmann::json& j, const BehaviorPolicySpec& spec) {
  j = {{"slope", spec.slope}, {"intercept", spec.intercept}};
}

void from_json(const nlohmann::json& j, BehaviorPolicySpec& spec) {
  spec.slope = j.at("slope");
  spec.intercept = j.at("intercept");
}

void to_json(nlohmann::json& j, const BasisSpec& spec) {
  j = {{"kind", to_string(spec.kind)}};
  if (spec.kind == BasisKind::Custom) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& m : spec.features) {
      features.push_back({{"w_pow", m.w_pow}, {"t_pow", m.t_pow}});
    }
    j["features"] = features;
  }
}

void from_json(const nlohmann::json& j, BasisSpec& spec) {
  BasisKind kind = basis_kind_from_string(j.at("kind"));
  switch (kind) {
    case BasisKind::WellSpecified:
      spec = BasisSpec::well_specified();
      return;
    case BasisKind::MisSpecified:
      spec = BasisSpec::mis_specified();
      return;
    case BasisKind::ExponentialCurve:
      spec = BasisSpec::exponential_curve();
      return;
    case BasisKind::Custom: {
      std::vector<Monomial> features;
      for (const auto& f : j.at("features")) {
        features.push_back({f.at("w_pow"), f.at("t_pow")});
      }
      spec = BasisSpec::custom(std::move(features));
      return;
    }
  }
  throw ConfigError("BasisSpec: unknown kind");
}

void to_json(nlohmann::json& j, const PropensityModel& model) {
  j = {{"gamma", to_std(model.gamma)},
       {"clip", {model.clip_lo, model.clip_hi}},
       {"converged", model.report.converged}};
}

void from_json(const nlohmann::json& j, PropensityModel& model) {
  std::vector<double> gamma = j.at("gamma");
  if (gamma.size() != 2) throw ConfigError("PropensityModel: gamma must have 2 entries");
  model.gamma = Eigen::Vector2d(gamma[0], gamma[1]);
  std::vector<double> clip = j.at("clip");
  if (clip.size() != 2) throw ConfigError("PropensityModel: clip must have 2 entries");
  model.clip_lo = clip[0];
  model.clip_hi = clip[1];
  model.report.converged = j.value("converged", true);
}

void to_json(nlohmann::json& j, const OutcomeModel& model) {
  j = {{"estimator", to_string(model.estimator)},
       {"basis", model.basis},
       {"theta", to_std(model.theta)},
       {"eps1", model.eps1},
       {"eps0", model.eps0},
       {"has_propensity", model.has_propensity}};
  if (model.has_propensity) j["propensity"] = model.propensity;
}

void from_json(const nlohmann::json& j, OutcomeModel& model) {
  model.estimator = estimator_kind_from_string(j.at("estimator"));
  j.at("basis").get_to(model.basis);
  model.theta = to_eigen(j.at("theta").get<std::vector<double>>());
  model.eps1 = j.value("eps1", 0.0);
  model.eps0 = j.value("eps0", 0.0);
  model.has_propensity = j.value("has_propensity", false);
  if (model.has_propensity) j.at("propensity").get_to(model.propensity);
  if (model.theta.size() != static_cast<Eigen::Index>(model.basis.dim())) {
    throw ConfigError("OutcomeModel: theta dimension does not match basis");
  }
}

void to_json(nlohmann::json& j, const LogisticPolicy& policy) {
  j = {{"slope", policy.slope}, {"intercept", policy.intercept}};
}

void from_json(const nlohmann::json& j, LogisticPolicy& policy) {
  policy.slope = j.at("slope");
  policy.intercept = j.at("intercept");
}

void to_json(nlohmann::json& j, const MatchingInstance& instance) {
  j = {{"m_left", instance.m_left},
       {"m_right", instance.m_right},
       {"cost_mode",
        instance.cost_mode == CostMode::NodeCost ? "node_cost" : "node_plus_base"},
       {"base", instance.base}};
}

void from_json(const nlohmann::json& j, MatchingInstance& instance) {
  instance.m_left = j.at("m_left");
  instance.m_right = j.at("m_right");
  std::string mode = j.at("cost_mode");
  if (mode == "node_cost") {
    instance.cost_mode = CostMode::NodeCost;
  } else if (mode == "node_plus_base") {
    instance.cost_mode = CostMode::NodePlusBase;
  } else {
    throw ConfigError("MatchingInstance: unknown cost_mode: " + mode);
  }
  instance.base = j.value("base", std::vector<double>{});
  instance.validate();
}

void to_json(nlohmann::json& j, const DebiasedEstimate& estimate) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : estimate.replicate_params) params.push_back(to_std(p));
  j = {{"v0", estimate.v0},
       {"replicate_values", estimate.replicate_values},
       {"rho", estimate.rho},
       {"replicate_params", params}};
}

void from_json(const nlohmann::json& j, DebiasedEstimate& estimate) {
  estimate.v0 = j.at("v0");
  j.at("replicate_values").get_to(estimate.replicate_values);
  estimate.rho = j.at("rho");
  estimate.replicate_params.clear();
  for (const auto& p : j.value("replicate_params", nlohmann::json::array())) {
    estimate.replicate_params.push_back(to_eigen(p.get<std::vector<double>>()));
  }
}

}  // namespace polopt
