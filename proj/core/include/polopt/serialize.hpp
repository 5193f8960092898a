#pragma once

#include <json.hpp>

#include "polopt/basis.hpp"
#include "polopt/outcome.hpp"
#include "polopt/perturbation.hpp"
#include "polopt/policy.hpp"
#include "polopt/propensity.hpp"
#include "polopt/response.hpp"
#include "polopt/synthdata.hpp"

namespace polopt {

// JSON round-trips for the artifacts the CLI reads and writes.  Parse
// errors and unknown enum names surface as ConfigError.

void to_json(nlohmann::json& j, const OutcomeSpec& spec);
void from_json(const nlohmann::json& j, OutcomeSpec& spec);

void to_json(nlohmann::json& j, const BehaviorPolicySpec& spec);
void from_json(const nlohmann::json& j, BehaviorPolicySpec& spec);

void to_json(nlohmann::json& j, const BasisSpec& spec);
void from_json(const nlohmann::json& j, BasisSpec& spec);

void to_json(nlohmann::json& j, const PropensityModel& model);
void from_json(const nlohmann::json& j, PropensityModel& model);

void to_json(nlohmann::json& j, const OutcomeModel& model);
void from_json(const nlohmann::json& j, OutcomeModel& model);

void to_json(nlohmann::json& j, const LogisticPolicy& policy);
void from_json(const nlohmann::json& j, LogisticPolicy& policy);

void to_json(nlohmann::json& j, const MatchingInstance& instance);
void from_json(const nlohmann::json& j, MatchingInstance& instance);

void to_json(nlohmann::json& j, const DebiasedEstimate& estimate);
void from_json(const nlohmann::json& j, DebiasedEstimate& estimate);

}  // namespace polopt
