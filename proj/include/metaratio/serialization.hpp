#pragma once

// JSON encoding of the domain types. Non-finite reals are written as the
// strings "inf", "-inf" and "nan" so emitted documents never carry a raw
// float infinity.

#include <string>

#include "json.hpp"
#include "metaratio/model.hpp"

namespace metaratio {

void to_json(nlohmann::json& j, const ArmSummary& v);
void from_json(const nlohmann::json& j, ArmSummary& v);
void to_json(nlohmann::json& j, const StudySummary& v);
void from_json(const nlohmann::json& j, StudySummary& v);
void to_json(nlohmann::json& j, const EffectRow& v);
void from_json(const nlohmann::json& j, EffectRow& v);
void to_json(nlohmann::json& j, const Tau2Estimate& v);
void from_json(const nlohmann::json& j, Tau2Estimate& v);
void to_json(nlohmann::json& j, const Tau2Interval& v);
void from_json(const nlohmann::json& j, Tau2Interval& v);
void to_json(nlohmann::json& j, const LambdaInterval& v);
void from_json(const nlohmann::json& j, LambdaInterval& v);
void to_json(nlohmann::json& j, const PooledResult& v);
void from_json(const nlohmann::json& j, PooledResult& v);
void to_json(nlohmann::json& j, const Scenario& v);
void from_json(const nlohmann::json& j, Scenario& v);
void to_json(nlohmann::json& j, const MethodStat& v);
void from_json(const nlohmann::json& j, MethodStat& v);
void to_json(nlohmann::json& j, const IncidenceCount& v);
void from_json(const nlohmann::json& j, IncidenceCount& v);
void to_json(nlohmann::json& j, const ScenarioResult& v);
void from_json(const nlohmann::json& j, ScenarioResult& v);

/// Shortest decimal text that reads back to the same double; "inf"/"-inf"
/// for infinities and "nan" for NaN.
std::string format_real(double x);
double parse_real(const std::string& s);

}  // namespace metaratio
