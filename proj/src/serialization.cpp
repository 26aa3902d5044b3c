#include "metaratio/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace metaratio {

using nlohmann::json;

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_real(const std::string& s) {
  if (s == "inf") return kInfinity;
  if (s == "-inf") return -kInfinity;
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(ErrorCode::ParseError, "not a real number: '" + s + "'");
  }
  return v;
}

namespace {

json real(double x) {
  if (std::isfinite(x)) return x;
  return format_real(x);
}

double real(const json& j) {
  if (j.is_string()) return parse_real(j.get<std::string>());
  return j.get<double>();
}

}  // namespace

void to_json(json& j, const ArmSummary& v) {
  j = json{{"n", v.n}, {"mean", real(v.mean)}, {"sd", real(v.sd)}};
}

void from_json(const json& j, ArmSummary& v) {
  v.n = j.at("n").get<int>();
  v.mean = real(j.at("mean"));
  v.sd = real(j.at("sd"));
}

void to_json(json& j, const StudySummary& v) {
  j = json{{"id", v.id}, {"treatment", v.treatment}, {"control", v.control}};
}

void from_json(const json& j, StudySummary& v) {
  v.id = j.at("id").get<std::string>();
  v.treatment = j.at("treatment").get<ArmSummary>();
  v.control = j.at("control").get<ArmSummary>();
}

void to_json(json& j, const EffectRow& v) {
  j = json{{"estimate", real(v.estimate)},
           {"variance", real(v.variance)},
           {"corrected", v.corrected},
           {"variance_floored", v.variance_floored}};
}

void from_json(const json& j, EffectRow& v) {
  v.estimate = real(j.at("estimate"));
  v.variance = real(j.at("variance"));
  v.corrected = j.at("corrected").get<bool>();
  v.variance_floored = j.at("variance_floored").get<bool>();
}

void to_json(json& j, const Tau2Estimate& v) {
  j = json{{"value", real(v.value)},
           {"method", to_string(v.method)},
           {"truncated", v.truncated},
           {"iterations", v.iterations},
           {"converged", v.converged}};
}

void from_json(const json& j, Tau2Estimate& v) {
  v.value = real(j.at("value"));
  v.method = parse_tau2_method(j.at("method").get<std::string>());
  v.truncated = j.at("truncated").get<bool>();
  v.iterations = j.at("iterations").get<int>();
  v.converged = j.at("converged").get<bool>();
}

void to_json(json& j, const Tau2Interval& v) {
  j = json{{"lo", real(v.lo)},
           {"hi", real(v.hi)},
           {"method", to_string(v.method)},
           {"level", v.level},
           {"lo_truncated", v.lo_truncated},
           {"hi_truncated", v.hi_truncated},
           {"hi_unbounded", v.hi_unbounded}};
}

void from_json(const json& j, Tau2Interval& v) {
  v.lo = real(j.at("lo"));
  v.hi = real(j.at("hi"));
  v.method = parse_tau2_interval_method(j.at("method").get<std::string>());
  v.level = real(j.at("level"));
  v.lo_truncated = j.at("lo_truncated").get<bool>();
  v.hi_truncated = j.at("hi_truncated").get<bool>();
  v.hi_unbounded = j.at("hi_unbounded").get<bool>();
}

void to_json(json& j, const LambdaInterval& v) {
  j = json{{"lo", real(v.lo)}, {"hi", real(v.hi)}, {"method", to_string(v.method)},
           {"level", v.level}};
}

void from_json(const json& j, LambdaInterval& v) {
  v.lo = real(j.at("lo"));
  v.hi = real(j.at("hi"));
  v.method = parse_ci_method(j.at("method").get<std::string>());
  v.level = real(j.at("level"));
}

void to_json(json& j, const PooledResult& v) {
  j = json{{"estimate", real(v.estimate)},
           {"variance", real(v.variance)},
           {"weights", v.weights},
           {"method", to_string(v.method)},
           {"tau2_used", v.tau2_used},
           {"ci", v.ci ? json(*v.ci) : json(nullptr)}};
}

void from_json(const json& j, PooledResult& v) {
  v.estimate = real(j.at("estimate"));
  v.variance = real(j.at("variance"));
  v.weights = j.at("weights").get<std::vector<double>>();
  v.method = parse_pooled_method(j.at("method").get<std::string>());
  v.tau2_used = j.at("tau2_used").get<Tau2Estimate>();
  if (j.at("ci").is_null()) {
    v.ci.reset();
  } else {
    v.ci = j.at("ci").get<LambdaInterval>();
  }
}

void to_json(json& j, const Scenario& v) {
  j = json{{"lambda", v.lambda},       {"tau2", v.tau2},         {"k", v.k},
           {"n_total", v.n_total},     {"mu_control", v.mu_control},
           {"sigma2_t", v.sigma2_t},   {"sigma2_c", v.sigma2_c}};
}

void from_json(const json& j, Scenario& v) {
  v.lambda = real(j.at("lambda"));
  v.tau2 = real(j.at("tau2"));
  v.k = j.at("k").get<int>();
  v.n_total = j.at("n_total").get<int>();
  v.mu_control = real(j.at("mu_control"));
  v.sigma2_t = real(j.at("sigma2_t"));
  v.sigma2_c = real(j.at("sigma2_c"));
}

void to_json(json& j, const MethodStat& v) {
  j = json{{"pipeline", to_string(v.pipeline)},
           {"method", v.method},
           {"metric", to_string(v.metric)},
           {"value", real(v.value)},
           {"mc_se", real(v.mc_se)},
           {"used", v.used},
           {"failures", v.failures}};
}

void from_json(const json& j, MethodStat& v) {
  v.pipeline = parse_pipeline(j.at("pipeline").get<std::string>());
  v.method = j.at("method").get<std::string>();
  v.metric = parse_metric(j.at("metric").get<std::string>());
  v.value = real(j.at("value"));
  v.mc_se = real(j.at("mc_se"));
  v.used = j.at("used").get<long>();
  v.failures = j.at("failures").get<long>();
}

void to_json(json& j, const IncidenceCount& v) {
  j = json{{"pipeline", to_string(v.pipeline)}, {"event", v.event}, {"count", v.count}};
}

void from_json(const json& j, IncidenceCount& v) {
  v.pipeline = parse_pipeline(j.at("pipeline").get<std::string>());
  v.event = j.at("event").get<std::string>();
  v.count = j.at("count").get<long>();
}

void to_json(json& j, const ScenarioResult& v) {
  j = json{{"scenario", v.scenario}, {"reps", v.reps}, {"stats", v.stats},
           {"incidence", v.incidence}};
}

void from_json(const json& j, ScenarioResult& v) {
  v.scenario = j.at("scenario").get<Scenario>();
  v.reps = j.at("reps").get<long>();
  v.stats = j.at("stats").get<std::vector<MethodStat>>();
  v.incidence = j.at("incidence").get<std::vector<IncidenceCount>>();
}

}  // namespace metaratio
