#include "metaratio/model.hpp"

#include <cmath>
#include <string>

namespace metaratio {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveMean: return "NonPositiveMean";
    case ErrorCode::ArmTooSmall: return "ArmTooSmall";
    case ErrorCode::NegativeSD: return "NegativeSD";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::NonPositiveMoment: return "NonPositiveMoment";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::TooFewStudies: return "TooFewStudies";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::NonRectangularGrid: return "NonRectangularGrid";
  }
  return "Unknown";
}

namespace {

void check_arm(const ArmSummary& arm, const std::string& study_id, const char* which) {
  const std::string where = "study '" + study_id + "' " + which + " arm";
  if (arm.n < 2) {
    throw Error(ErrorCode::ArmTooSmall, where + " has n = " + std::to_string(arm.n));
  }
  if (!std::isfinite(arm.mean) || !std::isfinite(arm.sd)) {
    throw Error(ErrorCode::NonFiniteValue, where + " has a non-finite mean or sd");
  }
  if (arm.sd < 0.0) {
    throw Error(ErrorCode::NegativeSD, where + " has negative sd");
  }
  if (arm.mean <= 0.0) {
    throw Error(ErrorCode::NonPositiveMean, where + " has non-positive mean");
  }
}

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const Enum (&all)[N], const char* what) {
  for (Enum e : all) {
    if (to_string(e) == s) return e;
  }
  throw Error(ErrorCode::ParseError, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

const StudySummary& validate_study(const StudySummary& study) {
  check_arm(study.treatment, study.id, "treatment");
  check_arm(study.control, study.id, "control");
  return study;
}

std::string_view to_string(Tau2Method m) {
  switch (m) {
    case Tau2Method::DL: return "DL";
    case Tau2Method::REML: return "REML";
    case Tau2Method::MP: return "MP";
    case Tau2Method::J: return "J";
  }
  return "?";
}

std::string_view to_string(Tau2IntervalMethod m) {
  switch (m) {
    case Tau2IntervalMethod::QP: return "QP";
    case Tau2IntervalMethod::BJ: return "BJ";
    case Tau2IntervalMethod::J: return "J";
    case Tau2IntervalMethod::PL: return "PL";
  }
  return "?";
}

std::string_view to_string(PooledMethod m) {
  switch (m) {
    case PooledMethod::IV_DL: return "IV-DL";
    case PooledMethod::IV_REML: return "IV-REML";
    case PooledMethod::IV_MP: return "IV-MP";
    case PooledMethod::IV_J: return "IV-J";
    case PooledMethod::SSW: return "SSW";
  }
  return "?";
}

std::string_view to_string(CiMethod m) {
  switch (m) {
    case CiMethod::IV_DL: return "IV-DL";
    case CiMethod::IV_REML: return "IV-REML";
    case CiMethod::IV_MP: return "IV-MP";
    case CiMethod::IV_J: return "IV-J";
    case CiMethod::HKSJ: return "HKSJ";
    case CiMethod::HKSJ_MP: return "HKSJ-MP";
    case CiMethod::SSW_MP: return "SSW-MP";
  }
  return "?";
}

std::string_view to_string(Pipeline p) {
  return p == Pipeline::Usual ? "usual" : "corrected";
}

std::string_view to_string(Eq3Sign s) {
  return s == Eq3Sign::AsPrinted ? "as_printed" : "plus";
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::BiasTau2: return "bias_tau2";
    case Metric::BiasLambda: return "bias_lambda";
    case Metric::CoverageTau2: return "coverage_tau2";
    case Metric::CoverageLambda: return "coverage_lambda";
  }
  return "?";
}

Tau2Method parse_tau2_method(std::string_view s) {
  return parse_enum(s, kTau2Methods, "tau2 method");
}

Tau2IntervalMethod parse_tau2_interval_method(std::string_view s) {
  return parse_enum(s, kTau2IntervalMethods, "tau2 interval method");
}

PooledMethod parse_pooled_method(std::string_view s) {
  return parse_enum(s, kPooledMethods, "pooled method");
}

CiMethod parse_ci_method(std::string_view s) { return parse_enum(s, kCiMethods, "CI method"); }

Pipeline parse_pipeline(std::string_view s) {
  static constexpr Pipeline all[] = {Pipeline::Usual, Pipeline::Corrected};
  return parse_enum(s, all, "pipeline");
}

Eq3Sign parse_eq3_sign(std::string_view s) {
  static constexpr Eq3Sign all[] = {Eq3Sign::AsPrinted, Eq3Sign::Plus};
  return parse_enum(s, all, "eq3 sign");
}

Metric parse_metric(std::string_view s) {
  static constexpr Metric all[] = {Metric::BiasTau2, Metric::BiasLambda, Metric::CoverageTau2,
                                   Metric::CoverageLambda};
  return parse_enum(s, all, "metric");
}

void Scenario::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
  if (k < 2) fail("k must be >= 2, got " + std::to_string(k));
  if (n_total < 4 || n_total % 2 != 0) {
    fail("n_total must be even and >= 4, got " + std::to_string(n_total));
  }
  if (!std::isfinite(lambda)) fail("lambda must be finite");
  if (!(tau2 >= 0.0) || !std::isfinite(tau2)) fail("tau2 must be finite and >= 0");
  if (!(mu_control > 0.0) || !(sigma2_t > 0.0) || !(sigma2_c > 0.0)) {
    fail("mu_control, sigma2_t and sigma2_c must be positive");
  }
}

const MethodStat* ScenarioResult::find(Pipeline p, std::string_view method, Metric metric) const {
  for (const auto& s : stats) {
    if (s.pipeline == p && s.metric == metric && s.method == method) return &s;
  }
  return nullptr;
}

const MethodStat& ScenarioResult::at(Pipeline p, std::string_view method, Metric metric) const {
  if (const auto* s = find(p, method, metric)) return *s;
  throw Error(ErrorCode::SchemaError, "no statistic " + std::string(to_string(metric)) + " for " +
                                          std::string(method) + " (" +
                                          std::string(to_string(p)) + ")");
}

long ScenarioResult::incidence_of(Pipeline p, std::string_view event) const {
  for (const auto& c : incidence) {
    if (c.pipeline == p && c.event == event) return c.count;
  }
  return 0;
}

}  // namespace metaratio
