#include <cmath>
#include <limits>

#include "doctest.h"
#include "metaratio/model.hpp"
#include "metaratio/serialization.hpp"

using namespace metaratio;

namespace {

StudySummary study(ArmSummary t, ArmSummary c) { return {"s1", t, c}; }

ErrorCode code_of(const StudySummary& s) {
  try {
    validate_study(s);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected validation to fail");
  return ErrorCode::DomainError;
}

template <typename T>
T round_trip(const T& v) {
  nlohmann::json j = v;
  return nlohmann::json::parse(j.dump()).get<T>();
}

}  // namespace

TEST_CASE("validate_study accepts well-formed arms") {
  const auto s = study({10, 2.0, 0.5}, {10, 2.0, 0.5});
  CHECK(validate_study(s) == s);
  CHECK(s.total_size() == 20);
}

TEST_CASE("validate_study rejects each broken invariant") {
  CHECK(code_of(study({10, 2.0, 0.5}, {10, -1.0, 0.5})) == ErrorCode::NonPositiveMean);
  CHECK(code_of(study({10, 2.0, 0.5}, {10, 0.0, 0.5})) == ErrorCode::NonPositiveMean);
  CHECK(code_of(study({1, 2.0, 0.5}, {10, 1.0, 0.5})) == ErrorCode::ArmTooSmall);
  CHECK(code_of(study({10, 2.0, -0.1}, {10, 1.0, 0.5})) == ErrorCode::NegativeSD);
  CHECK(code_of(study({10, std::nan(""), 0.5}, {10, 1.0, 0.5})) == ErrorCode::NonFiniteValue);
}

TEST_CASE("validation message names the study") {
  StudySummary s{"Smith-2004", {10, 2.0, 0.5}, {10, -1.0, 0.5}};
  try {
    validate_study(s);
    FAIL("should throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("Smith-2004") != std::string::npos);
  }
}

TEST_CASE("method names round trip") {
  for (auto m : kTau2Methods) CHECK(parse_tau2_method(to_string(m)) == m);
  for (auto m : kTau2IntervalMethods) CHECK(parse_tau2_interval_method(to_string(m)) == m);
  for (auto m : kPooledMethods) CHECK(parse_pooled_method(to_string(m)) == m);
  for (auto m : kCiMethods) CHECK(parse_ci_method(to_string(m)) == m);
  for (auto p : {Pipeline::Usual, Pipeline::Corrected}) CHECK(parse_pipeline(to_string(p)) == p);
  for (auto s : {Eq3Sign::AsPrinted, Eq3Sign::Plus}) CHECK(parse_eq3_sign(to_string(s)) == s);
  for (auto m : {Metric::BiasTau2, Metric::BiasLambda, Metric::CoverageTau2, Metric::CoverageLambda}) {
    CHECK(parse_metric(to_string(m)) == m);
  }
  CHECK(to_string(CiMethod::HKSJ_MP) == "HKSJ-MP");
  CHECK(to_string(Metric::CoverageLambda) == "coverage_lambda");
  CHECK_THROWS_AS(parse_metric("coverage"), Error);
}

TEST_CASE("intervals count their endpoints as covered") {
  Tau2Interval iv;
  iv.lo = 0.0;
  iv.hi = 1.0;
  CHECK(iv.covers(0.0));
  CHECK(iv.covers(1.0));
  CHECK_FALSE(iv.covers(1.0000001));
  iv.hi = kInfinity;
  iv.hi_unbounded = true;
  CHECK(iv.covers(1e300));
}

TEST_CASE("scenario validation") {
  Scenario s;
  CHECK_NOTHROW(s.validate());
  s.n_total = 5;
  CHECK_THROWS_AS(s.validate(), Error);
  s.n_total = 4;
  s.k = 1;
  CHECK_THROWS_AS(s.validate(), Error);
  s.k = 2;
  s.tau2 = -0.1;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("serialization round trip is identity") {
  const StudySummary s{"a,b", {10, 2.5, 0.25}, {12, 1.0 / 3.0, 0.1}};
  CHECK(round_trip(s) == s);

  const EffectRow e{0.1 + 0.2, 1e-300, true, true};
  CHECK(round_trip(e) == e);

  Tau2Estimate t{0.123456789012345678, Tau2Method::REML, false, 17, true};
  CHECK(round_trip(t) == t);

  Tau2Interval iv{0.0, kInfinity, Tau2IntervalMethod::BJ, 0.9, true, false, true};
  CHECK(round_trip(iv) == iv);
  nlohmann::json j = iv;
  CHECK(j.at("hi") == "inf");

  LambdaInterval li{-1.5, 2.25, CiMethod::SSW_MP, 0.95};
  CHECK(round_trip(li) == li);

  PooledResult p;
  p.estimate = 0.3;
  p.variance = 0.01;
  p.weights = {0.25, 0.75};
  p.method = PooledMethod::SSW;
  p.tau2_used = t;
  p.ci = li;
  CHECK(round_trip(p) == p);

  Scenario sc{0.2, 0.7, 30, 640, 1.0, 1.0, 1.0};
  CHECK(round_trip(sc) == sc);

  ScenarioResult r;
  r.scenario = sc;
  r.reps = 1000;
  r.stats.push_back({Pipeline::Corrected, "HKSJ-MP", Metric::CoverageLambda, 0.951, 0.0068, 998, 2});
  r.incidence.push_back({Pipeline::Corrected, "variance_floored", 5});
  CHECK(round_trip(r) == r);
}

TEST_CASE("real formatting is exact and writes non-finite values as words") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 123456789.123456789}) {
    CHECK(parse_real(format_real(x)) == x);
  }
  CHECK(format_real(kInfinity) == "inf");
  CHECK(format_real(-kInfinity) == "-inf");
  CHECK(format_real(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(std::isinf(parse_real("inf")));
  CHECK_THROWS_AS(parse_real("1.5x"), Error);
  CHECK_THROWS_AS(parse_real(""), Error);
}
