#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metaratio/error.hpp"

namespace metaratio {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultLevel = 0.95;

// ---------------------------------------------------------------------------
// Study-level data
// ---------------------------------------------------------------------------

struct ArmSummary {
  int n = 0;
  double mean = 0.0;
  double sd = 0.0;

  bool operator==(const ArmSummary&) const = default;
};

struct StudySummary {
  std::string id;
  ArmSummary treatment;
  ArmSummary control;

  int total_size() const { return treatment.n + control.n; }
  bool operator==(const StudySummary&) const = default;
};

/// Checks the arm and study invariants (n >= 2, sd >= 0, finite and strictly
/// positive means) and returns the study unchanged. Throws Error otherwise.
const StudySummary& validate_study(const StudySummary& study);

/// One study's log response ratio and its within-study variance.
struct EffectRow {
  double estimate = 0.0;
  double variance = 0.0;
  bool corrected = false;
  bool variance_floored = false;

  bool operator==(const EffectRow&) const = default;
};

// ---------------------------------------------------------------------------
// Method enumerations
// ---------------------------------------------------------------------------

enum class Tau2Method { DL, REML, MP, J };
enum class Tau2IntervalMethod { QP, BJ, J, PL };
enum class PooledMethod { IV_DL, IV_REML, IV_MP, IV_J, SSW };
enum class CiMethod { IV_DL, IV_REML, IV_MP, IV_J, HKSJ, HKSJ_MP, SSW_MP };
enum class Pipeline { Usual, Corrected };

/// Sign of the fourth-power bracket in the corrected variance. AsPrinted
/// subtracts the control term; Plus adds both terms.
enum class Eq3Sign { AsPrinted, Plus };

inline constexpr Tau2Method kTau2Methods[] = {Tau2Method::DL, Tau2Method::REML, Tau2Method::MP,
                                              Tau2Method::J};
inline constexpr Tau2IntervalMethod kTau2IntervalMethods[] = {
    Tau2IntervalMethod::QP, Tau2IntervalMethod::BJ, Tau2IntervalMethod::J, Tau2IntervalMethod::PL};
inline constexpr PooledMethod kPooledMethods[] = {PooledMethod::IV_DL, PooledMethod::IV_REML,
                                                  PooledMethod::IV_MP, PooledMethod::IV_J,
                                                  PooledMethod::SSW};
inline constexpr CiMethod kCiMethods[] = {CiMethod::IV_DL, CiMethod::IV_REML, CiMethod::IV_MP,
                                          CiMethod::IV_J,  CiMethod::HKSJ,    CiMethod::HKSJ_MP,
                                          CiMethod::SSW_MP};

std::string_view to_string(Tau2Method m);
std::string_view to_string(Tau2IntervalMethod m);
std::string_view to_string(PooledMethod m);
std::string_view to_string(CiMethod m);
std::string_view to_string(Pipeline p);
std::string_view to_string(Eq3Sign s);

Tau2Method parse_tau2_method(std::string_view s);
Tau2IntervalMethod parse_tau2_interval_method(std::string_view s);
PooledMethod parse_pooled_method(std::string_view s);
CiMethod parse_ci_method(std::string_view s);
Pipeline parse_pipeline(std::string_view s);
Eq3Sign parse_eq3_sign(std::string_view s);

// ---------------------------------------------------------------------------
// Estimates
// ---------------------------------------------------------------------------

struct Tau2Estimate {
  double value = 0.0;
  Tau2Method method = Tau2Method::DL;
  bool truncated = false;
  int iterations = 0;
  bool converged = true;

  bool operator==(const Tau2Estimate&) const = default;
};

/// Confidence interval for tau^2. An unbounded upper end is stored as
/// kInfinity together with hi_unbounded = true.
struct Tau2Interval {
  double lo = 0.0;
  double hi = 0.0;
  Tau2IntervalMethod method = Tau2IntervalMethod::QP;
  double level = kDefaultLevel;
  bool lo_truncated = false;
  bool hi_truncated = false;
  bool hi_unbounded = false;

  bool covers(double tau2) const { return lo <= tau2 && tau2 <= hi; }
  bool operator==(const Tau2Interval&) const = default;
};

struct LambdaInterval {
  double lo = 0.0;
  double hi = 0.0;
  CiMethod method = CiMethod::IV_DL;
  double level = kDefaultLevel;

  bool covers(double lambda) const { return lo <= lambda && lambda <= hi; }
  bool operator==(const LambdaInterval&) const = default;
};

struct PooledResult {
  double estimate = 0.0;
  double variance = 0.0;
  std::vector<double> weights;  // normalized to sum 1
  PooledMethod method = PooledMethod::IV_DL;
  Tau2Estimate tau2_used;
  std::optional<LambdaInterval> ci;

  bool operator==(const PooledResult&) const = default;
};

// ---------------------------------------------------------------------------
// Simulation grid
// ---------------------------------------------------------------------------

/// One cell of the simulation design. Arms are split equally, n_total / 2
/// subjects each.
struct Scenario {
  double lambda = 0.0;
  double tau2 = 0.0;
  int k = 5;
  int n_total = 40;
  double mu_control = 1.0;
  double sigma2_t = 1.0;
  double sigma2_c = 1.0;

  /// Throws ConfigError unless k >= 2, n_total even and >= 4, tau2 >= 0 and
  /// the moments are positive.
  void validate() const;
  bool operator==(const Scenario&) const = default;
};

enum class Metric { BiasTau2, BiasLambda, CoverageTau2, CoverageLambda };
std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

/// Aggregated statistic for one (pipeline, method, metric) in one cell.
struct MethodStat {
  Pipeline pipeline = Pipeline::Usual;
  std::string method;
  Metric metric = Metric::BiasTau2;
  double value = 0.0;
  double mc_se = 0.0;
  long used = 0;      // replications entering the tally
  long failures = 0;  // replications with a failure marker for this method

  bool operator==(const MethodStat&) const = default;
};

/// Event counts such as floored corrected variances, truncated estimators or
/// unbounded interval ends.
struct IncidenceCount {
  Pipeline pipeline = Pipeline::Usual;
  std::string event;
  long count = 0;

  bool operator==(const IncidenceCount&) const = default;
};

struct ScenarioResult {
  Scenario scenario;
  long reps = 0;
  std::vector<MethodStat> stats;
  std::vector<IncidenceCount> incidence;

  const MethodStat* find(Pipeline p, std::string_view method, Metric metric) const;
  const MethodStat& at(Pipeline p, std::string_view method, Metric metric) const;
  long incidence_of(Pipeline p, std::string_view event) const;

  bool operator==(const ScenarioResult&) const = default;
};

}  // namespace metaratio
