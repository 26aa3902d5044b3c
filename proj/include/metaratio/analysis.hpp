#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metaratio/model.hpp"

namespace metaratio {

/// Result of one estimator: either a value or the error code that stopped it.
template <typename T>
struct Outcome {
  std::optional<T> value;
  std::optional<ErrorCode> failure;
  std::string message;

  bool ok() const { return value.has_value(); }
};

struct AnalysisOptions {
  double level = kDefaultLevel;
  Eq3Sign eq3_sign = Eq3Sign::AsPrinted;
};

/// Every estimator applied to one meta-analysis under one effect pipeline:
/// four tau2 point estimates, four tau2 intervals, five pooled estimates and
/// seven intervals for the overall effect. Arrays are indexed in the order
/// of kTau2Methods, kTau2IntervalMethods, kPooledMethods and kCiMethods.
struct MetaAnalysis {
  Pipeline pipeline = Pipeline::Usual;
  std::vector<EffectRow> effects;
  std::array<Outcome<Tau2Estimate>, 4> tau2;
  std::array<Outcome<Tau2Interval>, 4> tau2_intervals;
  std::array<Outcome<PooledResult>, 5> pooled;
  std::array<Outcome<LambdaInterval>, 7> lambda_intervals;

  const Outcome<Tau2Estimate>& tau2_of(Tau2Method m) const;
  const Outcome<Tau2Interval>& interval_of(Tau2IntervalMethod m) const;
  const Outcome<PooledResult>& pooled_of(PooledMethod m) const;
  const Outcome<LambdaInterval>& ci_of(CiMethod m) const;
};

/// Runs the full battery. Study-level validation errors propagate; individual
/// estimator failures are recorded in their Outcome and never abort the rest.
MetaAnalysis analyze(std::span<const StudySummary> studies, Pipeline pipeline,
                     const AnalysisOptions& options = {});

/// As analyze, on precomputed effect rows aligned with `studies`.
MetaAnalysis analyze_effects(std::vector<EffectRow> effects,
                             std::span<const StudySummary> studies, Pipeline pipeline,
                             const AnalysisOptions& options = {});

}  // namespace metaratio
