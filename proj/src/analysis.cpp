#include "metaratio/analysis.hpp"

#include <exception>

#include "metaratio/effects.hpp"
#include "metaratio/heterogeneity.hpp"
#include "metaratio/pooling.hpp"
#include "metaratio/tau_intervals.hpp"

namespace metaratio {

namespace {

template <typename T, typename F>
Outcome<T> attempt(F&& f) {
  Outcome<T> out;
  try {
    out.value = f();
  } catch (const Error& e) {
    out.failure = e.code();
    out.message = e.what();
  }
  return out;
}

template <typename T>
Outcome<T> failed_from(const Outcome<Tau2Estimate>& cause) {
  Outcome<T> out;
  out.failure = cause.failure;
  out.message = "depends on a failed tau2 estimate: " + cause.message;
  return out;
}

template <typename Enum, std::size_t N>
std::size_t index_of(Enum m, const Enum (&all)[N]) {
  for (std::size_t i = 0; i < N; ++i) {
    if (all[i] == m) return i;
  }
  return 0;
}

}  // namespace

const Outcome<Tau2Estimate>& MetaAnalysis::tau2_of(Tau2Method m) const {
  return tau2[index_of(m, kTau2Methods)];
}

const Outcome<Tau2Interval>& MetaAnalysis::interval_of(Tau2IntervalMethod m) const {
  return tau2_intervals[index_of(m, kTau2IntervalMethods)];
}

const Outcome<PooledResult>& MetaAnalysis::pooled_of(PooledMethod m) const {
  return pooled[index_of(m, kPooledMethods)];
}

const Outcome<LambdaInterval>& MetaAnalysis::ci_of(CiMethod m) const {
  return lambda_intervals[index_of(m, kCiMethods)];
}

MetaAnalysis analyze(std::span<const StudySummary> studies, Pipeline pipeline,
                     const AnalysisOptions& options) {
  return analyze_effects(compute_effects(studies, pipeline, options.eq3_sign), studies, pipeline,
                         options);
}

MetaAnalysis analyze_effects(std::vector<EffectRow> effects,
                             std::span<const StudySummary> studies, Pipeline pipeline,
                             const AnalysisOptions& options) {
  MetaAnalysis out;
  out.pipeline = pipeline;
  out.effects = std::move(effects);
  const std::span<const EffectRow> rows(out.effects);
  const double level = options.level;

  for (std::size_t i = 0; i < 4; ++i) {
    out.tau2[i] = attempt<Tau2Estimate>([&] { return estimate_tau2(rows, kTau2Methods[i]); });
    out.tau2_intervals[i] = attempt<Tau2Interval>(
        [&] { return tau2_interval(rows, kTau2IntervalMethods[i], level); });
  }

  // IV estimators and their normal intervals, one per tau2 estimator.
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& t = out.tau2[i];
    if (!t.ok()) {
      out.pooled[i] = failed_from<PooledResult>(t);
      out.lambda_intervals[i] = failed_from<LambdaInterval>(t);
      continue;
    }
    out.pooled[i] = attempt<PooledResult>([&] {
      PooledResult p = pool_iv(rows, *t.value);
      p.ci = ci_iv_normal(p, level);
      return p;
    });
    const auto& p = out.pooled[i];
    out.lambda_intervals[i] = p.ok() ? Outcome<LambdaInterval>{p.value->ci, {}, {}}
                                     : Outcome<LambdaInterval>{{}, p.failure, p.message};
  }

  const auto& dl = out.tau2_of(Tau2Method::DL);
  const auto& mp = out.tau2_of(Tau2Method::MP);
  constexpr std::size_t kHksj = 4, kHksjMp = 5, kSswMp = 6, kSsw = 4;
  out.lambda_intervals[kHksj] =
      dl.ok() ? attempt<LambdaInterval>([&] { return ci_hksj(rows, *dl.value, level); })
              : failed_from<LambdaInterval>(dl);
  out.lambda_intervals[kHksjMp] =
      mp.ok() ? attempt<LambdaInterval>([&] { return ci_hksj(rows, *mp.value, level); })
              : failed_from<LambdaInterval>(mp);
  if (mp.ok()) {
    out.pooled[kSsw] = attempt<PooledResult>([&] {
      PooledResult p = pool_ssw(rows, studies, *mp.value);
      p.ci = ci_ssw_t(p, static_cast<int>(rows.size()), level);
      return p;
    });
    out.lambda_intervals[kSswMp] =
        out.pooled[kSsw].ok() ? Outcome<LambdaInterval>{out.pooled[kSsw].value->ci, {}, {}}
                              : Outcome<LambdaInterval>{{}, out.pooled[kSsw].failure,
                                                        out.pooled[kSsw].message};
  } else {
    out.pooled[kSsw] = failed_from<PooledResult>(mp);
    out.lambda_intervals[kSswMp] = failed_from<LambdaInterval>(mp);
  }
  return out;
}

}  // namespace metaratio
