#include "metaratio/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "metaratio/distributions.hpp"
#include "metaratio/heterogeneity.hpp"

namespace metaratio {

namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::DomainError, "confidence level must lie in (0, 1)");
  }
}

PooledMethod iv_tag(Tau2Method m) {
  switch (m) {
    case Tau2Method::DL: return PooledMethod::IV_DL;
    case Tau2Method::REML: return PooledMethod::IV_REML;
    case Tau2Method::MP: return PooledMethod::IV_MP;
    case Tau2Method::J: return PooledMethod::IV_J;
  }
  return PooledMethod::IV_DL;
}

CiMethod ci_tag(PooledMethod m) {
  switch (m) {
    case PooledMethod::IV_DL: return CiMethod::IV_DL;
    case PooledMethod::IV_REML: return CiMethod::IV_REML;
    case PooledMethod::IV_MP: return CiMethod::IV_MP;
    case PooledMethod::IV_J: return CiMethod::IV_J;
    case PooledMethod::SSW: return CiMethod::SSW_MP;
  }
  return CiMethod::IV_DL;
}

// Normalizes raw weights in place and returns the weighted mean, clamped to
// the range of the estimates so rounding never leaves the convex hull.
double weighted_mean(std::span<const EffectRow> effects, std::vector<double>& w) {
  double sw = 0.0;
  for (double x : w) sw += x;
  double mean = 0.0;
  double lo = effects.front().estimate, hi = lo;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] /= sw;
    mean += w[i] * effects[i].estimate;
    lo = std::min(lo, effects[i].estimate);
    hi = std::max(hi, effects[i].estimate);
  }
  return std::clamp(mean, lo, hi);
}

}  // namespace

PooledResult pool_iv(std::span<const EffectRow> effects, const Tau2Estimate& tau2) {
  detail::check_effects(effects, 1);
  if (!(tau2.value >= 0.0)) throw Error(ErrorCode::DomainError, "tau2 must be >= 0");
  PooledResult r;
  r.method = iv_tag(tau2.method);
  r.tau2_used = tau2;
  r.weights.resize(effects.size());
  double sw = 0.0;
  for (std::size_t i = 0; i < effects.size(); ++i) {
    r.weights[i] = 1.0 / (effects[i].variance + tau2.value);
    sw += r.weights[i];
  }
  r.variance = 1.0 / sw;
  r.estimate = weighted_mean(effects, r.weights);
  return r;
}

PooledResult pool_ssw(std::span<const EffectRow> effects, std::span<const StudySummary> studies,
                      const Tau2Estimate& tau2_mp) {
  detail::check_effects(effects, 1);
  if (studies.size() != effects.size()) {
    throw Error(ErrorCode::DimensionMismatch, "effects and studies are not aligned");
  }
  PooledResult r;
  r.method = PooledMethod::SSW;
  r.tau2_used = tau2_mp;
  r.weights.resize(effects.size());
  double n_sum = 0.0, num = 0.0;
  for (std::size_t i = 0; i < effects.size(); ++i) {
    const double nt = studies[i].treatment.n;
    const double nc = studies[i].control.n;
    const double n_eff = nt * nc / (nt + nc);
    r.weights[i] = n_eff;
    n_sum += n_eff;
    num += n_eff * n_eff * (effects[i].variance + tau2_mp.value);
  }
  r.variance = num / (n_sum * n_sum);
  r.estimate = weighted_mean(effects, r.weights);
  return r;
}

LambdaInterval ci_iv_normal(const PooledResult& pooled, double level) {
  check_level(level);
  const double half = normal_quantile(0.5 + 0.5 * level) * std::sqrt(pooled.variance);
  return {pooled.estimate - half, pooled.estimate + half, ci_tag(pooled.method), level};
}

LambdaInterval ci_hksj(std::span<const EffectRow> effects, const Tau2Estimate& tau2,
                       double level) {
  detail::check_effects(effects, 2);
  check_level(level);
  const PooledResult iv = pool_iv(effects, tau2);
  double sw = 0.0, num = 0.0;
  for (const auto& e : effects) {
    const double w = 1.0 / (e.variance + tau2.value);
    const double d = e.estimate - iv.estimate;
    sw += w;
    num += w * d * d;
  }
  const double k = static_cast<double>(effects.size());
  const double q_hat = num / ((k - 1.0) * sw);
  const double half = t_quantile(k - 1.0, 0.5 + 0.5 * level) * std::sqrt(q_hat);
  const CiMethod tag = tau2.method == Tau2Method::MP ? CiMethod::HKSJ_MP : CiMethod::HKSJ;
  return {iv.estimate - half, iv.estimate + half, tag, level};
}

LambdaInterval ci_ssw_t(const PooledResult& pooled_ssw, int k, double level) {
  check_level(level);
  if (k < 2) throw Error(ErrorCode::TooFewStudies, "t interval needs K >= 2");
  const double half = t_quantile(k - 1.0, 0.5 + 0.5 * level) * std::sqrt(pooled_ssw.variance);
  return {pooled_ssw.estimate - half, pooled_ssw.estimate + half, CiMethod::SSW_MP, level};
}

}  // namespace metaratio
