#pragma once

#include <span>

#include "metaratio/model.hpp"

namespace metaratio {

/// Inverse-variance weighted mean with weights 1/(v_i^2 + tau2) and the
/// conventional variance 1 / sum of weights. The method tag follows the
/// tau2 estimator (DL -> IV-DL, ...).
PooledResult pool_iv(std::span<const EffectRow> effects, const Tau2Estimate& tau2);

/// Sample-size weighted mean with effective sizes n_T n_C / (n_T + n_C); its
/// variance is sum n~_i^2 (v_i^2 + tau2_MP) / (sum n~_i)^2.
PooledResult pool_ssw(std::span<const EffectRow> effects, std::span<const StudySummary> studies,
                      const Tau2Estimate& tau2_mp);

/// estimate +/- z_{1 - alpha/2} sqrt(variance).
LambdaInterval ci_iv_normal(const PooledResult& pooled, double level = kDefaultLevel);

/// Hartung-Knapp-Sidik-Jonkman interval around the IV mean for `tau2`, with
/// variance sum w_i (y_i - mean)^2 / ((K - 1) sum w_i) and t_{K-1} critical
/// values. Tagged HKSJ-MP when tau2 comes from MP, HKSJ otherwise.
LambdaInterval ci_hksj(std::span<const EffectRow> effects, const Tau2Estimate& tau2,
                       double level = kDefaultLevel);

/// SSW estimate +/- t_{K-1} sqrt(variance).
LambdaInterval ci_ssw_t(const PooledResult& pooled_ssw, int k, double level = kDefaultLevel);

}  // namespace metaratio
