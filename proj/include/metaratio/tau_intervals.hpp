#pragma once

#include <span>

#include "metaratio/model.hpp"

namespace metaratio {

/// Q-profile interval: tau2 values whose generalized Q lies between the
/// chi-square(K-1) quantiles at alpha/2 and 1 - alpha/2.
Tau2Interval qp_interval(std::span<const EffectRow> effects, double level = kDefaultLevel);

/// Generalized Q-profile interval with fixed constants a_i = 1/v_i^2, using
/// the exact weighted chi-square distribution of Q_a.
Tau2Interval bj_interval(std::span<const EffectRow> effects, double level = kDefaultLevel);

/// As bj_interval with a_i = 1/v_i.
Tau2Interval j_interval(std::span<const EffectRow> effects, double level = kDefaultLevel);

/// Profile restricted-likelihood interval around the REML estimate, using
/// the chi-square(1) quantile at `level` as the deviance threshold.
Tau2Interval pl_interval(std::span<const EffectRow> effects, double level = kDefaultLevel);

Tau2Interval tau2_interval(std::span<const EffectRow> effects, Tau2IntervalMethod method,
                           double level = kDefaultLevel);

/// Generalized Q-profile interval for arbitrary fixed positive constants.
Tau2Interval generalized_qp_interval(std::span<const EffectRow> effects,
                                     std::span<const double> a, Tau2IntervalMethod tag,
                                     double level = kDefaultLevel);

}  // namespace metaratio
