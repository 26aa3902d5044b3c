#pragma once

#include <span>
#include <vector>

#include "metaratio/model.hpp"

namespace metaratio {

/// Log response ratio ln(mean_T / mean_C) with its delta-method variance
/// s_T^2/(n_T mean_T^2) + s_C^2/(n_C mean_C^2).
///
/// Throws NonPositiveMean for non-positive means and ZeroVariance when both
/// arms have zero standard deviation.
EffectRow lrr(const StudySummary& study);

/// Small-sample bias-corrected log response ratio. The estimate adds half the
/// difference of the squared-CV terms; the variance adds half the difference
/// (or, with Eq3Sign::Plus, the sum) of their squares. A non-positive
/// corrected variance falls back to the uncorrected one and sets
/// variance_floored.
EffectRow lrr_bias_corrected(const StudySummary& study, Eq3Sign sign = Eq3Sign::AsPrinted);

/// Effect rows for a whole meta-analysis under the chosen pipeline.
std::vector<EffectRow> compute_effects(std::span<const StudySummary> studies, Pipeline pipeline,
                                       Eq3Sign sign = Eq3Sign::AsPrinted);

}  // namespace metaratio
