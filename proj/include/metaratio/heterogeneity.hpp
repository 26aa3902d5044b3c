#pragma once

#include <span>
#include <vector>

#include "metaratio/model.hpp"

namespace metaratio {

/// Cochran's Q with inverse-variance weights 1/v_i^2.
double cochran_q(std::span<const EffectRow> effects);

/// Q evaluated with weights 1/(v_i^2 + tau2); generalized_q(e, 0) equals
/// cochran_q(e). Nonincreasing in tau2.
double generalized_q(std::span<const EffectRow> effects, double tau2);

/// Q with arbitrary fixed positive constants a_i.
double fixed_weight_q(std::span<const EffectRow> effects, std::span<const double> a);

/// Restricted log-likelihood of tau2 under the normal marginal model, up to
/// an additive constant.
double restricted_loglik(std::span<const EffectRow> effects, double tau2);

/// Derivative of restricted_loglik with respect to tau2.
double restricted_score(std::span<const EffectRow> effects, double tau2);

/// Upper end of every tau2 search: 10 (max est - min est)^2 + 10 max v^2.
double tau2_search_cap(std::span<const EffectRow> effects);

Tau2Estimate tau2_dl(std::span<const EffectRow> effects);
Tau2Estimate tau2_mp(std::span<const EffectRow> effects);
Tau2Estimate tau2_reml(std::span<const EffectRow> effects);
Tau2Estimate tau2_j(std::span<const EffectRow> effects);

Tau2Estimate estimate_tau2(std::span<const EffectRow> effects, Tau2Method method);

namespace detail {
/// Throws TooFewStudies for K < 2 and DomainError for non-positive or
/// non-finite variances and non-finite estimates.
void check_effects(std::span<const EffectRow> effects, std::size_t min_k = 2);
}  // namespace detail

}  // namespace metaratio
