#include "metaratio/tau_intervals.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "metaratio/distributions.hpp"
#include "metaratio/heterogeneity.hpp"
#include "metaratio/quadform.hpp"
#include "roots.hpp"

namespace metaratio {

namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::DomainError, "confidence level must lie in (0, 1)");
  }
}

double max_variance(std::span<const EffectRow> effects) {
  double v = 0.0;
  for (const auto& e : effects) v = std::max(v, e.variance);
  return v;
}

// Inverts a nonincreasing pivot h(tau2): the interval is the set where
// lower_target <= h(tau2) <= upper_target. The lower end solves
// h = upper_target and the upper end solves h = lower_target.
Tau2Interval invert_decreasing(const std::function<double(double)>& h, double upper_target,
                               double lower_target, double start, double cap,
                               Tau2IntervalMethod method, double level, int bits = 50) {
  Tau2Interval iv;
  iv.method = method;
  iv.level = level;

  // Scan 0, start, 2 start, ... until h drops below the lower target.
  std::vector<std::pair<double, double>> scan{{0.0, h(0.0)}};
  for (double t = std::min(start, cap);; t = std::min(2.0 * t, cap)) {
    if (scan.back().second < lower_target) break;
    if (scan.back().first >= cap) break;
    scan.emplace_back(t, h(t));
  }

  auto solve = [&](double target) -> std::optional<double> {
    for (std::size_t i = 1; i < scan.size(); ++i) {
      if (scan[i].second < target) {
        auto g = [&](double t) { return h(t) - target; };
        return detail::find_root(g, scan[i - 1].first, scan[i].first,
                                 scan[i - 1].second - target, scan[i].second - target, bits)
            .x;
      }
    }
    return std::nullopt;
  };

  const double h0 = scan.front().second;
  if (h0 < upper_target) {
    iv.lo = 0.0;
    iv.lo_truncated = true;
  } else if (auto lo = solve(upper_target)) {
    iv.lo = *lo;
  } else {
    iv.lo = cap;
  }

  if (h0 < lower_target) {
    iv.hi = 0.0;
    iv.hi_truncated = true;
  } else if (auto hi = solve(lower_target)) {
    iv.hi = *hi;
  } else {
    iv.hi = kInfinity;
    iv.hi_unbounded = true;
  }
  return iv;
}

}  // namespace

Tau2Interval qp_interval(std::span<const EffectRow> effects, double level) {
  detail::check_effects(effects);
  check_level(level);
  const double df = static_cast<double>(effects.size()) - 1.0;
  const double alpha = 1.0 - level;
  return invert_decreasing([&](double t) { return generalized_q(effects, t); },
                           chi2_quantile(df, 1.0 - 0.5 * alpha), chi2_quantile(df, 0.5 * alpha),
                           max_variance(effects), tau2_search_cap(effects),
                           Tau2IntervalMethod::QP, level);
}

Tau2Interval generalized_qp_interval(std::span<const EffectRow> effects,
                                     std::span<const double> a, Tau2IntervalMethod tag,
                                     double level) {
  detail::check_effects(effects);
  check_level(level);
  const double q_obs = fixed_weight_q(effects, a);
  const double alpha = 1.0 - level;
  const double cap = tau2_search_cap(effects);

  std::vector<double> marginal(effects.size());
  auto cdf_at = [&](double t) {
    for (std::size_t i = 0; i < effects.size(); ++i) marginal[i] = effects[i].variance + t;
    return cdf_weighted_chisq(q_eigenvalues(a, marginal), q_obs);
  };
  // Larger tau2 inflates every coefficient, so the CDF at q_obs normally
  // falls with tau2; flip it if this instance says otherwise.
  const double f_zero = cdf_at(0.0);
  const double f_cap = cdf_at(cap);
  const bool increasing = f_cap > f_zero;
  auto pivot = [&](double t) {
    const double f = t == 0.0 ? f_zero : (t == cap ? f_cap : cdf_at(t));
    return increasing ? 1.0 - f : f;
  };
  // The CDF is good to about 1e-7, so endpoints beyond ~1e-9 relative are noise.
  return invert_decreasing(pivot, 1.0 - 0.5 * alpha, 0.5 * alpha, max_variance(effects), cap,
                           tag, level, 30);
}

Tau2Interval bj_interval(std::span<const EffectRow> effects, double level) {
  detail::check_effects(effects);
  std::vector<double> a;
  a.reserve(effects.size());
  for (const auto& e : effects) a.push_back(1.0 / e.variance);
  return generalized_qp_interval(effects, a, Tau2IntervalMethod::BJ, level);
}

Tau2Interval j_interval(std::span<const EffectRow> effects, double level) {
  detail::check_effects(effects);
  std::vector<double> a;
  a.reserve(effects.size());
  for (const auto& e : effects) a.push_back(1.0 / std::sqrt(e.variance));
  return generalized_qp_interval(effects, a, Tau2IntervalMethod::J, level);
}

Tau2Interval pl_interval(std::span<const EffectRow> effects, double level) {
  detail::check_effects(effects);
  check_level(level);
  const Tau2Estimate reml = tau2_reml(effects);
  const double crit = chi2_quantile(1.0, level);
  const double ll_max = restricted_loglik(effects, reml.value);
  auto excess = [&](double t) { return 2.0 * (ll_max - restricted_loglik(effects, t)) - crit; };
  const double cap = std::max(tau2_search_cap(effects), reml.value);

  Tau2Interval iv;
  iv.method = Tau2IntervalMethod::PL;
  iv.level = level;

  const double e0 = excess(0.0);
  if (reml.value == 0.0 || e0 <= 0.0) {
    iv.lo = 0.0;
    iv.lo_truncated = true;
  } else {
    iv.lo = detail::find_root(excess, 0.0, reml.value, e0, excess(reml.value)).x;
  }

  const double start = std::max(reml.value, max_variance(effects));
  double prev = reml.value;
  double prev_val = excess(reml.value);
  for (double t = std::max(start, 2.0 * reml.value);; t = std::min(2.0 * t, cap)) {
    const double v = excess(t);
    if (v >= 0.0) {
      iv.hi = detail::find_root(excess, prev, t, prev_val, v).x;
      break;
    }
    if (t >= cap) {
      iv.hi = kInfinity;
      iv.hi_unbounded = true;
      break;
    }
    prev = t;
    prev_val = v;
  }
  return iv;
}

Tau2Interval tau2_interval(std::span<const EffectRow> effects, Tau2IntervalMethod method,
                           double level) {
  switch (method) {
    case Tau2IntervalMethod::QP: return qp_interval(effects, level);
    case Tau2IntervalMethod::BJ: return bj_interval(effects, level);
    case Tau2IntervalMethod::J: return j_interval(effects, level);
    case Tau2IntervalMethod::PL: return pl_interval(effects, level);
  }
  throw Error(ErrorCode::DomainError, "unknown tau2 interval method");
}

}  // namespace metaratio
