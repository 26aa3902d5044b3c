#include "metaratio/heterogeneity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "roots.hpp"

namespace metaratio {

namespace detail {

void check_effects(std::span<const EffectRow> effects, std::size_t min_k) {
  if (effects.size() < min_k) {
    throw Error(ErrorCode::TooFewStudies, "need at least " + std::to_string(min_k) +
                                              " studies, got " + std::to_string(effects.size()));
  }
  for (const auto& e : effects) {
    if (!std::isfinite(e.estimate) || !std::isfinite(e.variance) || !(e.variance > 0.0)) {
      throw Error(ErrorCode::DomainError, "effect rows need finite estimates and positive variances");
    }
  }
}

}  // namespace detail

namespace {

// Weighted mean and weighted sum of squared deviations for weights w(i).
template <typename W>
std::pair<double, double> weighted_mean_and_q(std::span<const EffectRow> effects, W&& w) {
  double sw = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < effects.size(); ++i) {
    const double wi = w(i);
    sw += wi;
    swy += wi * effects[i].estimate;
  }
  const double mean = swy / sw;
  double q = 0.0;
  for (std::size_t i = 0; i < effects.size(); ++i) {
    const double d = effects[i].estimate - mean;
    q += w(i) * d * d;
  }
  return {mean, q};
}

Tau2Estimate truncate_or(double raw, Tau2Method method) {
  Tau2Estimate est;
  est.method = method;
  est.truncated = raw < 0.0;
  est.value = est.truncated ? 0.0 : raw;
  return est;
}

}  // namespace

double cochran_q(std::span<const EffectRow> effects) { return generalized_q(effects, 0.0); }

double generalized_q(std::span<const EffectRow> effects, double tau2) {
  detail::check_effects(effects);
  if (!(tau2 >= 0.0)) throw Error(ErrorCode::DomainError, "tau2 must be >= 0");
  return weighted_mean_and_q(effects, [&](std::size_t i) {
           return 1.0 / (effects[i].variance + tau2);
         }).second;
}

double fixed_weight_q(std::span<const EffectRow> effects, std::span<const double> a) {
  detail::check_effects(effects);
  if (a.size() != effects.size()) {
    throw Error(ErrorCode::DimensionMismatch, "weights and effects differ in length");
  }
  return weighted_mean_and_q(effects, [&](std::size_t i) { return a[i]; }).second;
}

double restricted_loglik(std::span<const EffectRow> effects, double tau2) {
  double sum_log = 0.0, sw = 0.0, swy = 0.0;
  for (const auto& e : effects) {
    const double m = e.variance + tau2;
    sum_log += std::log(m);
    sw += 1.0 / m;
    swy += e.estimate / m;
  }
  const double mean = swy / sw;
  double q = 0.0;
  for (const auto& e : effects) {
    const double d = e.estimate - mean;
    q += d * d / (e.variance + tau2);
  }
  return -0.5 * (sum_log + q + std::log(sw));
}

double restricted_score(std::span<const EffectRow> effects, double tau2) {
  double sw = 0.0, sw2 = 0.0, swy = 0.0;
  for (const auto& e : effects) {
    const double w = 1.0 / (e.variance + tau2);
    sw += w;
    sw2 += w * w;
    swy += w * e.estimate;
  }
  const double mean = swy / sw;
  double sw2r2 = 0.0;
  for (const auto& e : effects) {
    const double w = 1.0 / (e.variance + tau2);
    const double d = e.estimate - mean;
    sw2r2 += w * w * d * d;
  }
  return 0.5 * (-sw + sw2r2 + sw2 / sw);
}

double tau2_search_cap(std::span<const EffectRow> effects) {
  double lo = effects.front().estimate, hi = lo, vmax = 0.0;
  for (const auto& e : effects) {
    lo = std::min(lo, e.estimate);
    hi = std::max(hi, e.estimate);
    vmax = std::max(vmax, e.variance);
  }
  return 10.0 * (hi - lo) * (hi - lo) + 10.0 * vmax;
}

Tau2Estimate tau2_dl(std::span<const EffectRow> effects) {
  detail::check_effects(effects);
  double s1 = 0.0, s2 = 0.0;
  for (const auto& e : effects) {
    const double w = 1.0 / e.variance;
    s1 += w;
    s2 += w * w;
  }
  const double denom = s1 - s2 / s1;
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::DegenerateWeights, "DL denominator is not positive");
  }
  const double k = static_cast<double>(effects.size());
  return truncate_or((cochran_q(effects) - (k - 1.0)) / denom, Tau2Method::DL);
}

Tau2Estimate tau2_j(std::span<const EffectRow> effects) {
  detail::check_effects(effects);
  std::vector<double> a(effects.size());
  double a_sum = 0.0, a2_sum = 0.0, av_sum = 0.0, a2v_sum = 0.0;
  for (std::size_t i = 0; i < effects.size(); ++i) {
    a[i] = 1.0 / std::sqrt(effects[i].variance);
    a_sum += a[i];
    a2_sum += a[i] * a[i];
    av_sum += a[i] * effects[i].variance;
    a2v_sum += a[i] * a[i] * effects[i].variance;
  }
  const double denom = a_sum - a2_sum / a_sum;
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::DegenerateWeights, "J denominator is not positive");
  }
  const double expected_at_zero = av_sum - a2v_sum / a_sum;
  return truncate_or((fixed_weight_q(effects, a) - expected_at_zero) / denom, Tau2Method::J);
}

Tau2Estimate tau2_mp(std::span<const EffectRow> effects) {
  detail::check_effects(effects);
  const double target = static_cast<double>(effects.size()) - 1.0;
  auto f = [&](double t) { return generalized_q(effects, t) - target; };
  Tau2Estimate est;
  est.method = Tau2Method::MP;
  const double f0 = f(0.0);
  if (f0 <= 0.0) {
    est.truncated = true;
    return est;
  }
  const double cap = tau2_search_cap(effects);
  double start = 0.0;
  for (const auto& e : effects) start = std::max(start, e.variance);
  start = std::min(start, cap);
  const auto hi = detail::expand_upper(f, start, cap, false);
  if (!hi) throw Error(ErrorCode::NoBracket, "MP equation has no root below the search cap");
  const auto root = detail::find_root(f, 0.0, hi->first, f0, hi->second);
  est.value = root.x;
  est.iterations = root.iterations;
  return est;
}

Tau2Estimate tau2_reml(std::span<const EffectRow> effects) {
  detail::check_effects(effects);
  Tau2Estimate est;
  est.method = Tau2Method::REML;
  const double cap = tau2_search_cap(effects);

  // Coarse log-spaced scan over (0, cap] plus the boundary.
  constexpr int kGrid = 60;
  std::array<double, kGrid + 2> grid{};
  grid[0] = 0.0;
  for (int j = 0; j <= kGrid; ++j) {
    grid[j + 1] = cap * std::pow(10.0, -10.0 + 10.0 * j / kGrid);
  }
  std::size_t best = 0;
  double best_ll = restricted_loglik(effects, 0.0);
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const double ll = restricted_loglik(effects, grid[j]);
    if (ll > best_ll) {
      best_ll = ll;
      best = j;
    }
  }
  est.iterations = static_cast<int>(grid.size());

  if (best == 0 && restricted_score(effects, 0.0) <= 0.0) {
    est.truncated = true;
    return est;
  }
  if (best == grid.size() - 1 && restricted_score(effects, cap) > 0.0) {
    throw Error(ErrorCode::NonConvergence, "REML optimum lies beyond the search cap");
  }

  const double lo = grid[best == 0 ? 0 : best - 1];
  const double hi = grid[std::min(best + 1, grid.size() - 1)];
  auto score = [&](double t) { return restricted_score(effects, t); };
  const double s_lo = score(lo);
  const double s_hi = score(hi);
  if (s_lo > 0.0 && s_hi < 0.0) {
    const auto root = detail::find_root(score, lo, hi, s_lo, s_hi);
    est.value = root.x;
    est.iterations += root.iterations;
  } else {
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::brent_find_minima(
        [&](double t) { return -restricted_loglik(effects, t); }, lo, hi, 50, iters);
    est.value = r.first;
    est.iterations += static_cast<int>(iters);
    if (iters >= 200) {
      throw Error(ErrorCode::NonConvergence, "REML maximization did not converge");
    }
  }
  if (restricted_loglik(effects, 0.0) >= restricted_loglik(effects, est.value)) {
    est.value = 0.0;
    est.truncated = true;
  }
  return est;
}

Tau2Estimate estimate_tau2(std::span<const EffectRow> effects, Tau2Method method) {
  switch (method) {
    case Tau2Method::DL: return tau2_dl(effects);
    case Tau2Method::REML: return tau2_reml(effects);
    case Tau2Method::MP: return tau2_mp(effects);
    case Tau2Method::J: return tau2_j(effects);
  }
  throw Error(ErrorCode::DomainError, "unknown tau2 method");
}

}  // namespace metaratio
