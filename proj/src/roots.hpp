#pragma once

// Bracketed scalar root finding and bracket expansion shared by the
// estimators. Internal header.

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <optional>

#include "metaratio/error.hpp"

namespace metaratio::detail {

struct RootResult {
  double x = 0.0;
  int iterations = 0;
};

/// Root of f on [lo, hi] where f(lo) and f(hi) differ in sign (or one is 0).
/// Terminates when the bracket is relatively narrower than 2^-bits.
template <typename F>
RootResult find_root(F&& f, double lo, double hi, double f_lo, double f_hi, int bits = 50,
                     std::uintmax_t max_iter = 400) {
  if (f_lo == 0.0) return {lo, 0};
  if (f_hi == 0.0) return {hi, 0};
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw Error(ErrorCode::NoBracket, "root is not bracketed");
  }
  std::uintmax_t iters = max_iter;
  auto tol = [bits](double a, double b) {
    return std::fabs(a - b) <= std::ldexp(std::fmax(std::fabs(a), std::fabs(b)), -bits) ||
           std::fabs(a - b) <= 1e-300;
  };
  auto r = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, iters);
  if (iters >= max_iter) {
    throw Error(ErrorCode::NonConvergence, "root finder exhausted its iteration budget");
  }
  return {0.5 * (r.first + r.second), static_cast<int>(iters)};
}

template <typename F>
RootResult find_root(F&& f, double lo, double hi, int bits = 50, std::uintmax_t max_iter = 400) {
  return find_root(f, lo, hi, f(lo), f(hi), bits, max_iter);
}

/// Starting from `start`, doubles the upper end until `f(hi)` has the sign
/// of `want_positive` or `cap` is passed. Returns the bracket end, or nothing
/// when the cap is reached without a sign change.
template <typename F>
std::optional<std::pair<double, double>> expand_upper(F&& f, double start, double cap,
                                                      bool want_positive) {
  double hi = start;
  for (;;) {
    const double v = f(hi);
    if ((v > 0.0) == want_positive || v == 0.0) return std::make_pair(hi, v);
    if (hi >= cap) return std::nullopt;
    hi = std::fmin(2.0 * hi, cap);
  }
}

}  // namespace metaratio::detail
