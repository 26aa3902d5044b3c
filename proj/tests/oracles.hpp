#pragma once

// Independent reference computations shared by the tests. Nothing here calls
// into the library under test.

#include <cmath>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "metaratio/model.hpp"

namespace oracle {

inline double chi2_quantile(double df, double p) {
  return boost::math::quantile(boost::math::chi_squared(df), p);
}
inline double chi2_cdf(double df, double x) {
  return boost::math::cdf(boost::math::chi_squared(df), x);
}
inline double t_quantile(double df, double p) {
  return boost::math::quantile(boost::math::students_t(df), p);
}
inline double z_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

// Generalized Q with weights 1 / (v + tau2), written out directly.
inline double q_at(const std::vector<double>& y, const std::vector<double>& v, double tau2) {
  double sw = 0, swy = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sw += 1 / (v[i] + tau2);
    swy += y[i] / (v[i] + tau2);
  }
  const double mean = swy / sw;
  double q = 0;
  for (std::size_t i = 0; i < y.size(); ++i) q += (y[i] - mean) * (y[i] - mean) / (v[i] + tau2);
  return q;
}

// Restricted log-likelihood up to a constant.
inline double reml_loglik(const std::vector<double>& y, const std::vector<double>& v, double tau2) {
  double sw = 0, swy = 0, slog = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sw += 1 / (v[i] + tau2);
    swy += y[i] / (v[i] + tau2);
    slog += std::log(v[i] + tau2);
  }
  return -0.5 * (slog + q_at(y, v, tau2) + std::log(sw));
}

inline std::vector<metaratio::EffectRow> rows(const std::vector<double>& y,
                                              const std::vector<double>& v) {
  std::vector<metaratio::EffectRow> out;
  for (std::size_t i = 0; i < y.size(); ++i) out.push_back({y[i], v[i], false, false});
  return out;
}

}  // namespace oracle
