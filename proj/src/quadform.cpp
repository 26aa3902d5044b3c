#include "metaratio/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "metaratio/distributions.hpp"
#include "metaratio/error.hpp"
#include "metaratio/model.hpp"
#include "roots.hpp"

namespace metaratio {

namespace {

constexpr double kDropRelative = 1e-12;
constexpr double kTieRelative = 1e-12;
constexpr double kEqualRelative = 1e-12;
constexpr double kTruncationTol = 1e-9;
constexpr double kQuadratureTol = 1e-7;
constexpr double kSeriesTol = 1e-10;
constexpr double kPanelTol = 1e-10;
constexpr int kMaxSplits = 12;
constexpr double kBoundTol = 1e-9;

struct Pole {
  double d;
  double u2;
};

// Root of 1 - sum u2/(d - x) strictly between poles upper - 1 and upper.
// The secular function is multiplied by (x - d_lo)(d_hi - x), which keeps its
// sign inside the bracket and removes the two poles at the ends.
double secular_root(const std::vector<Pole>& poles, std::size_t upper) {
  const Pole& p_lo = poles[upper - 1];
  const Pole& p_hi = poles[upper];
  auto h = [&](double x) {
    double r = 1.0;
    for (std::size_t j = 0; j < poles.size(); ++j) {
      if (j != upper - 1 && j != upper) r -= poles[j].u2 / (poles[j].d - x);
    }
    return (x - p_lo.d) * (p_hi.d - x) * r + p_lo.u2 * (p_hi.d - x) - p_hi.u2 * (x - p_lo.d);
  };
  const double gap = p_hi.d - p_lo.d;
  return detail::find_root(h, p_lo.d, p_hi.d, p_lo.u2 * gap, -p_hi.u2 * gap, 42).x;
}

}  // namespace

WeightedChiSq q_eigenvalues(std::span<const double> a, std::span<const double> marginal_vars) {
  if (a.size() != marginal_vars.size()) {
    throw Error(ErrorCode::DimensionMismatch, "constants and variances differ in length");
  }
  if (a.size() < 2) throw Error(ErrorCode::TooFewStudies, "need at least 2 studies");
  const double a_sum = std::accumulate(a.begin(), a.end(), 0.0);
  std::vector<Pole> raw(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0.0) || !(marginal_vars[i] > 0.0)) {
      throw Error(ErrorCode::DomainError, "constants and variances must be positive");
    }
    raw[i] = {a[i] * marginal_vars[i], a[i] * a[i] * marginal_vars[i] / a_sum};
  }
  std::sort(raw.begin(), raw.end(), [](const Pole& x, const Pole& y) { return x.d < y.d; });

  // Deflate ties: a group of g equal poles contributes g - 1 eigenvalues
  // equal to the pole and one merged pole to the secular equation.
  const double d_max = raw.back().d;
  std::vector<double> eig;
  eig.reserve(a.size());
  std::vector<Pole> poles;
  for (const auto& p : raw) {
    if (!poles.empty() && p.d - poles.back().d <= kTieRelative * d_max) {
      poles.back().u2 += p.u2;
      eig.push_back(poles.back().d);
    } else {
      poles.push_back(p);
    }
  }
  // The root below the smallest pole is the zero eigenvalue of B (B 1 = 0).
  for (std::size_t j = 1; j < poles.size(); ++j) eig.push_back(secular_root(poles, j));

  std::sort(eig.begin(), eig.end(), std::greater<>());
  const double cutoff = kDropRelative * (eig.empty() ? 0.0 : eig.front());
  std::erase_if(eig, [cutoff](double v) { return !(v > cutoff); });
  return {std::move(eig)};
}

namespace detail {

double weighted_chisq_cdf_ruben(std::span<const double> lambdas, double x,
                                std::size_t max_terms) {
  const std::size_t m = lambdas.size();
  const double beta = *std::min_element(lambdas.begin(), lambdas.end());

  // With beta = min lambda every gamma_j lies in [0, 1), so all mixture
  // weights c_k are nonnegative and sum to 1.
  std::vector<double> gamma(m);
  double log_c0 = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    gamma[j] = 1.0 - beta / lambdas[j];
    log_c0 += 0.5 * std::log(beta / lambdas[j]);
  }

  const double y = x / beta;
  const double half_y = 0.5 * y;
  double nu = static_cast<double>(m);
  double f = chi2_cdf(nu, y);
  // Decrement between F_nu and F_{nu + 2}.
  double h = std::exp(0.5 * nu * std::log(half_y) - half_y - std::lgamma(0.5 * nu + 1.0));

  std::vector<double> c{std::exp(log_c0)};
  std::vector<double> g{0.0};
  std::vector<double> powers(m, 1.0);
  double total = c[0] * f;
  double c_sum = c[0];
  for (std::size_t k = 1; k <= max_terms; ++k) {
    f = std::max(f - h, 0.0);
    h *= half_y / (0.5 * nu + 1.0);
    nu += 2.0;
    // Remaining terms are bounded by F_nu(y) times the unassigned weight.
    if (f * std::max(1.0 - c_sum, 0.0) < kSeriesTol) return std::clamp(total, 0.0, 1.0);

    double gk = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      powers[j] *= gamma[j];
      gk += powers[j];
    }
    g.push_back(0.5 * gk);
    double ck = 0.0;
    for (std::size_t r = 0; r < k; ++r) ck += g[k - r] * c[r];
    ck /= static_cast<double>(k);
    c.push_back(ck);
    total += ck * f;
    c_sum += ck;
  }
  return -1.0;
}

double weighted_chisq_cdf_imhof(std::span<const double> lambdas, double x) {
  using std::numbers::pi;
  const double m = static_cast<double>(lambdas.size());
  double sum_lambda = 0.0, sum_log_lambda = 0.0, lmax = 0.0;
  for (double l : lambdas) {
    sum_lambda += l;
    sum_log_lambda += std::log(l);
    lmax = std::max(lmax, l);
  }

  auto theta = [&](double u) {
    double s = 0.0;
    for (double l : lambdas) s += std::atan(l * u);
    return 0.5 * s - 0.5 * x * u;
  };
  auto log_rho = [&](double u) {
    double s = 0.0;
    for (double l : lambdas) s += std::log1p(l * l * u * u);
    return 0.25 * s;
  };
  auto dtheta = [&](double u) {
    double s = 0.0;
    for (double l : lambdas) s += l / (1.0 + l * l * u * u);
    return 0.5 * s - 0.5 * x;
  };

  // Truncation point: the smaller of Imhof's monotone bound and the
  // integration-by-parts bound that holds once theta is decreasing.
  auto tail_bound = [&](double u) {
    const double crude =
        std::exp(-std::log(pi * 0.5 * m) - 0.5 * m * std::log(u) - 0.5 * sum_log_lambda);
    const double slope = dtheta(u);
    double ibp = kInfinity;
    if (slope < 0.0) ibp = 2.0 / (pi * u * std::exp(log_rho(u)) * -slope);
    return std::min(crude, ibp);
  };
  double upper = 1.0 / lmax;
  int doublings = 0;
  while (tail_bound(upper) > kTruncationTol) {
    upper *= 2.0;
    if (++doublings > 200) {
      throw Error(ErrorCode::ToleranceNotMet, "Imhof truncation point not found");
    }
  }

  const double slope0 = 0.5 * (sum_lambda - x);
  auto integrand = [&](double u) {
    if (u < 1e-300) return slope0;
    return std::sin(theta(u)) / (u * std::exp(log_rho(u)));
  };

  // Panels about four oscillations wide. theta' decreases towards -x/2, so
  // max(|theta'(u)|, x/2) bounds the rate over a panel starting at u.
  // Over whole oscillations a panel integral nearly cancels, so accuracy is
  // judged against an absolute budget spread over [0, upper] rather than
  // relative to the panel value.
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double density = kPanelTol / upper;
  double integral = 0.0, error = 0.0;
  auto adapt = [&](auto&& self, double a, double b, int depth) -> void {
    double err = 0.0;
    const double value = Rule::integrate(integrand, a, b, 0, 0.0, &err);
    if (err > density * (b - a) && depth < kMaxSplits) {
      const double mid = 0.5 * (a + b);
      self(self, a, mid, depth + 1);
      self(self, mid, b, depth + 1);
      return;
    }
    integral += value;
    error += err;
  };
  double u = 0.0;
  while (u < upper) {
    const double rate = std::max(std::fabs(dtheta(u)), 0.5 * x);
    const double end = std::min(upper, u + 8.0 * pi / rate);
    adapt(adapt, u, end, 0);
    u = end;
  }
  if (!(error < kQuadratureTol) || !std::isfinite(integral)) {
    throw Error(ErrorCode::ToleranceNotMet,
                "Imhof quadrature error estimate " + std::to_string(error));
  }
  return std::clamp(0.5 - integral / pi, 0.0, 1.0);
}

}  // namespace detail

double cdf_weighted_chisq(const WeightedChiSq& w, double x) {
  if (!(x >= 0.0)) throw Error(ErrorCode::DomainError, "x must be >= 0");
  if (w.lambdas.empty() || std::isinf(x)) return 1.0;
  if (x == 0.0) return 0.0;
  for (double l : w.lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw Error(ErrorCode::DomainError, "weighted chi-square coefficients must be positive");
    }
  }
  const auto [min_it, max_it] = std::minmax_element(w.lambdas.begin(), w.lambdas.end());
  const double m = static_cast<double>(w.lambdas.size());
  if (*max_it - *min_it <= kEqualRelative * *max_it) {
    const double mean = std::accumulate(w.lambdas.begin(), w.lambdas.end(), 0.0) / m;
    return chi2_cdf(m, x / mean);
  }
  // The sum lies between lambda_min and lambda_max times a chi-square with m
  // degrees of freedom; when those bounds agree the answer is pinned.
  const double bound_lo = chi2_cdf(m, x / *max_it);
  const double bound_hi = chi2_cdf(m, x / *min_it);
  if (bound_hi - bound_lo <= kBoundTol) return 0.5 * (bound_lo + bound_hi);
  const double ruben = detail::weighted_chisq_cdf_ruben(w.lambdas, x);
  if (ruben >= 0.0) return ruben;
  return detail::weighted_chisq_cdf_imhof(w.lambdas, x);
}

}  // namespace metaratio
