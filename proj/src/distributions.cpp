#include "metaratio/distributions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "metaratio/error.hpp"
#include "roots.hpp"

namespace metaratio {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr double kTiny = 1e-300;
constexpr double kEps = 1e-16;
constexpr int kMaxTerms = 100000;

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

void check_probability(double p, const char* fn) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::DomainError,
                std::string(fn) + ": probability must lie in (0, 1), got " + std::to_string(p));
  }
}

void check_df(double df, const char* fn) {
  if (!(df > 0.0) || !std::isfinite(df)) {
    throw Error(ErrorCode::DomainError,
                std::string(fn) + ": degrees of freedom must be positive, got " +
                    std::to_string(df));
  }
}

// Series for P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxTerms; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Continued fraction for the incomplete beta function.
double beta_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxTerms; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h;
}

// Upper tail of Student's t for t >= 0.
double t_upper_tail(double df, double t) {
  const double x = df / (df + t * t);
  return 0.5 * beta_inc(0.5 * df, 0.5, x);
}

double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Quantile of a continuous distribution on [0, inf) (or the upper half of a
// symmetric one) by solving the lower or upper tail equation, whichever is
// better conditioned.
template <typename Cdf, typename Sf>
double positive_quantile(Cdf&& cdf, Sf&& sf, double p, double start) {
  const bool upper = p > 0.5;
  const double target = upper ? 1.0 - p : p;
  // g is increasing in x in both branches.
  auto g = [&](double x) { return upper ? target - sf(x) : cdf(x) - target; };
  const auto hi = detail::expand_upper(g, start, std::numeric_limits<double>::max(), true);
  if (!hi) throw Error(ErrorCode::NoBracket, "quantile search overflowed");
  const double lo_x = 0.0;
  return detail::find_root(g, lo_x, hi->first, g(lo_x), hi->second, 52).x;
}

}  // namespace

// ---------------------------------------------------------------------------
// RNG
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ splitmix64(v + 0x632be59bd9b4e019ULL));
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream)
    : seed_(seed), stream_(stream), substream_(substream) {
  std::uint64_t x = hash_combine(hash_combine(splitmix64(seed), stream), substream);
  for (auto& s : state_) {
    x += kGolden;
    s = splitmix64(x);
  }
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::standard_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal_ = v * f;
  has_cached_normal_ = true;
  return u * f;
}

double sample_normal(double mu, double sigma, RngStream& rng) {
  if (!(sigma >= 0.0)) {
    throw Error(ErrorCode::DomainError, "sample_normal: sigma must be >= 0");
  }
  // Always consume a deviate so streams stay aligned across sigma values.
  const double z = rng.standard_normal();
  return mu + sigma * z;
}

LognormalParams lognormal_params_from_moments(double mean, double variance) {
  if (!(mean > 0.0) || !(variance > 0.0) || !std::isfinite(mean) || !std::isfinite(variance)) {
    throw Error(ErrorCode::NonPositiveMoment, "lognormal moments must be finite and positive");
  }
  const double s2 = std::log1p(variance / (mean * mean));
  return {std::log(mean) - 0.5 * s2, std::sqrt(s2)};
}

double sample_lognormal_by_moments(double mean, double variance, RngStream& rng) {
  const auto p = lognormal_params_from_moments(mean, variance);
  return std::exp(sample_normal(p.meanlog, p.sdlog, rng));
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

double log_gamma(double x) { return std::lgamma(x); }

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || std::isnan(x)) {
    throw Error(ErrorCode::DomainError, "gamma_p: requires a > 0 and x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || std::isnan(x)) {
    throw Error(ErrorCode::DomainError, "gamma_q: requires a > 0 and x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double beta_inc(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::DomainError, "beta_inc: requires a, b > 0 and x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  check_probability(p, "normal_quantile");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -normal_quantile(1.0 - p);
  return positive_quantile([](double x) { return normal_cdf(x); },
                           [](double x) { return normal_sf(x); }, p, 1.0);
}

double chi2_cdf(double df, double x) {
  check_df(df, "chi2_cdf");
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * df, 0.5 * x);
}

double chi2_sf(double df, double x) {
  check_df(df, "chi2_sf");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * x);
}

double chi2_quantile(double df, double p) {
  check_df(df, "chi2_quantile");
  check_probability(p, "chi2_quantile");
  return positive_quantile([df](double x) { return chi2_cdf(df, x); },
                           [df](double x) { return chi2_sf(df, x); }, p, std::fmax(df, 1.0));
}

double t_cdf(double df, double t) {
  check_df(df, "t_cdf");
  if (std::isnan(t)) throw Error(ErrorCode::DomainError, "t_cdf: t is NaN");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = t_upper_tail(df, std::fabs(t));
  return t >= 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double df, double p) {
  check_df(df, "t_quantile");
  check_probability(p, "t_quantile");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -t_quantile(df, 1.0 - p);
  return positive_quantile([df](double t) { return 1.0 - t_upper_tail(df, t); },
                           [df](double t) { return t_upper_tail(df, t); }, p, 1.0);
}

}  // namespace metaratio
