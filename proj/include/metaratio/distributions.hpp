#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace metaratio {

/// Deterministic random stream addressed by (seed, stream key, substream).
///
/// The generator is xoshiro256** whose state is derived from the address by
/// SplitMix64 mixing, so any stream can be constructed directly without
/// advancing another one. Two streams with the same address produce the same
/// sequence on every platform and under any scheduling of work.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t substream() const { return substream_; }

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  /// Standard normal deviate (Marsaglia polar method, cached pair).
  double standard_normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t substream_;
  std::array<std::uint64_t, 4> state_{};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Stateless 64-bit mixer used to derive stream keys.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v);

double sample_normal(double mu, double sigma, RngStream& rng);

struct LognormalParams {
  double meanlog = 0.0;
  double sdlog = 0.0;
};

/// Log-scale parameters of the lognormal with the given mean and variance.
LognormalParams lognormal_params_from_moments(double mean, double variance);
double sample_lognormal_by_moments(double mean, double variance, RngStream& rng);

// Special functions. Relative accuracy is about 1e-14 in the bulk.
double log_gamma(double x);
/// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);
/// Regularized incomplete beta I_x(a, b).
double beta_inc(double a, double b, double x);

double normal_cdf(double x);
double normal_quantile(double p);

double chi2_cdf(double df, double x);
/// Upper tail 1 - chi2_cdf computed without cancellation.
double chi2_sf(double df, double x);
double chi2_quantile(double df, double p);

double t_cdf(double df, double t);
double t_quantile(double df, double p);

}  // namespace metaratio
