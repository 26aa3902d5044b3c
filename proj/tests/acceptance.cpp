// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "metaratio/analysis.hpp"
#include "metaratio/effects.hpp"
#include "metaratio/heterogeneity.hpp"
#include "metaratio/pooling.hpp"
#include "metaratio/quadform.hpp"
#include "metaratio/report.hpp"
#include "metaratio/simgrid.hpp"
#include "metaratio/tau_intervals.hpp"
#include "oracles.hpp"

using namespace metaratio;

namespace {

constexpr long kReps = 1000;
constexpr std::uint64_t kSeed = 20180830;

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& observed) {
  std::printf("%s criterion %d: %s [%s]\n", pass ? "PASS" : "FAIL", id, what.c_str(),
              observed.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string num(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

RunOptions usual_only() {
  RunOptions o;
  o.pipelines = {Pipeline::Usual};
  o.threads = 0;
  return o;
}

// Heterogeneous meta-analyses drawn from the lognormal data model, the same
// inputs the estimators see in simulation.
std::vector<std::vector<EffectRow>> sampled_meta_analyses(int count) {
  std::vector<std::vector<EffectRow>> out;
  const std::vector<Scenario> shapes{{0.0, 0.3, 5, 40},  {0.5, 0.5, 10, 20}, {1.0, 1.0, 30, 100},
                                     {0.2, 0.1, 10, 250}, {2.0, 0.7, 5, 10},  {0.0, 0.0, 10, 40}};
  for (int i = 0; i < count; ++i) {
    const Scenario& s = shapes[i % shapes.size()];
    RngStream rng(7, scenario_stream_key(s), static_cast<std::uint64_t>(i));
    const auto studies = generate_meta_sample(s, rng);
    out.push_back(compute_effects(studies, Pipeline::Usual));
  }
  return out;
}

std::vector<double> estimates(const std::vector<EffectRow>& e) {
  std::vector<double> y;
  for (const auto& r : e) y.push_back(r.estimate);
  return y;
}
std::vector<double> variances(const std::vector<EffectRow>& e) {
  std::vector<double> v;
  for (const auto& r : e) v.push_back(r.variance);
  return v;
}

void criterion1() {
  const auto r = run_scenario({0.0, 1.0, 100, 1000}, kReps, kSeed, usual_only());
  const auto& s = r.at(Pipeline::Usual, "DL", Metric::BiasTau2);
  report(1, std::fabs(s.value + 0.28) <= 0.05,
         "DL bias at lambda=0, n=1000, K=100, tau2=1 is -0.28 +/- 0.05",
         "bias " + num(s.value) + ", MC SE " + num(s.mc_se));
}

void criterion2() {
  GridConfig cfg;
  cfg.lambdas = {0.0};
  for (int i = 0; i <= 10; ++i) cfg.tau2s.push_back(i / 10.0);
  cfg.ks = {10};
  cfg.ns = {4};
  cfg.reps = kReps;
  cfg.seed = kSeed;
  cfg.run = usual_only();
  const auto results = run_grid(cfg);

  // Least-squares line of the mean bias on the true tau2, per method.
  bool any = false;
  std::string observed;
  for (auto m : kTau2Methods) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : results) {
      const double x = r.scenario.tau2;
      const double y = r.at(Pipeline::Usual, to_string(m), Metric::BiasTau2).value;
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(results.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    const bool ok = std::fabs(intercept - 0.4) <= 0.1 && std::fabs(slope - 0.9) <= 0.1;
    any = any || ok;
    if (!observed.empty()) observed += "; ";
    observed += std::string(to_string(m)) + " intercept " + num(intercept, 3) + " slope " +
                num(slope, 3);
  }
  report(2, any,
         "tau2 bias at lambda=0, n=4, K=10 follows 0.4 + 0.9 tau2 (+/- 0.1 each) for some method",
         observed);
}

void criterion3() {
  const auto r = run_scenario({0.0, 0.0, 125, 4}, kReps, kSeed, usual_only());
  bool ok = true;
  std::string observed;
  for (auto m : kTau2IntervalMethods) {
    const double c = r.at(Pipeline::Usual, to_string(m), Metric::CoverageTau2).value;
    ok = ok && c < 0.02;
    if (!observed.empty()) observed += ", ";
    observed += std::string(to_string(m)) + " " + num(c, 3);
  }
  report(3, ok, "tau2 interval coverage below 0.02 at lambda=0, n=4, tau2=0, K=125", observed);
}

void criterion4() {
  RunOptions o;
  o.pipelines = {Pipeline::Corrected};
  o.threads = 0;
  bool ok = true;
  std::string observed;
  for (double t2 : {0.1, 0.5, 1.0}) {
    const auto r = run_scenario({0.2, t2, 10, 40}, kReps, kSeed, o);
    const double c = r.at(Pipeline::Corrected, "SSW-MP", Metric::CoverageLambda).value;
    ok = ok && c >= 0.925 && c <= 0.975;
    if (!observed.empty()) observed += ", ";
    observed += "tau2=" + num(t2, 1) + ": " + num(c, 3);
  }
  report(4, ok, "SSW-MP coverage in [0.925, 0.975] at lambda=0.2, n=40, K=10 (corrected)",
         observed);
}

void criterion5() {
  const double se = coverage_mc_se(0.95, 10000);
  report(5, std::fabs(se - 0.00218) <= 5e-6, "coverage MC SE at p=0.95, 10^4 reps is 0.00218",
         num(se, 7));
}

void criterion6() {
  double mp_res = 0, qp_res = 0, pl_res = 0, reml_fd = 0;
  int mp_n = 0, qp_n = 0, pl_n = 0, reml_n = 0;
  const double crit = oracle::chi2_quantile(1, 0.95);
  for (const auto& e : sampled_meta_analyses(300)) {
    const auto y = estimates(e);
    const auto v = variances(e);
    const double df = e.size() - 1.0;

    const auto mp = tau2_mp(e);
    if (!mp.truncated) {
      mp_res = std::max(mp_res, std::fabs(oracle::q_at(y, v, mp.value) - df));
      ++mp_n;
    }
    const auto qp = qp_interval(e);
    if (!qp.lo_truncated) {
      qp_res = std::max(qp_res, std::fabs(oracle::q_at(y, v, qp.lo) - oracle::chi2_quantile(df, 0.975)));
      ++qp_n;
    }
    if (!qp.hi_truncated && !qp.hi_unbounded) {
      qp_res = std::max(qp_res, std::fabs(oracle::q_at(y, v, qp.hi) - oracle::chi2_quantile(df, 0.025)));
      ++qp_n;
    }
    const auto reml = tau2_reml(e);
    const double top = oracle::reml_loglik(y, v, reml.value);
    const auto pl = pl_interval(e);
    if (!pl.lo_truncated) {
      pl_res = std::max(pl_res, std::fabs(2 * (top - oracle::reml_loglik(y, v, pl.lo)) - crit));
      ++pl_n;
    }
    if (!pl.hi_unbounded) {
      pl_res = std::max(pl_res, std::fabs(2 * (top - oracle::reml_loglik(y, v, pl.hi)) - crit));
      ++pl_n;
    }
    if (!reml.truncated) {
      const double h = 1e-5 * (1 + reml.value);
      const double fd = (oracle::reml_loglik(y, v, reml.value + h) -
                         oracle::reml_loglik(y, v, reml.value - h)) /
                        (2 * h);
      reml_fd = std::max(reml_fd, std::fabs(fd));
      ++reml_n;
    }
  }
  const bool ok = mp_res <= 1e-8 && qp_res <= 1e-6 && pl_res <= 1e-6 && reml_fd <= 1e-4 &&
                  mp_n > 0 && qp_n > 0 && pl_n > 0 && reml_n > 0;
  char obs[256];
  std::snprintf(obs, sizeof obs,
                "MP %.1e (%d), QP %.1e (%d), PL %.1e (%d), REML score %.1e (%d)", mp_res, mp_n,
                qp_res, qp_n, pl_res, pl_n, reml_fd, reml_n);
  report(6, ok, "root and optimum residuals within tolerance", obs);
}

void criterion7() {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<int> size(1, 10);
  std::uniform_real_distribution<double> u(0.05, 3.0), frac(0.3, 2.0);
  std::normal_distribution<double> z;
  double worst_mc = 0;
  for (int set = 0; set < 20; ++set) {
    std::vector<double> l(static_cast<std::size_t>(size(gen)));
    double sum = 0;
    for (auto& x : l) sum += (x = u(gen));
    const double x = frac(gen) * sum;
    long hits = 0;
    const long draws = 2000000;
    for (long d = 0; d < draws; ++d) {
      double q = 0;
      for (double c : l) {
        const double g = z(gen);
        q += c * g * g;
      }
      hits += q <= x ? 1 : 0;
    }
    worst_mc = std::max(worst_mc, std::fabs(cdf_weighted_chisq(WeightedChiSq{l}, x) -
                                            static_cast<double>(hits) / draws));
  }
  double worst_chi2 = 0;
  for (int m = 1; m <= 10; ++m) {
    for (double c : {0.2, 1.0, 4.0}) {
      for (double x : {0.05, 0.5, 2.0, 8.0, 30.0}) {
        worst_chi2 = std::max(worst_chi2, std::fabs(cdf_weighted_chisq(WeightedChiSq{std::vector<double>(m, c)}, x) -
                                                     oracle::chi2_cdf(m, x / c)));
      }
    }
  }
  char obs[128];
  std::snprintf(obs, sizeof obs, "max |MC diff| %.5f, max |chi2 diff| %.1e", worst_mc, worst_chi2);
  report(7, worst_mc <= 0.002 && worst_chi2 <= 1e-8,
         "weighted chi-square CDF matches Monte Carlo (0.002) and chi-square (1e-8)", obs);
}

void criterion8() {
  std::mt19937_64 gen(88);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.02, 0.5);
  double est_gap = 0, pooled_gap = 0, interval_gap = 0;
  for (int c = 0; c < 50; ++c) {
    const int k = 3 + c % 12;
    const double v = u(gen);
    std::vector<double> y;
    for (int i = 0; i < k; ++i) y.push_back(z(gen));
    const auto e = oracle::rows(y, std::vector<double>(k, v));
    const double dl = tau2_dl(e).value;
    est_gap = std::max({est_gap, std::fabs(tau2_mp(e).value - dl), std::fabs(tau2_j(e).value - dl)});

    const std::vector<StudySummary> studies(k, StudySummary{"s", {10, 1, 1}, {12, 1, 1}});
    const double ssw = pool_ssw(e, studies, tau2_mp(e)).estimate;
    for (auto m : kTau2Methods) {
      pooled_gap = std::max(pooled_gap, std::fabs(pool_iv(e, estimate_tau2(e, m)).estimate - ssw));
    }
    const auto bj = bj_interval(e);
    const auto j = j_interval(e);
    interval_gap = std::max({interval_gap, std::fabs(bj.lo - j.lo) / (1 + bj.lo),
                             std::fabs(bj.hi - j.hi) / (1 + bj.hi)});
  }
  char obs[160];
  std::snprintf(obs, sizeof obs, "tau2 %.1e, pooled %.1e, BJ vs J %.1e", est_gap, pooled_gap,
                interval_gap);
  report(8, est_gap <= 1e-8 && pooled_gap <= 1e-8 && interval_gap <= 1e-8,
         "equal-variance degeneracies hold to 1e-8", obs);
}

void criterion9() {
  auto run_desk = [](int threads) {
    GridConfig cfg = desk_grid();
    cfg.run.threads = threads;
    return format_results_csv(to_rows(run_grid(cfg)));
  };
  const auto a = run_desk(1);
  const auto b = run_desk(1);
  const auto c = run_desk(8);
  report(9, a == b && a == c, "desk grid output is byte-identical across runs and threads {1, 8}",
         std::to_string(a.size()) + " bytes; repeat " + (a == b ? "same" : "differs") +
             ", 8 threads " + (a == c ? "same" : "differs"));
}

void criterion10() {
  // Effects drawn directly from N(theta, v_i + tau2) with known v_i.
  const std::vector<double> v{0.05, 0.1, 0.1, 0.2, 0.3};
  const double tau2 = 0.5, theta = 0.3;
  const long reps = 2000;
  const std::array<Tau2IntervalMethod, 3> methods{Tau2IntervalMethod::BJ, Tau2IntervalMethod::J,
                                                  Tau2IntervalMethod::QP};
  std::array<long, 3> hits{};
  std::array<long, 3> used{};
  for (long r = 0; r < reps; ++r) {
    RngStream rng(kSeed, 0x1dea1, static_cast<std::uint64_t>(r));
    std::vector<EffectRow> e;
    for (double vi : v) e.push_back({sample_normal(theta, std::sqrt(vi + tau2), rng), vi, false, false});
    for (std::size_t m = 0; m < methods.size(); ++m) {
      try {
        hits[m] += tau2_interval(e, methods[m]).covers(tau2) ? 1 : 0;
        ++used[m];
      } catch (const Error&) {
      }
    }
  }
  bool ok = true;
  std::string observed;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const double c = static_cast<double>(hits[m]) / used[m];
    const double se = coverage_mc_se(0.95, used[m]);
    ok = ok && used[m] == reps && std::fabs(c - 0.95) <= 3 * se;
    if (!observed.empty()) observed += ", ";
    observed += std::string(to_string(methods[m])) + " " + num(c, 4);
  }
  observed += " (3 MC SE = " + num(3 * coverage_mc_se(0.95, reps), 4) + ")";
  report(10, ok, "idealized normal model: BJ/J/QP cover tau2 within 3 MC SE of 0.95 at K=5",
         observed);
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<void (*)()> criteria{criterion1, criterion2, criterion3, criterion4,
                                         criterion5, criterion6, criterion7, criterion8,
                                         criterion9, criterion10};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, "threw", e.what());
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d of %zu criteria failed (%.0f s)\n", failures, criteria.size(), secs);
  return failures == 0 ? 0 : 1;
}
