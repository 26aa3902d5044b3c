#include "metaratio/simgrid.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "metaratio/effects.hpp"

namespace metaratio {

namespace {

ArmSummary draw_arm(int n, double mean, double variance, RngStream& rng) {
  const auto p = lognormal_params_from_moments(mean, variance);
  thread_local std::vector<double> xs;
  xs.resize(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (auto& x : xs) {
    x = std::exp(p.meanlog + p.sdlog * rng.standard_normal());
    sum += x;
  }
  const double m = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {n, m, std::sqrt(ss / (n - 1))};
}

template <typename T>
Outcome<T> strip(Outcome<T> o) {
  o.message.clear();
  return o;
}

PipelineRecord record_pipeline(std::span<const StudySummary> studies, Pipeline pipeline,
                               const RunOptions& options) {
  PipelineRecord rec;
  rec.pipeline = pipeline;
  std::vector<EffectRow> effects;
  try {
    effects = compute_effects(studies, pipeline, options.eq3_sign);
  } catch (const Error& e) {
    auto fail = [&](auto& arr) {
      for (auto& o : arr) o.failure = e.code();
    };
    fail(rec.tau2);
    fail(rec.tau2_intervals);
    fail(rec.lambda_hat);
    fail(rec.lambda_intervals);
    return rec;
  }
  for (const auto& e : effects) rec.floored_variances += e.variance_floored ? 1 : 0;

  const MetaAnalysis ma =
      analyze_effects(std::move(effects), studies, pipeline, {options.level, options.eq3_sign});
  for (std::size_t i = 0; i < 4; ++i) {
    rec.tau2[i] = strip(ma.tau2[i]);
    rec.tau2_intervals[i] = strip(ma.tau2_intervals[i]);
  }
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& p = ma.pooled[i];
    if (p.ok()) {
      rec.lambda_hat[i].value = p.value->estimate;
    } else {
      rec.lambda_hat[i].failure = p.failure;
    }
  }
  for (std::size_t i = 0; i < 7; ++i) rec.lambda_intervals[i] = strip(ma.lambda_intervals[i]);
  return rec;
}

// Running tallies for one (pipeline, method, metric).
struct MeanTally {
  std::vector<double> values;
  long failures = 0;

  MethodStat finish(Pipeline p, std::string_view method, Metric metric, double truth) const {
    MethodStat s{p, std::string(method), metric, 0.0, 0.0, static_cast<long>(values.size()),
                 failures};
    if (values.empty()) {
      s.value = std::numeric_limits<double>::quiet_NaN();
      s.mc_se = std::numeric_limits<double>::quiet_NaN();
      return s;
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / values.size();
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    s.value = mean - truth;
    s.mc_se = values.size() > 1 ? std::sqrt(ss / (values.size() - 1)) / std::sqrt(values.size())
                                : 0.0;
    return s;
  }
};

struct CoverageTally {
  long hits = 0;
  long used = 0;
  long failures = 0;

  void add_failure(ErrorCode code) {
    ++failures;
    // Tolerance failures count as misses; every other failure is excluded.
    if (code == ErrorCode::ToleranceNotMet) ++used;
  }

  MethodStat finish(Pipeline p, std::string_view method, Metric metric) const {
    MethodStat s{p, std::string(method), metric, 0.0, 0.0, used, failures};
    if (used == 0) {
      s.value = std::numeric_limits<double>::quiet_NaN();
      s.mc_se = std::numeric_limits<double>::quiet_NaN();
      return s;
    }
    s.value = static_cast<double>(hits) / used;
    s.mc_se = coverage_mc_se(s.value, used);
    return s;
  }
};

std::uint64_t bits_of(double x) { return std::bit_cast<std::uint64_t>(x == 0.0 ? 0.0 : x); }

}  // namespace

double coverage_mc_se(double p, long reps) {
  if (reps <= 0) throw Error(ErrorCode::DomainError, "reps must be positive");
  return std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
}

std::uint64_t scenario_stream_key(const Scenario& s) {
  std::uint64_t h = 0x6d657461726174ULL;
  h = hash_combine(h, bits_of(s.lambda));
  h = hash_combine(h, bits_of(s.tau2));
  h = hash_combine(h, static_cast<std::uint64_t>(s.k));
  h = hash_combine(h, static_cast<std::uint64_t>(s.n_total));
  h = hash_combine(h, bits_of(s.mu_control));
  h = hash_combine(h, bits_of(s.sigma2_t));
  h = hash_combine(h, bits_of(s.sigma2_c));
  return h;
}

std::vector<StudySummary> generate_meta_sample(const Scenario& scenario, RngStream& rng) {
  scenario.validate();
  const int arm = scenario.n_total / 2;
  const double tau = std::sqrt(scenario.tau2);
  std::vector<StudySummary> studies;
  studies.reserve(static_cast<std::size_t>(scenario.k));
  for (int i = 0; i < scenario.k; ++i) {
    const double lambda_i = sample_normal(scenario.lambda, tau, rng);
    StudySummary s;
    s.id = std::to_string(i + 1);
    s.treatment = draw_arm(arm, std::exp(lambda_i) * scenario.mu_control, scenario.sigma2_t, rng);
    s.control = draw_arm(arm, scenario.mu_control, scenario.sigma2_c, rng);
    studies.push_back(std::move(s));
  }
  return studies;
}

ReplicationRecord run_replication(const Scenario& scenario, RngStream& rng,
                                  const RunOptions& options) {
  const auto studies = generate_meta_sample(scenario, rng);
  ReplicationRecord rec;
  for (Pipeline p : options.pipelines) {
    rec.pipelines.push_back(record_pipeline(studies, p, options));
  }
  return rec;
}

ScenarioResult aggregate(const Scenario& scenario, const std::vector<ReplicationRecord>& records,
                         const RunOptions& options) {
  ScenarioResult result;
  result.scenario = scenario;
  result.reps = static_cast<long>(records.size());

  for (std::size_t pi = 0; pi < options.pipelines.size(); ++pi) {
    const Pipeline pipeline = options.pipelines[pi];
    std::array<MeanTally, 4> tau2_bias;
    std::array<CoverageTally, 4> tau2_cov;
    std::array<MeanTally, 5> lambda_bias;
    std::array<CoverageTally, 7> lambda_cov;
    std::array<long, 4> truncated{};
    std::array<long, 4> lo_truncated{};
    std::array<long, 4> unbounded{};
    long floored = 0;

    for (const auto& rec : records) {
      const PipelineRecord& r = rec.pipelines.at(pi);
      floored += r.floored_variances;
      for (std::size_t i = 0; i < 4; ++i) {
        if (r.tau2[i].ok()) {
          tau2_bias[i].values.push_back(r.tau2[i].value->value);
          truncated[i] += r.tau2[i].value->truncated ? 1 : 0;
        } else {
          ++tau2_bias[i].failures;
        }
        if (r.tau2_intervals[i].ok()) {
          const auto& iv = *r.tau2_intervals[i].value;
          ++tau2_cov[i].used;
          tau2_cov[i].hits += iv.covers(scenario.tau2) ? 1 : 0;
          lo_truncated[i] += iv.lo_truncated ? 1 : 0;
          unbounded[i] += iv.hi_unbounded ? 1 : 0;
        } else {
          tau2_cov[i].add_failure(*r.tau2_intervals[i].failure);
        }
      }
      for (std::size_t i = 0; i < 5; ++i) {
        if (r.lambda_hat[i].ok()) {
          lambda_bias[i].values.push_back(*r.lambda_hat[i].value);
        } else {
          ++lambda_bias[i].failures;
        }
      }
      for (std::size_t i = 0; i < 7; ++i) {
        if (r.lambda_intervals[i].ok()) {
          ++lambda_cov[i].used;
          lambda_cov[i].hits += r.lambda_intervals[i].value->covers(scenario.lambda) ? 1 : 0;
        } else {
          lambda_cov[i].add_failure(*r.lambda_intervals[i].failure);
        }
      }
    }

    for (std::size_t i = 0; i < 4; ++i) {
      result.stats.push_back(tau2_bias[i].finish(pipeline, to_string(kTau2Methods[i]),
                                                 Metric::BiasTau2, scenario.tau2));
    }
    for (std::size_t i = 0; i < 4; ++i) {
      result.stats.push_back(
          tau2_cov[i].finish(pipeline, to_string(kTau2IntervalMethods[i]), Metric::CoverageTau2));
    }
    for (std::size_t i = 0; i < 5; ++i) {
      result.stats.push_back(lambda_bias[i].finish(pipeline, to_string(kPooledMethods[i]),
                                                   Metric::BiasLambda, scenario.lambda));
    }
    for (std::size_t i = 0; i < 7; ++i) {
      result.stats.push_back(
          lambda_cov[i].finish(pipeline, to_string(kCiMethods[i]), Metric::CoverageLambda));
    }

    result.incidence.push_back({pipeline, "variance_floored", floored});
    for (std::size_t i = 0; i < 4; ++i) {
      result.incidence.push_back(
          {pipeline, "truncated:" + std::string(to_string(kTau2Methods[i])), truncated[i]});
    }
    for (std::size_t i = 0; i < 4; ++i) {
      const std::string m(to_string(kTau2IntervalMethods[i]));
      result.incidence.push_back({pipeline, "lo_truncated:" + m, lo_truncated[i]});
      result.incidence.push_back({pipeline, "hi_unbounded:" + m, unbounded[i]});
    }
  }
  return result;
}

ScenarioResult run_scenario(const Scenario& scenario, long reps, std::uint64_t seed,
                            const RunOptions& options) {
  GridConfig cfg;
  cfg.lambdas = {scenario.lambda};
  cfg.tau2s = {scenario.tau2};
  cfg.ks = {scenario.k};
  cfg.ns = {scenario.n_total};
  cfg.mu_control = scenario.mu_control;
  cfg.sigma2_t = scenario.sigma2_t;
  cfg.sigma2_c = scenario.sigma2_c;
  cfg.reps = reps;
  cfg.seed = seed;
  cfg.run = options;
  return run_grid(cfg).front();
}

std::vector<Scenario> GridConfig::scenarios() const {
  std::vector<Scenario> out;
  for (double l : lambdas) {
    for (double t : tau2s) {
      for (int k : ks) {
        for (int n : ns) {
          Scenario s{l, t, k, n, mu_control, sigma2_t, sigma2_c};
          out.push_back(s);
        }
      }
    }
  }
  return out;
}

GridConfig full_grid() {
  GridConfig g;
  g.lambdas = {0.0, 0.2, 0.5, 1.0, 2.0};
  for (int i = 0; i <= 10; ++i) g.tau2s.push_back(i / 10.0);
  g.ks = {5, 10, 30, 50, 100, 125};
  g.ns = {4, 10, 20, 40, 100, 250, 640, 1000};
  g.reps = 10000;
  return g;
}

GridConfig desk_grid() {
  GridConfig g;
  g.lambdas = {0.0, 1.0};
  g.tau2s = {0.0, 0.5, 1.0};
  g.ks = {5, 30};
  g.ns = {4, 40, 1000};
  g.reps = 1000;
  return g;
}

std::vector<ScenarioResult> run_grid(const GridConfig& config, const CellCallback& on_cell) {
  const auto cells = config.scenarios();
  if (config.reps < 1) throw Error(ErrorCode::ConfigError, "reps must be >= 1");
  if (config.run.chunk_size < 1) throw Error(ErrorCode::ConfigError, "chunk_size must be >= 1");
  if (config.run.pipelines.empty()) throw Error(ErrorCode::ConfigError, "no pipelines selected");
  for (const auto& c : cells) c.validate();

  const long chunk = config.run.chunk_size;
  const long chunks_per_cell = (config.reps + chunk - 1) / chunk;
  const std::size_t units = cells.size() * static_cast<std::size_t>(chunks_per_cell);

  std::vector<ScenarioResult> results(cells.size());
  std::vector<std::vector<std::vector<ReplicationRecord>>> pending(cells.size());
  for (auto& p : pending) p.resize(static_cast<std::size_t>(chunks_per_cell));
  std::vector<std::atomic<long>> remaining(cells.size());
  for (auto& r : remaining) r.store(chunks_per_cell);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex callback_mutex;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::atomic<bool> abort{false};

  auto worker = [&] {
    try {
      for (;;) {
        if (abort.load()) return;
        const std::size_t u = next.fetch_add(1);
        if (u >= units) return;
        const std::size_t cell = u / static_cast<std::size_t>(chunks_per_cell);
        const long c = static_cast<long>(u % static_cast<std::size_t>(chunks_per_cell));
        const Scenario& sc = cells[cell];
        const std::uint64_t key = scenario_stream_key(sc);
        const long first = c * chunk;
        const long last = std::min(config.reps, first + chunk);
        auto& out = pending[cell][static_cast<std::size_t>(c)];
        out.reserve(static_cast<std::size_t>(last - first));
        for (long rep = first; rep < last; ++rep) {
          RngStream rng(config.seed, key, static_cast<std::uint64_t>(rep));
          out.push_back(run_replication(sc, rng, config.run));
        }
        if (remaining[cell].fetch_sub(1) == 1) {
          std::vector<ReplicationRecord> all;
          all.reserve(static_cast<std::size_t>(config.reps));
          for (auto& part : pending[cell]) {
            std::move(part.begin(), part.end(), std::back_inserter(all));
            part.clear();
            part.shrink_to_fit();
          }
          results[cell] = aggregate(sc, all, config.run);
          const std::size_t d = done.fetch_add(1) + 1;
          if (on_cell) {
            std::lock_guard lock(callback_mutex);
            on_cell(results[cell], d, cells.size());
          }
        }
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      abort.store(true);
    }
  };

  int threads = config.run.threads;
  if (threads < 1) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads),
                                                   std::max<std::size_t>(units, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

}  // namespace metaratio
