#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "metaratio/analysis.hpp"
#include "metaratio/distributions.hpp"
#include "metaratio/model.hpp"

namespace metaratio {

struct RunOptions {
  /// Pipelines evaluated on each generated meta-analysis. Both pipelines see
  /// the same generated data.
  std::vector<Pipeline> pipelines{Pipeline::Usual, Pipeline::Corrected};
  Eq3Sign eq3_sign = Eq3Sign::AsPrinted;
  double level = kDefaultLevel;
  /// Worker threads; values < 1 mean one thread per hardware core.
  int threads = 1;
  /// Replications per work unit. Results do not depend on it.
  int chunk_size = 1000;
};

/// Outcomes of every estimator for one pipeline of one replication.
struct PipelineRecord {
  Pipeline pipeline = Pipeline::Usual;
  std::array<Outcome<Tau2Estimate>, 4> tau2;
  std::array<Outcome<Tau2Interval>, 4> tau2_intervals;
  std::array<Outcome<double>, 5> lambda_hat;
  std::array<Outcome<LambdaInterval>, 7> lambda_intervals;
  int floored_variances = 0;
};

struct ReplicationRecord {
  std::vector<PipelineRecord> pipelines;
};

/// Stream key derived from the scenario parameters, so a cell draws the same
/// numbers whatever grid it is part of.
std::uint64_t scenario_stream_key(const Scenario& scenario);

/// K studies of n_total/2 lognormal observations per arm. Study effects are
/// drawn from N(lambda, tau2); control means are mu_control and treatment
/// means mu_control * exp(lambda_i). SDs use the n - 1 divisor.
std::vector<StudySummary> generate_meta_sample(const Scenario& scenario, RngStream& rng);

ReplicationRecord run_replication(const Scenario& scenario, RngStream& rng,
                                  const RunOptions& options = {});

/// Aggregates records (in replication order) into bias and coverage
/// statistics with Monte Carlo standard errors.
ScenarioResult aggregate(const Scenario& scenario, const std::vector<ReplicationRecord>& records,
                         const RunOptions& options);

ScenarioResult run_scenario(const Scenario& scenario, long reps, std::uint64_t seed,
                            const RunOptions& options = {});

/// sqrt(p (1 - p) / reps).
double coverage_mc_se(double p, long reps);

struct GridConfig {
  std::vector<double> lambdas;
  std::vector<double> tau2s;
  std::vector<int> ks;
  std::vector<int> ns;
  double mu_control = 1.0;
  double sigma2_t = 1.0;
  double sigma2_c = 1.0;
  long reps = 1000;
  std::uint64_t seed = 20180830;
  RunOptions run;
  std::string output;

  /// Cells in lambda-major, then tau2, k, n order.
  std::vector<Scenario> scenarios() const;
};

/// The full design: lambda in {0, 0.2, 0.5, 1, 2}, tau2 = 0(0.1)1,
/// K in {5, 10, 30, 50, 100, 125}, n in {4, 10, 20, 40, 100, 250, 640, 1000}.
GridConfig full_grid();

/// Small default grid: lambda in {0, 1}, tau2 in {0, 0.5, 1}, K in {5, 30},
/// n in {4, 40, 1000}.
GridConfig desk_grid();

/// Parses the key = value config format (see README). Throws ConfigError.
GridConfig parse_grid_config(const std::string& text);
GridConfig load_grid_config(const std::string& path);

using CellCallback = std::function<void(const ScenarioResult&, std::size_t done, std::size_t total)>;

/// Runs every cell. Work units are (cell, chunk) pairs spread over
/// `config.run.threads` workers; output is identical for any thread count.
std::vector<ScenarioResult> run_grid(const GridConfig& config, const CellCallback& on_cell = {});

}  // namespace metaratio
