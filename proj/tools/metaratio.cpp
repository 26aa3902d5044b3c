// metaratio: analyze a study table, run a simulation grid, or plot results.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "metaratio/analysis.hpp"
#include "metaratio/report.hpp"
#include "metaratio/serialization.hpp"
#include "metaratio/simgrid.hpp"

namespace mr = metaratio;

namespace {

int cmd_analyze(const std::string& input, bool corrected, double level,
                const std::string& eq3_sign, const std::string& out_path) {
  const auto studies = mr::parse_studies_csv(mr::read_text_file(input));
  mr::AnalysisOptions opts;
  opts.level = level;
  opts.eq3_sign = mr::parse_eq3_sign(eq3_sign);
  const auto pipeline = corrected ? mr::Pipeline::Corrected : mr::Pipeline::Usual;
  const auto result = mr::analyze(studies, pipeline, opts);
  std::cout << mr::format_analysis_text(result, studies);
  if (!out_path.empty()) mr::write_text_file(out_path, mr::format_analysis_csv(result, studies));
  return 0;
}

// --threads wins over METARATIO_THREADS, which wins over the core count.
int resolve_threads(std::optional<int> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("METARATIO_THREADS"); env && *env) {
    try {
      return std::stoi(env);
    } catch (const std::exception&) {
      throw mr::Error(mr::ErrorCode::ConfigError,
                      std::string("METARATIO_THREADS is not an integer: '") + env + "'");
    }
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int cmd_simulate(const std::string& config_path, std::optional<int> threads,
                 std::optional<std::uint64_t> seed, std::optional<long> reps,
                 const std::string& out_flag) {
  auto cfg = mr::load_grid_config(config_path);
  cfg.run.threads = resolve_threads(threads);
  if (seed) cfg.seed = *seed;
  if (reps) {
    if (*reps < 1) throw mr::Error(mr::ErrorCode::ConfigError, "--reps must be >= 1");
    cfg.reps = *reps;
  }
  const std::string out_path = out_flag.empty() ? cfg.output : out_flag;
  std::cerr << "simulating " << cfg.scenarios().size() << " cells x " << cfg.reps
            << " replications on " << cfg.run.threads << " thread(s)\n";
  const auto results = mr::run_grid(cfg, [](const mr::ScenarioResult& r, std::size_t done,
                                            std::size_t total) {
    std::cerr << "[" << done << "/" << total << "] lambda=" << mr::format_real(r.scenario.lambda)
              << " tau2=" << mr::format_real(r.scenario.tau2) << " k=" << r.scenario.k
              << " n=" << r.scenario.n_total << '\n';
  });
  const auto csv = mr::format_results_csv(mr::to_rows(results));
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    mr::write_text_file(out_path, csv);
    std::cerr << "wrote " << out_path << '\n';
  }
  return 0;
}

std::string metric_list() {
  std::string s;
  for (auto m : {mr::Metric::BiasTau2, mr::Metric::BiasLambda, mr::Metric::CoverageTau2,
                 mr::Metric::CoverageLambda}) {
    if (!s.empty()) s += ", ";
    s += mr::to_string(m);
  }
  return s;
}

int cmd_plot(const std::string& input, const std::vector<std::string>& metric_names,
             std::optional<double> lambda, const std::string& out_dir) {
  std::vector<mr::Metric> metrics;
  for (const auto& name : metric_names) {
    try {
      metrics.push_back(mr::parse_metric(name));
    } catch (const mr::Error&) {
      std::cerr << "error: unknown metric '" << name << "'; valid metrics: " << metric_list()
                << '\n';
      return 2;
    }
  }
  const auto rows = mr::read_results_csv(input);
  // (metric, lambda, pipeline) combinations present, in file order of sort.
  std::set<std::tuple<int, double, int>> combos;
  for (const auto& r : rows) {
    if (lambda && r.lambda != *lambda) continue;
    if (!metrics.empty() &&
        std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) {
      continue;
    }
    combos.emplace(static_cast<int>(r.metric), r.lambda, static_cast<int>(r.pipeline));
  }
  if (combos.empty()) {
    std::cerr << "error: no results match the requested metric/lambda\n";
    return 1;
  }
  std::filesystem::create_directories(out_dir);
  for (const auto& [m, l, p] : combos) {
    const auto metric = static_cast<mr::Metric>(m);
    const auto pipeline = static_cast<mr::Pipeline>(p);
    const auto path = (std::filesystem::path(out_dir) /
                       (std::string(mr::to_string(metric)) + "_lambda" + mr::format_real(l) +
                        "_" + std::string(mr::to_string(pipeline)) + ".svg"))
                          .string();
    mr::render_panel_grid(rows, metric, l, pipeline, path);
    std::cerr << "wrote " << path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Log response ratio meta-analysis: analysis, simulation and plots"};
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand("analyze", "Analyze a CSV of study summaries");
  std::string analyze_input, analyze_out, eq3_sign = "as_printed";
  bool corrected = false;
  double level = mr::kDefaultLevel;
  analyze->add_option("input", analyze_input, "CSV: " + std::string(mr::kStudiesHeader))
      ->required();
  analyze->add_flag("--bias-correction", corrected, "Use the bias-corrected LRR");
  analyze->add_option("--level", level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  analyze->add_option("--eq3-sign", eq3_sign, "Variance correction sign")
      ->check(CLI::IsMember({"as_printed", "plus"}));
  analyze->add_option("--out", analyze_out, "Also write the results as CSV");

  auto* simulate = app.add_subcommand("simulate", "Run a simulation grid from a config file");
  std::string config_path, sim_out;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::optional<long> reps;
  simulate->add_option("config", config_path, "Grid config (key = value lines)")->required();
  simulate->add_option("--threads", threads,
                       "Worker threads (default: METARATIO_THREADS, else all cores)");
  simulate->add_option("--seed", seed, "Master seed");
  simulate->add_option("--reps", reps, "Replications per cell");
  simulate->add_option("--out", sim_out, "Results CSV (default: config output, else stdout)");

  auto* plot = app.add_subcommand("plot", "Render small-multiple SVGs from a results CSV");
  std::string plot_input, out_dir = ".";
  std::vector<std::string> metric_names;
  std::optional<double> plot_lambda;
  plot->add_option("results", plot_input, "Results CSV")->required();
  plot->add_option("--metric", metric_names, "Metric(s): " + metric_list() + " (default: all)");
  plot->add_option("--lambda", plot_lambda, "Only this lambda");
  plot->add_option("--out-dir", out_dir, "Directory for SVG files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (analyze->parsed()) return cmd_analyze(analyze_input, corrected, level, eq3_sign, analyze_out);
    if (simulate->parsed()) return cmd_simulate(config_path, threads, seed, reps, sim_out);
    if (plot->parsed()) return cmd_plot(plot_input, metric_names, plot_lambda, out_dir);
  } catch (const mr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (simulate->parsed() && e.code() == mr::ErrorCode::IoError && sim_out.empty()) {
      std::cerr << simulate->help();
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
