#pragma once

#include <string>
#include <vector>

#include "metaratio/analysis.hpp"
#include "metaratio/model.hpp"

namespace metaratio {

/// One line of the results table.
struct ResultRow {
  double lambda = 0.0;
  double tau2 = 0.0;
  int k = 0;
  int n = 0;
  Pipeline pipeline = Pipeline::Usual;
  std::string method;
  Metric metric = Metric::BiasTau2;
  double value = 0.0;
  double mc_se = 0.0;
  long reps = 0;
  long failures = 0;

  bool operator==(const ResultRow&) const = default;
};

inline constexpr const char* kResultsHeader =
    "lambda,tau2,k,n,pipeline,method,metric,value,mc_se,reps,failures";

/// Flattens results into rows sorted by (lambda, tau2, k, n, pipeline,
/// method, metric); strings compare lexicographically.
std::vector<ResultRow> to_rows(const std::vector<ScenarioResult>& results);
void sort_rows(std::vector<ResultRow>& rows);

/// CSV text with header; reals carry 17 significant digits, "inf"/"nan" for
/// non-finite values.
std::string format_results_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results_csv(const std::string& text);

void write_results_csv(const std::vector<ScenarioResult>& results, const std::string& path);
std::vector<ResultRow> read_results_csv(const std::string& path);

/// Method colors, fixed so figures are comparable across runs.
std::string method_color(const std::string& method);

/// Small-multiple SVG: one panel per (K, n) with rows = K and columns = n,
/// one line per method over tau2, and a reference line at 0 (bias) or 0.95
/// (coverage). Throws NonRectangularGrid when some (K, n) pair is missing.
std::string render_panel_grid_svg(const std::vector<ResultRow>& rows, Metric metric,
                                  double lambda, Pipeline pipeline);

void render_panel_grid(const std::vector<ResultRow>& rows, Metric metric, double lambda,
                       Pipeline pipeline, const std::string& path);
void render_panel_grid(const std::vector<ScenarioResult>& results, Metric metric, double lambda,
                       Pipeline pipeline, const std::string& path);

inline constexpr const char* kStudiesHeader = "study_id,n_t,mean_t,sd_t,n_c,mean_c,sd_c";

/// Parses a study table with kStudiesHeader. Throws ParseError naming the
/// line, or the validation error of the first invalid study.
std::vector<StudySummary> parse_studies_csv(const std::string& text);

inline constexpr const char* kAnalysisHeader = "section,name,estimate,variance,lo,hi,status";

/// Human-readable report of an analysis.
std::string format_analysis_text(const MetaAnalysis& analysis,
                                 const std::vector<StudySummary>& studies);

/// Machine-readable version: one line per effect row, estimator and
/// interval. Empty fields where a column does not apply.
std::string format_analysis_csv(const MetaAnalysis& analysis,
                                const std::vector<StudySummary>& studies);

/// Writes `text` to `path` (binary mode). Throws IoError.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace metaratio
