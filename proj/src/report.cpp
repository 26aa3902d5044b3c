#include "metaratio/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "metaratio/serialization.hpp"

namespace metaratio {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string fmt(double x, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string metric_title(Metric m) {
  switch (m) {
    case Metric::BiasTau2: return "Bias of estimators of between-studies variance";
    case Metric::CoverageTau2: return "Coverage of 95% intervals for between-studies variance";
    case Metric::BiasLambda: return "Bias of estimators of overall LRR";
    case Metric::CoverageLambda: return "Coverage of 95% intervals for overall LRR";
  }
  return "";
}

// Canonical method order for a metric, used for legend order.
std::vector<std::string> canonical_methods(Metric m) {
  std::vector<std::string> out;
  switch (m) {
    case Metric::BiasTau2:
      for (auto x : kTau2Methods) out.emplace_back(to_string(x));
      break;
    case Metric::CoverageTau2:
      for (auto x : kTau2IntervalMethods) out.emplace_back(to_string(x));
      break;
    case Metric::BiasLambda:
      for (auto x : kPooledMethods) out.emplace_back(to_string(x));
      break;
    case Metric::CoverageLambda:
      for (auto x : kCiMethods) out.emplace_back(to_string(x));
      break;
  }
  return out;
}

// Round tick step (1, 2 or 5 times a power of ten) giving about `target` ticks.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  const double f = r < 1.5 ? 1.0 : (r < 3.5 ? 2.0 : (r < 7.5 ? 5.0 : 10.0));
  return f * mag;
}

}  // namespace

std::vector<ResultRow> to_rows(const std::vector<ScenarioResult>& results) {
  std::vector<ResultRow> rows;
  for (const auto& r : results) {
    for (const auto& s : r.stats) {
      rows.push_back({r.scenario.lambda, r.scenario.tau2, r.scenario.k, r.scenario.n_total,
                      s.pipeline, s.method, s.metric, s.value, s.mc_se, r.reps, s.failures});
    }
  }
  sort_rows(rows);
  return rows;
}

void sort_rows(std::vector<ResultRow>& rows) {
  auto key = [](const ResultRow& r) {
    return std::make_tuple(r.lambda, r.tau2, r.k, r.n, to_string(r.pipeline),
                           std::string_view(r.method), to_string(r.metric));
  };
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const ResultRow& a, const ResultRow& b) { return key(a) < key(b); });
}

std::string format_results_csv(const std::vector<ResultRow>& rows) {
  std::string out = kResultsHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += format_real(r.lambda) + ',' + format_real(r.tau2) + ',' + std::to_string(r.k) + ',' +
           std::to_string(r.n) + ',' + std::string(to_string(r.pipeline)) + ',' + r.method + ',' +
           std::string(to_string(r.metric)) + ',' + format_real(r.value) + ',' +
           format_real(r.mc_se) + ',' + std::to_string(r.reps) + ',' +
           std::to_string(r.failures) + '\n';
  }
  return out;
}

std::vector<ResultRow> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, "results file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) {
    throw Error(ErrorCode::SchemaError, "unexpected results header '" + line + "'");
  }
  std::vector<ResultRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 11) {
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(line_no) + ": expected 11 fields");
    }
    try {
      ResultRow r;
      r.lambda = parse_real(f[0]);
      r.tau2 = parse_real(f[1]);
      r.k = std::stoi(f[2]);
      r.n = std::stoi(f[3]);
      r.pipeline = parse_pipeline(f[4]);
      r.method = f[5];
      r.metric = parse_metric(f[6]);
      r.value = parse_real(f[7]);
      r.mc_se = parse_real(f[8]);
      r.reps = std::stol(f[9]);
      r.failures = std::stol(f[10]);
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_results_csv(const std::vector<ScenarioResult>& results, const std::string& path) {
  write_text_file(path, format_results_csv(to_rows(results)));
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  return parse_results_csv(read_text_file(path));
}

std::string method_color(const std::string& method) {
  static const std::map<std::string, std::string> palette{
      {"DL", "#1b9e77"},      {"REML", "#d95f02"},    {"MP", "#7570b3"},
      {"J", "#e7298a"},       {"QP", "#66a61e"},      {"BJ", "#e6ab02"},
      {"PL", "#a6761d"},      {"IV-DL", "#1b9e77"},   {"IV-REML", "#d95f02"},
      {"IV-MP", "#7570b3"},   {"IV-J", "#e7298a"},    {"SSW", "#000000"},
      {"HKSJ", "#66a61e"},    {"HKSJ-MP", "#e6ab02"}, {"SSW-MP", "#000000"},
  };
  const auto it = palette.find(method);
  return it == palette.end() ? "#666666" : it->second;
}

std::string render_panel_grid_svg(const std::vector<ResultRow>& rows, Metric metric,
                                  double lambda, Pipeline pipeline) {
  // (k, n) -> method -> (tau2, value)
  std::map<std::pair<int, int>, std::map<std::string, std::vector<std::pair<double, double>>>>
      cells;
  std::set<int> ks, ns;
  std::set<std::string> methods_seen;
  double x_min = kInfinity, x_max = -kInfinity;
  double y_min = metric == Metric::CoverageLambda || metric == Metric::CoverageTau2 ? 0.95 : 0.0;
  double y_max = y_min;
  for (const auto& r : rows) {
    if (r.metric != metric || r.lambda != lambda || r.pipeline != pipeline) continue;
    ks.insert(r.k);
    ns.insert(r.n);
    methods_seen.insert(r.method);
    cells[{r.k, r.n}][r.method].emplace_back(r.tau2, r.value);
    x_min = std::min(x_min, r.tau2);
    x_max = std::max(x_max, r.tau2);
    if (std::isfinite(r.value)) {
      y_min = std::min(y_min, r.value);
      y_max = std::max(y_max, r.value);
    }
  }
  if (cells.empty()) {
    throw Error(ErrorCode::NonRectangularGrid,
                "no results for " + std::string(to_string(metric)) + " at lambda " +
                    format_real(lambda) + " (" + std::string(to_string(pipeline)) + ")");
  }
  for (int k : ks) {
    for (int n : ns) {
      if (!cells.contains({k, n})) {
        throw Error(ErrorCode::NonRectangularGrid,
                    "missing panel K = " + std::to_string(k) + ", n = " + std::to_string(n));
      }
    }
  }
  const bool coverage = metric == Metric::CoverageLambda || metric == Metric::CoverageTau2;
  const double reference = coverage ? 0.95 : 0.0;
  if (coverage) y_max = std::max(y_max, 1.0);
  if (x_max <= x_min) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  const double y_pad = 0.05 * std::max(y_max - y_min, 1e-3);
  y_min -= y_pad;
  y_max += y_pad;

  std::vector<std::string> methods;
  for (const auto& m : canonical_methods(metric)) {
    if (methods_seen.contains(m)) methods.push_back(m);
  }
  for (const auto& m : methods_seen) {
    if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
  }

  const double pw = 220, ph = 170;      // panel plot area
  const double ml = 56, mt = 56;        // outer margins
  const double gap_x = 28, gap_y = 44;  // between panels
  const double legend_h = 40;
  const auto ncol = static_cast<double>(ns.size());
  const auto nrow = static_cast<double>(ks.size());
  const double width = ml + ncol * pw + (ncol - 1) * gap_x + 24;
  const double height = mt + nrow * ph + (nrow - 1) * gap_y + 48 + legend_h;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(width)
      << "\" height=\"" << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << ' '
      << fmt(height) << "\" font-family=\"sans-serif\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
      << "\" fill=\"#ffffff\"/>\n";
  const std::string title = metric_title(metric) + ", lambda = " + format_real(lambda) + " (" +
                            std::string(to_string(pipeline)) + " LRR)";
  svg << "<text x=\"" << fmt(width / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";

  const double x_step = nice_step(x_max - x_min, 5);
  const double y_step = nice_step(y_max - y_min, 5);
  std::size_t row = 0;
  for (int k : ks) {
    std::size_t col = 0;
    for (int n : ns) {
      const double px = ml + col * (pw + gap_x);
      const double py = mt + row * (ph + gap_y);
      auto sx = [&](double x) { return px + (x - x_min) / (x_max - x_min) * pw; };
      auto sy = [&](double y) { return py + ph - (y - y_min) / (y_max - y_min) * ph; };

      svg << "<g>\n";
      svg << "<text x=\"" << fmt(px + pw / 2) << "\" y=\"" << fmt(py - 8)
          << "\" text-anchor=\"middle\" font-size=\"12\">K = " << k << ", n = " << n
          << "</text>\n";
      svg << "<rect x=\"" << fmt(px) << "\" y=\"" << fmt(py) << "\" width=\"" << fmt(pw)
          << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"#333333\"/>\n";
      for (double t = std::ceil(y_min / y_step) * y_step; t <= y_max + 1e-12; t += y_step) {
        svg << "<line x1=\"" << fmt(px - 4) << "\" y1=\"" << fmt(sy(t)) << "\" x2=\"" << fmt(px)
            << "\" y2=\"" << fmt(sy(t)) << "\" stroke=\"#333333\"/>";
        if (col == 0) {
          svg << "<text x=\"" << fmt(px - 6) << "\" y=\"" << fmt(sy(t) + 4)
              << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(std::fabs(t) < 1e-12 ? 0.0 : t, 2)
              << "</text>";
        }
        svg << '\n';
      }
      for (double t = std::ceil(x_min / x_step) * x_step; t <= x_max + 1e-12; t += x_step) {
        svg << "<line x1=\"" << fmt(sx(t)) << "\" y1=\"" << fmt(py + ph) << "\" x2=\""
            << fmt(sx(t)) << "\" y2=\"" << fmt(py + ph + 4) << "\" stroke=\"#333333\"/>"
            << "<text x=\"" << fmt(sx(t)) << "\" y=\"" << fmt(py + ph + 16)
            << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt(t, 1) << "</text>\n";
      }
      svg << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(sy(reference)) << "\" x2=\""
          << fmt(px + pw) << "\" y2=\"" << fmt(sy(reference))
          << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\" class=\"reference\"/>\n";

      const auto& by_method = cells.at({k, n});
      for (const auto& m : methods) {
        const auto it = by_method.find(m);
        if (it == by_method.end()) continue;
        auto pts = it->second;
        std::sort(pts.begin(), pts.end());
        std::string points;
        for (const auto& [x, y] : pts) {
          if (!std::isfinite(y)) continue;
          if (!points.empty()) points += ' ';
          points += fmt(sx(x)) + ',' + fmt(sy(y));
        }
        svg << "<polyline fill=\"none\" stroke=\"" << method_color(m)
            << "\" stroke-width=\"1.5\" points=\"" << points << "\"><title>" << xml_escape(m)
            << "</title></polyline>\n";
      }
      if (row + 1 == ks.size()) {
        svg << "<text x=\"" << fmt(px + pw / 2) << "\" y=\"" << fmt(py + ph + 32)
            << "\" text-anchor=\"middle\" font-size=\"11\">tau^2</text>\n";
      }
      svg << "</g>\n";
      ++col;
    }
    ++row;
  }
  svg << "<text x=\"14\" y=\"" << fmt(mt + (nrow * ph + (nrow - 1) * gap_y) / 2)
      << "\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << fmt(mt + (nrow * ph + (nrow - 1) * gap_y) / 2) << ")\">"
      << xml_escape(std::string(to_string(metric))) << "</text>\n";

  // Legend
  const double ly = height - legend_h / 2;
  double lx = ml;
  svg << "<g class=\"legend\">\n";
  for (const auto& m : methods) {
    svg << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(lx + 24)
        << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << method_color(m)
        << "\" stroke-width=\"2\"/><text x=\"" << fmt(lx + 30) << "\" y=\"" << fmt(ly + 4)
        << "\" font-size=\"11\">" << xml_escape(m) << "</text>\n";
    lx += 40 + 8.0 * static_cast<double>(m.size());
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

namespace {

std::string trim_field(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

int parse_count(const std::string& s, int line, const char* what) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what +
                                           " is not an integer: '" + s + "'");
  }
  return v;
}

double parse_field(const std::string& s, int line, const char* what) {
  try {
    return parse_real(s);
  } catch (const Error&) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what +
                                           " is not a number: '" + s + "'");
  }
}

std::string status_of(const std::optional<ErrorCode>& failure) {
  return failure ? std::string(to_string(*failure)) : std::string("ok");
}

}  // namespace

std::vector<StudySummary> parse_studies_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_header = false;
  std::vector<StudySummary> studies;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim_field(line).empty()) continue;
    auto f = split_csv_line(line);
    for (auto& x : f) x = trim_field(x);
    if (!have_header) {
      std::string joined;
      for (std::size_t i = 0; i < f.size(); ++i) joined += (i ? "," : "") + f[i];
      if (joined != kStudiesHeader) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) +
                                               ": expected header '" + kStudiesHeader + "'");
      }
      have_header = true;
      continue;
    }
    if (f.size() != 7) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 7 fields, got " +
                                             std::to_string(f.size()));
    }
    StudySummary s;
    s.id = f[0];
    s.treatment = {parse_count(f[1], line_no, "n_t"), parse_field(f[2], line_no, "mean_t"),
                   parse_field(f[3], line_no, "sd_t")};
    s.control = {parse_count(f[4], line_no, "n_c"), parse_field(f[5], line_no, "mean_c"),
                 parse_field(f[6], line_no, "sd_c")};
    validate_study(s);
    studies.push_back(std::move(s));
  }
  if (!have_header) throw Error(ErrorCode::ParseError, "input is empty");
  return studies;
}

std::string format_analysis_text(const MetaAnalysis& a, const std::vector<StudySummary>& studies) {
  std::ostringstream out;
  auto num = [](double x) {
    if (std::isinf(x)) return std::string(x > 0 ? "inf" : "-inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return std::string(buf);
  };
  out << "Effects (" << to_string(a.pipeline) << " LRR)\n";
  for (std::size_t i = 0; i < a.effects.size(); ++i) {
    const auto& e = a.effects[i];
    out << "  " << (i < studies.size() ? studies[i].id : std::to_string(i + 1))
        << "  estimate " << num(e.estimate) << "  variance " << num(e.variance)
        << (e.variance_floored ? "  (variance floored)" : "") << '\n';
  }
  out << "Between-study variance\n";
  for (std::size_t i = 0; i < a.tau2.size(); ++i) {
    const auto& t = a.tau2[i];
    out << "  " << to_string(kTau2Methods[i]) << "  ";
    if (t.ok()) {
      out << num(t.value->value) << (t.value->truncated ? "  (truncated at 0)" : "") << '\n';
    } else {
      out << "failed: " << t.message << '\n';
    }
  }
  out << "Intervals for between-study variance\n";
  for (std::size_t i = 0; i < a.tau2_intervals.size(); ++i) {
    const auto& t = a.tau2_intervals[i];
    out << "  " << to_string(kTau2IntervalMethods[i]) << "  ";
    if (t.ok()) {
      out << '[' << num(t.value->lo) << ", " << num(t.value->hi) << "]\n";
    } else {
      out << "failed: " << t.message << '\n';
    }
  }
  out << "Pooled LRR\n";
  for (std::size_t i = 0; i < a.pooled.size(); ++i) {
    const auto& p = a.pooled[i];
    out << "  " << to_string(kPooledMethods[i]) << "  ";
    if (p.ok()) {
      out << num(p.value->estimate) << "  variance " << num(p.value->variance) << '\n';
    } else {
      out << "failed: " << p.message << '\n';
    }
  }
  out << "Intervals for pooled LRR\n";
  for (std::size_t i = 0; i < a.lambda_intervals.size(); ++i) {
    const auto& c = a.lambda_intervals[i];
    out << "  " << to_string(kCiMethods[i]) << "  ";
    if (c.ok()) {
      out << '[' << num(c.value->lo) << ", " << num(c.value->hi) << "]\n";
    } else {
      out << "failed: " << c.message << '\n';
    }
  }
  return out.str();
}

std::string format_analysis_csv(const MetaAnalysis& a, const std::vector<StudySummary>& studies) {
  std::string out = kAnalysisHeader;
  out += '\n';
  auto line = [&](std::string_view section, std::string_view name, const std::string& est,
                  const std::string& var, const std::string& lo, const std::string& hi,
                  const std::string& status) {
    out.append(section).append(",").append(name);
    out += ',' + est + ',' + var + ',' + lo + ',' + hi + ',' + status + '\n';
  };
  for (std::size_t i = 0; i < a.effects.size(); ++i) {
    const auto& e = a.effects[i];
    line("effect", i < studies.size() ? studies[i].id : std::to_string(i + 1),
         format_real(e.estimate), format_real(e.variance), "", "",
         e.variance_floored ? "variance_floored" : "ok");
  }
  for (std::size_t i = 0; i < a.tau2.size(); ++i) {
    const auto& t = a.tau2[i];
    line("tau2", to_string(kTau2Methods[i]), t.ok() ? format_real(t.value->value) : "", "", "", "",
         status_of(t.failure));
  }
  for (std::size_t i = 0; i < a.tau2_intervals.size(); ++i) {
    const auto& t = a.tau2_intervals[i];
    line("tau2_interval", to_string(kTau2IntervalMethods[i]), "", "",
         t.ok() ? format_real(t.value->lo) : "", t.ok() ? format_real(t.value->hi) : "",
         status_of(t.failure));
  }
  for (std::size_t i = 0; i < a.pooled.size(); ++i) {
    const auto& p = a.pooled[i];
    line("pooled", to_string(kPooledMethods[i]), p.ok() ? format_real(p.value->estimate) : "",
         p.ok() ? format_real(p.value->variance) : "", "", "", status_of(p.failure));
  }
  for (std::size_t i = 0; i < a.lambda_intervals.size(); ++i) {
    const auto& c = a.lambda_intervals[i];
    line("lambda_interval", to_string(kCiMethods[i]), "", "",
         c.ok() ? format_real(c.value->lo) : "", c.ok() ? format_real(c.value->hi) : "",
         status_of(c.failure));
  }
  return out;
}

void render_panel_grid(const std::vector<ResultRow>& rows, Metric metric, double lambda,
                       Pipeline pipeline, const std::string& path) {
  write_text_file(path, render_panel_grid_svg(rows, metric, lambda, pipeline));
}

void render_panel_grid(const std::vector<ScenarioResult>& results, Metric metric, double lambda,
                       Pipeline pipeline, const std::string& path) {
  render_panel_grid(to_rows(results), metric, lambda, pipeline, path);
}

}  // namespace metaratio
