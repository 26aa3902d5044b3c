#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "metaratio/serialization.hpp"
#include "metaratio/simgrid.hpp"

namespace metaratio {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void config_error(int line, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, "line " + std::to_string(line) + ": " + msg);
}

double to_real(const std::string& s, int line) {
  try {
    const double v = parse_real(s);
    if (!std::isfinite(v)) config_error(line, "value must be finite: '" + s + "'");
    return v;
  } catch (const Error&) {
    config_error(line, "not a number: '" + s + "'");
  }
}

long to_integer(const std::string& s, int line) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    config_error(line, "not an integer: '" + s + "'");
  }
  if (used != s.size()) config_error(line, "not an integer: '" + s + "'");
  return v;
}

// Decimal grid values such as 0.1 * 3 are snapped to 12 decimals so a range
// reproduces the literal list it abbreviates.
double snap(double x) { return std::round(x * 1e12) / 1e12; }

// "a, b, c" or "start:step:stop" (inclusive).
std::vector<double> real_list(const std::string& value, int line) {
  std::vector<double> out;
  if (value.empty()) return out;
  if (value.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(value);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(trim(p));
    if (parts.size() != 3) config_error(line, "range must be start:step:stop");
    const double a = to_real(parts[0], line);
    const double step = to_real(parts[1], line);
    const double b = to_real(parts[2], line);
    if (!(step > 0.0) || b < a) config_error(line, "range needs step > 0 and stop >= start");
    const long count = std::lround(std::floor((b - a) / step + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) out.push_back(snap(a + i * step));
    return out;
  }
  std::stringstream ss(value);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (item.empty()) config_error(line, "empty list item");
    out.push_back(to_real(item, line));
  }
  return out;
}

std::vector<int> int_list(const std::string& value, int line) {
  std::vector<int> out;
  for (double v : real_list(value, line)) {
    if (v != std::floor(v)) config_error(line, "expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace

GridConfig parse_grid_config(const std::string& text) {
  GridConfig cfg = desk_grid();
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "lambda") {
      cfg.lambdas = real_list(value, line_no);
    } else if (key == "tau2") {
      cfg.tau2s = real_list(value, line_no);
      for (double t : cfg.tau2s) {
        if (t < 0.0) config_error(line_no, "tau2 values must be >= 0");
      }
    } else if (key == "k") {
      cfg.ks = int_list(value, line_no);
    } else if (key == "n") {
      cfg.ns = int_list(value, line_no);
    } else if (key == "mu_control") {
      cfg.mu_control = to_real(value, line_no);
    } else if (key == "sigma2_t") {
      cfg.sigma2_t = to_real(value, line_no);
    } else if (key == "sigma2_c") {
      cfg.sigma2_c = to_real(value, line_no);
    } else if (key == "reps") {
      cfg.reps = to_integer(value, line_no);
      if (cfg.reps < 1) config_error(line_no, "reps must be >= 1");
    } else if (key == "seed") {
      try {
        std::size_t used = 0;
        cfg.seed = std::stoull(value, &used, 0);
        if (used != value.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        config_error(line_no, "seed must be an unsigned 64-bit integer");
      }
    } else if (key == "pipelines") {
      if (value == "both") {
        cfg.run.pipelines = {Pipeline::Usual, Pipeline::Corrected};
      } else if (value == "usual") {
        cfg.run.pipelines = {Pipeline::Usual};
      } else if (value == "corrected") {
        cfg.run.pipelines = {Pipeline::Corrected};
      } else {
        config_error(line_no, "pipelines must be usual, corrected or both");
      }
    } else if (key == "eq3_sign") {
      try {
        cfg.run.eq3_sign = parse_eq3_sign(value);
      } catch (const Error&) {
        config_error(line_no, "eq3_sign must be as_printed or plus");
      }
    } else if (key == "level") {
      cfg.run.level = to_real(value, line_no);
      if (!(cfg.run.level > 0.0 && cfg.run.level < 1.0)) config_error(line_no, "level in (0,1)");
    } else if (key == "chunk_size") {
      cfg.run.chunk_size = static_cast<int>(to_integer(value, line_no));
      if (cfg.run.chunk_size < 1) config_error(line_no, "chunk_size must be >= 1");
    } else if (key == "threads") {
      cfg.run.threads = static_cast<int>(to_integer(value, line_no));
    } else if (key == "output") {
      cfg.output = value;
    } else {
      config_error(line_no, "unknown key '" + key + "'");
    }
  }
  return cfg;
}

GridConfig load_grid_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_grid_config(buf.str());
}

}  // namespace metaratio
