#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "metaratio/report.hpp"
#include "metaratio/serialization.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string output;  // stdout and stderr interleaved
};

Run run(const std::string& args) {
  const std::string cmd = std::string(METARATIO_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, got);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path tmp_dir(const std::string& name) {
  const fs::path p = fs::path(METARATIO_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// (section/name) -> (lo, hi) from the analysis CSV.
std::map<std::string, std::pair<double, double>> intervals(const std::string& csv) {
  std::map<std::string, std::pair<double, double>> out;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    if (f.size() < 6 || (f[0] != "tau2_interval" && f[0] != "lambda_interval")) continue;
    out[f[0] + "/" + f[1]] = {metaratio::parse_real(f[4]), metaratio::parse_real(f[5])};
  }
  return out;
}

const char* kStudies =
    "study_id,n_t,mean_t,sd_t,n_c,mean_c,sd_c\n"
    "S1,10,2.0,0.5,10,1.0,0.5\n"
    "S2,12,1.8,0.6,11,1.1,0.4\n"
    "S3,15,2.4,0.7,14,0.9,0.5\n"
    "S4,9,1.5,0.4,10,1.2,0.6\n";

const char* kSmallGrid =
    "lambda = 0, 1\n"
    "tau2 = 0, 0.5\n"
    "k = 5\n"
    "n = 10, 20\n"
    "reps = 20\n";

}  // namespace

TEST_CASE("analyze prints every estimator for a homogeneous file") {
  const auto dir = tmp_dir("analyze_hom");
  write(dir / "s.csv",
        "study_id,n_t,mean_t,sd_t,n_c,mean_c,sd_c\n"
        "A,10,2.0,0.5,10,1.0,0.5\nB,10,2.0,0.5,10,1.0,0.5\nC,10,2.0,0.5,10,1.0,0.5\n");
  const auto r = run("analyze " + (dir / "s.csv").string());
  CHECK(r.status == 0);
  CHECK(r.output.find("0.693147") != std::string::npos);
  for (const char* m : {"DL", "REML", "MP", "QP", "BJ", "PL", "HKSJ", "SSW"}) {
    CHECK(r.output.find(m) != std::string::npos);
  }
}

TEST_CASE("analyze rejects an invalid study by name") {
  const auto dir = tmp_dir("analyze_bad");
  write(dir / "s.csv",
        "study_id,n_t,mean_t,sd_t,n_c,mean_c,sd_c\n"
        "Good,10,2.0,0.5,10,1.0,0.5\nNegMean,10,-2.0,0.5,10,1.0,0.5\n");
  const auto r = run("analyze " + (dir / "s.csv").string());
  CHECK(r.status != 0);
  CHECK(r.output.find("NegMean") != std::string::npos);
  CHECK(run("analyze " + (dir / "missing.csv").string()).status != 0);
}

TEST_CASE("narrower level gives nested intervals") {
  const auto dir = tmp_dir("analyze_level");
  write(dir / "s.csv", kStudies);
  const auto in = (dir / "s.csv").string();
  REQUIRE(run("analyze " + in + " --out " + (dir / "a95.csv").string()).status == 0);
  REQUIRE(run("analyze " + in + " --level 0.9 --bias-correction --out " + (dir / "c90.csv").string())
              .status == 0);
  REQUIRE(run("analyze " + in + " --bias-correction --out " + (dir / "c95.csv").string()).status == 0);
  const auto wide = intervals(slurp(dir / "c95.csv"));
  const auto narrow = intervals(slurp(dir / "c90.csv"));
  REQUIRE(wide.size() == 11);
  REQUIRE(narrow.size() == 11);
  for (const auto& [name, w] : wide) {
    const auto& n = narrow.at(name);
    CHECK_MESSAGE(n.first >= w.first - 1e-9, name);
    CHECK_MESSAGE(n.second <= w.second + 1e-9, name);
  }
  CHECK(slurp(dir / "a95.csv") != slurp(dir / "c95.csv"));
}

TEST_CASE("simulate fails cleanly on a missing config") {
  const auto r = run("simulate /nonexistent/grid.cfg");
  CHECK(r.status != 0);
  CHECK(r.output.find("grid.cfg") != std::string::npos);
}

TEST_CASE("simulate is deterministic across runs and thread counts") {
  const auto dir = tmp_dir("simulate");
  write(dir / "grid.cfg", kSmallGrid);
  const auto cfg = (dir / "grid.cfg").string();
  REQUIRE(run("simulate " + cfg + " --threads 1 --out " + (dir / "a.csv").string()).status == 0);
  REQUIRE(run("simulate " + cfg + " --threads 3 --out " + (dir / "b.csv").string()).status == 0);
  const auto a = slurp(dir / "a.csv");
  CHECK(a == slurp(dir / "b.csv"));
  const auto rows = metaratio::parse_results_csv(a);
  CHECK(rows.size() == 8u * 2 * 20);
  REQUIRE(run("simulate " + cfg + " --seed 5 --out " + (dir / "c.csv").string()).status == 0);
  CHECK(slurp(dir / "c.csv") != a);
}

TEST_CASE("plot writes one file per lambda and rejects unknown metrics") {
  const auto dir = tmp_dir("plot");
  write(dir / "grid.cfg", kSmallGrid);
  REQUIRE(run("simulate " + (dir / "grid.cfg").string() + " --reps 5 --out " +
              (dir / "r.csv").string())
              .status == 0);
  const auto results = (dir / "r.csv").string();
  const auto out = dir / "figs";
  const auto r = run("plot " + results + " --metric coverage_lambda --out-dir " + out.string());
  CHECK(r.status == 0);
  int svgs = 0;
  for (const auto& e : fs::directory_iterator(out)) svgs += e.path().extension() == ".svg";
  // Two lambdas, two pipelines.
  CHECK(svgs == 4);
  const auto before = slurp(out / "coverage_lambda_lambda0_usual.svg");
  CHECK(before.find("<svg") != std::string::npos);
  REQUIRE(run("plot " + results + " --metric coverage_lambda --out-dir " + out.string()).status == 0);
  CHECK(slurp(out / "coverage_lambda_lambda0_usual.svg") == before);

  const auto bad = run("plot " + results + " --metric coverage --out-dir " + out.string());
  CHECK(bad.status != 0);
  CHECK(bad.output.find("bias_tau2") != std::string::npos);
  CHECK(bad.output.find("coverage_lambda") != std::string::npos);
}
