#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "metaratio/analysis.hpp"
#include "metaratio/distributions.hpp"
#include "metaratio/effects.hpp"
#include "metaratio/heterogeneity.hpp"
#include "metaratio/pooling.hpp"
#include "metaratio/quadform.hpp"
#include "metaratio/report.hpp"
#include "metaratio/simgrid.hpp"
#include "metaratio/tau_intervals.hpp"

namespace py = pybind11;
namespace mr = metaratio;

using Effects = std::vector<mr::EffectRow>;
using Studies = std::vector<mr::StudySummary>;

namespace {

template <typename T>
py::object outcome_value(const mr::Outcome<T>& o) {
  if (o.ok()) return py::cast(*o.value);
  return py::none();
}

py::dict analysis_to_dict(const mr::MetaAnalysis& a) {
  py::dict out;
  out["pipeline"] = std::string(mr::to_string(a.pipeline));
  out["effects"] = a.effects;
  py::dict tau2, tau2_iv, pooled, ci, errors;
  for (std::size_t i = 0; i < a.tau2.size(); ++i) {
    const auto name = std::string(mr::to_string(mr::kTau2Methods[i]));
    tau2[name.c_str()] = outcome_value(a.tau2[i]);
    if (!a.tau2[i].ok()) errors[("tau2:" + name).c_str()] = a.tau2[i].message;
  }
  for (std::size_t i = 0; i < a.tau2_intervals.size(); ++i) {
    const auto name = std::string(mr::to_string(mr::kTau2IntervalMethods[i]));
    tau2_iv[name.c_str()] = outcome_value(a.tau2_intervals[i]);
    if (!a.tau2_intervals[i].ok()) errors[("tau2_interval:" + name).c_str()] = a.tau2_intervals[i].message;
  }
  for (std::size_t i = 0; i < a.pooled.size(); ++i) {
    const auto name = std::string(mr::to_string(mr::kPooledMethods[i]));
    pooled[name.c_str()] = outcome_value(a.pooled[i]);
    if (!a.pooled[i].ok()) errors[("pooled:" + name).c_str()] = a.pooled[i].message;
  }
  for (std::size_t i = 0; i < a.lambda_intervals.size(); ++i) {
    const auto name = std::string(mr::to_string(mr::kCiMethods[i]));
    ci[name.c_str()] = outcome_value(a.lambda_intervals[i]);
    if (!a.lambda_intervals[i].ok()) errors[("lambda_interval:" + name).c_str()] = a.lambda_intervals[i].message;
  }
  out["tau2"] = tau2;
  out["tau2_intervals"] = tau2_iv;
  out["pooled"] = pooled;
  out["lambda_intervals"] = ci;
  out["errors"] = errors;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Log response ratio meta-analysis engine";

  py::register_exception<mr::Error>(m, "Error", PyExc_ValueError);

  py::class_<mr::ArmSummary>(m, "ArmSummary")
      .def(py::init([](int n, double mean, double sd) { return mr::ArmSummary{n, mean, sd}; }),
           py::arg("n"), py::arg("mean"), py::arg("sd"))
      .def_readwrite("n", &mr::ArmSummary::n)
      .def_readwrite("mean", &mr::ArmSummary::mean)
      .def_readwrite("sd", &mr::ArmSummary::sd);

  py::class_<mr::StudySummary>(m, "StudySummary")
      .def(py::init([](std::string id, mr::ArmSummary t, mr::ArmSummary c) {
             return mr::StudySummary{std::move(id), t, c};
           }),
           py::arg("id"), py::arg("treatment"), py::arg("control"))
      .def_readwrite("id", &mr::StudySummary::id)
      .def_readwrite("treatment", &mr::StudySummary::treatment)
      .def_readwrite("control", &mr::StudySummary::control);

  py::class_<mr::EffectRow>(m, "EffectRow")
      .def(py::init([](double estimate, double variance) {
             return mr::EffectRow{estimate, variance, false, false};
           }),
           py::arg("estimate"), py::arg("variance"))
      .def_readonly("estimate", &mr::EffectRow::estimate)
      .def_readonly("variance", &mr::EffectRow::variance)
      .def_readonly("corrected", &mr::EffectRow::corrected)
      .def_readonly("variance_floored", &mr::EffectRow::variance_floored);

  py::class_<mr::Tau2Estimate>(m, "Tau2Estimate")
      .def_readonly("value", &mr::Tau2Estimate::value)
      .def_property_readonly("method",
                             [](const mr::Tau2Estimate& e) { return std::string(mr::to_string(e.method)); })
      .def_readonly("truncated", &mr::Tau2Estimate::truncated)
      .def_readonly("iterations", &mr::Tau2Estimate::iterations)
      .def_readonly("converged", &mr::Tau2Estimate::converged);

  py::class_<mr::Tau2Interval>(m, "Tau2Interval")
      .def_readonly("lo", &mr::Tau2Interval::lo)
      .def_readonly("hi", &mr::Tau2Interval::hi)
      .def_property_readonly("method",
                             [](const mr::Tau2Interval& i) { return std::string(mr::to_string(i.method)); })
      .def_readonly("level", &mr::Tau2Interval::level)
      .def_readonly("lo_truncated", &mr::Tau2Interval::lo_truncated)
      .def_readonly("hi_truncated", &mr::Tau2Interval::hi_truncated)
      .def_readonly("hi_unbounded", &mr::Tau2Interval::hi_unbounded)
      .def("covers", &mr::Tau2Interval::covers);

  py::class_<mr::LambdaInterval>(m, "LambdaInterval")
      .def_readonly("lo", &mr::LambdaInterval::lo)
      .def_readonly("hi", &mr::LambdaInterval::hi)
      .def_property_readonly("method",
                             [](const mr::LambdaInterval& i) { return std::string(mr::to_string(i.method)); })
      .def_readonly("level", &mr::LambdaInterval::level)
      .def("covers", &mr::LambdaInterval::covers);

  py::class_<mr::PooledResult>(m, "PooledResult")
      .def_readonly("estimate", &mr::PooledResult::estimate)
      .def_readonly("variance", &mr::PooledResult::variance)
      .def_readonly("weights", &mr::PooledResult::weights)
      .def_property_readonly("method",
                             [](const mr::PooledResult& p) { return std::string(mr::to_string(p.method)); })
      .def_readonly("tau2_used", &mr::PooledResult::tau2_used);

  py::class_<mr::Scenario>(m, "Scenario")
      .def(py::init([](double lambda, double tau2, int k, int n_total, double mu_control,
                       double sigma2_t, double sigma2_c) {
             mr::Scenario s{lambda, tau2, k, n_total, mu_control, sigma2_t, sigma2_c};
             s.validate();
             return s;
           }),
           py::arg("lambda_"), py::arg("tau2"), py::arg("k"), py::arg("n_total"),
           py::arg("mu_control") = 1.0, py::arg("sigma2_t") = 1.0, py::arg("sigma2_c") = 1.0)
      .def_readonly("lambda_", &mr::Scenario::lambda)
      .def_readonly("tau2", &mr::Scenario::tau2)
      .def_readonly("k", &mr::Scenario::k)
      .def_readonly("n_total", &mr::Scenario::n_total);

  py::class_<mr::MethodStat>(m, "MethodStat")
      .def_property_readonly("pipeline",
                             [](const mr::MethodStat& s) { return std::string(mr::to_string(s.pipeline)); })
      .def_readonly("method", &mr::MethodStat::method)
      .def_property_readonly("metric",
                             [](const mr::MethodStat& s) { return std::string(mr::to_string(s.metric)); })
      .def_readonly("value", &mr::MethodStat::value)
      .def_readonly("mc_se", &mr::MethodStat::mc_se)
      .def_readonly("used", &mr::MethodStat::used)
      .def_readonly("failures", &mr::MethodStat::failures);

  py::class_<mr::ScenarioResult>(m, "ScenarioResult")
      .def_readonly("scenario", &mr::ScenarioResult::scenario)
      .def_readonly("reps", &mr::ScenarioResult::reps)
      .def_readonly("stats", &mr::ScenarioResult::stats)
      .def("stat",
           [](const mr::ScenarioResult& r, const std::string& pipeline, const std::string& method,
              const std::string& metric) {
             return r.at(mr::parse_pipeline(pipeline), method, mr::parse_metric(metric));
           },
           py::arg("pipeline"), py::arg("method"), py::arg("metric"));

  m.def("lrr", &mr::lrr, py::arg("study"));
  m.def(
      "lrr_bias_corrected",
      [](const mr::StudySummary& s, const std::string& sign) {
        return mr::lrr_bias_corrected(s, mr::parse_eq3_sign(sign));
      },
      py::arg("study"), py::arg("eq3_sign") = "as_printed");
  m.def(
      "compute_effects",
      [](const Studies& s, const std::string& pipeline, const std::string& sign) {
        return mr::compute_effects(s, mr::parse_pipeline(pipeline), mr::parse_eq3_sign(sign));
      },
      py::arg("studies"), py::arg("pipeline") = "usual", py::arg("eq3_sign") = "as_printed");

  m.def("cochran_q", [](const Effects& e) { return mr::cochran_q(e); }, py::arg("effects"));
  m.def("generalized_q", [](const Effects& e, double t) { return mr::generalized_q(e, t); },
        py::arg("effects"), py::arg("tau2"));
  m.def(
      "tau2",
      [](const Effects& e, const std::string& method) {
        return mr::estimate_tau2(e, mr::parse_tau2_method(method));
      },
      py::arg("effects"), py::arg("method") = "DL");
  m.def(
      "tau2_interval",
      [](const Effects& e, const std::string& method, double level) {
        return mr::tau2_interval(e, mr::parse_tau2_interval_method(method), level);
      },
      py::arg("effects"), py::arg("method") = "QP", py::arg("level") = mr::kDefaultLevel);

  m.def("pool_iv", [](const Effects& e, const mr::Tau2Estimate& t) { return mr::pool_iv(e, t); },
        py::arg("effects"), py::arg("tau2"));
  m.def(
      "pool_ssw",
      [](const Effects& e, const Studies& s, const mr::Tau2Estimate& t) {
        return mr::pool_ssw(e, s, t);
      },
      py::arg("effects"), py::arg("studies"), py::arg("tau2_mp"));
  m.def("ci_iv_normal", &mr::ci_iv_normal, py::arg("pooled"), py::arg("level") = mr::kDefaultLevel);
  m.def(
      "ci_hksj",
      [](const Effects& e, const mr::Tau2Estimate& t, double level) {
        return mr::ci_hksj(e, t, level);
      },
      py::arg("effects"), py::arg("tau2"), py::arg("level") = mr::kDefaultLevel);
  m.def("ci_ssw_t", &mr::ci_ssw_t, py::arg("pooled_ssw"), py::arg("k"),
        py::arg("level") = mr::kDefaultLevel);

  m.def(
      "q_eigenvalues",
      [](const std::vector<double>& a, const std::vector<double>& v) {
        return mr::q_eigenvalues(a, v).lambdas;
      },
      py::arg("a"), py::arg("marginal_vars"));
  m.def(
      "cdf_weighted_chisq",
      [](const std::vector<double>& lambdas, double x) {
        return mr::cdf_weighted_chisq(mr::WeightedChiSq{lambdas}, x);
      },
      py::arg("lambdas"), py::arg("x"));
  m.def("chi2_cdf", &mr::chi2_cdf, py::arg("df"), py::arg("x"));
  m.def("chi2_quantile", &mr::chi2_quantile, py::arg("df"), py::arg("p"));
  m.def("t_quantile", &mr::t_quantile, py::arg("df"), py::arg("p"));

  m.def(
      "analyze",
      [](const Studies& s, const std::string& pipeline, double level, const std::string& sign) {
        mr::AnalysisOptions opts;
        opts.level = level;
        opts.eq3_sign = mr::parse_eq3_sign(sign);
        return analysis_to_dict(mr::analyze(s, mr::parse_pipeline(pipeline), opts));
      },
      py::arg("studies"), py::arg("pipeline") = "usual", py::arg("level") = mr::kDefaultLevel,
      py::arg("eq3_sign") = "as_printed");

  m.def(
      "run_scenario",
      [](const mr::Scenario& sc, long reps, std::uint64_t seed, int threads) {
        mr::RunOptions opts;
        opts.threads = threads;
        py::gil_scoped_release release;
        return mr::run_scenario(sc, reps, seed, opts);
      },
      py::arg("scenario"), py::arg("reps"), py::arg("seed") = 20180830, py::arg("threads") = 1);
  m.def("coverage_mc_se", &mr::coverage_mc_se, py::arg("p"), py::arg("reps"));
  m.def(
      "results_csv",
      [](const std::vector<mr::ScenarioResult>& r) { return mr::format_results_csv(mr::to_rows(r)); },
      py::arg("results"));
}
