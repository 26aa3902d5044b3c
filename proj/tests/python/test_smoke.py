import math

import pytest

import metaratio as mr


def study(sid, t, c):
    return mr.StudySummary(sid, mr.ArmSummary(*t), mr.ArmSummary(*c))


STUDIES = [
    study("A", (10, 2.0, 0.5), (10, 1.0, 0.5)),
    study("B", (12, 1.8, 0.6), (11, 1.1, 0.4)),
    study("C", (15, 2.4, 0.7), (14, 0.9, 0.5)),
    study("D", (9, 1.5, 0.4), (10, 1.2, 0.6)),
]


def test_effect_sizes():
    row = mr.lrr(STUDIES[0])
    assert row.estimate == pytest.approx(math.log(2.0), rel=1e-14)
    assert row.variance == pytest.approx(0.03125, rel=1e-14)
    corrected = mr.lrr_bias_corrected(STUDIES[0])
    assert corrected.estimate == pytest.approx(0.683772, abs=1e-6)
    assert len(mr.compute_effects(STUDIES, "corrected")) == 4


def test_invalid_study_raises():
    bad = study("Neg", (10, -2.0, 0.5), (10, 1.0, 0.5))
    with pytest.raises(mr.Error, match="Neg"):
        mr.lrr(bad)
    with pytest.raises(ValueError):
        mr.analyze([bad, STUDIES[0]])


def test_heterogeneity_worked_example():
    rows = [mr.EffectRow(y, 1.0) for y in (0.0, 2.0, 4.0)]
    assert mr.cochran_q(rows) == pytest.approx(8.0)
    for method in ("DL", "MP", "J", "REML"):
        est = mr.tau2(rows, method)
        assert est.method == method
        assert est.value == pytest.approx(3.0, rel=1e-7)
    iv = mr.tau2_interval(rows, "QP")
    assert iv.lo == pytest.approx(8 / mr.chi2_quantile(2, 0.975) - 1, rel=1e-9)
    assert iv.covers(3.0)


def test_pooling():
    rows = [mr.EffectRow(0.0, 2.0), mr.EffectRow(1.0, 4.0)]
    pooled = mr.pool_iv(rows, mr.tau2(rows, "DL"))
    assert pooled.estimate == pytest.approx(1 / 3)
    ci = mr.ci_iv_normal(pooled)
    assert ci.hi - pooled.estimate == pytest.approx(1.959964 * math.sqrt(4 / 3), abs=1e-6)
    assert mr.ci_hksj(rows, mr.tau2(rows, "MP")).method == "HKSJ-MP"


def test_analyze_returns_every_estimator():
    out = mr.analyze(STUDIES, pipeline="corrected", level=0.9)
    assert out["pipeline"] == "corrected"
    assert set(out["tau2"]) == {"DL", "REML", "MP", "J"}
    assert set(out["tau2_intervals"]) == {"QP", "BJ", "J", "PL"}
    assert len(out["pooled"]) == 5
    assert len(out["lambda_intervals"]) == 7
    assert out["errors"] == {}
    assert out["lambda_intervals"]["SSW-MP"].level == 0.9


def test_quadform():
    lambdas = mr.q_eigenvalues([1.0, 2.0, 3.0], [0.5, 0.5, 0.5])
    assert len(lambdas) == 2
    assert mr.cdf_weighted_chisq([1.0, 1.0], 2.0) == pytest.approx(mr.chi2_cdf(2, 2.0), abs=1e-10)


def test_run_scenario_is_deterministic():
    sc = mr.Scenario(0.0, 0.5, 5, 20)
    a = mr.run_scenario(sc, 20, seed=3)
    b = mr.run_scenario(sc, 20, seed=3, threads=2)
    assert mr.results_csv([a]) == mr.results_csv([b])
    cov = a.stat("usual", "HKSJ-MP", "coverage_lambda")
    assert 0.0 <= cov.value <= 1.0
    assert mr.coverage_mc_se(0.95, 10000) == pytest.approx(0.00218, abs=5e-6)
    with pytest.raises(mr.Error):
        mr.Scenario(0.0, 0.5, 1, 20)
