"""Log response ratio meta-analysis: effect sizes, heterogeneity, pooling and simulation."""

from ._core import (
    ArmSummary,
    EffectRow,
    Error,
    LambdaInterval,
    MethodStat,
    PooledResult,
    Scenario,
    ScenarioResult,
    StudySummary,
    Tau2Estimate,
    Tau2Interval,
    analyze,
    cdf_weighted_chisq,
    chi2_cdf,
    chi2_quantile,
    ci_hksj,
    ci_iv_normal,
    ci_ssw_t,
    cochran_q,
    compute_effects,
    coverage_mc_se,
    generalized_q,
    lrr,
    lrr_bias_corrected,
    pool_iv,
    pool_ssw,
    q_eigenvalues,
    results_csv,
    run_scenario,
    t_quantile,
    tau2,
    tau2_interval,
)

__all__ = [name for name in dir() if not name.startswith("_")]
