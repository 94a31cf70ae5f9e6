"""truncmean: hypothesis testing with a truncated sample mean for extremely
heavy-tailed data (tail index in (0, 2), infinite mean or variance)."""

from .distributions import (
    ConditionReport,
    DensityFamily,
    NumericError,
    Pareto,
    RegVarying,
    SlowlyVarying,
    TailModel,
    cdf,
    model_from_json,
    model_to_json,
    sample,
    tail_sum,
    verify_conditions,
)
from .limits import (
    LEVY,
    NORMAL,
    InversionConfig,
    LimitLaw,
    SmallHReport,
    cdf_table,
    cf_eval,
    cf_grid,
    eta_law,
    invert_cdf,
    invert_pdf,
    levy_cdf,
    levy_pdf,
    levy_quantile,
    levy_scale_calibration,
    levy_survival,
    limit_of_T_small_h,
    osc_integrals,
    osc_one_minus_cos,
    osc_sin,
    osc_sin_minus_x,
    quantile,
    stable_half_skew_pos,
    stable_skew_neg,
    t_alpha_h_law,
    xi_law,
)
from .montecarlo import (
    BudgetError,
    DecompositionResult,
    DiagnosticsReport,
    DiagnosticsRow,
    MODES_ALL,
    SimPlan,
    SimResult,
    SimRow,
    convergence_diagnostics,
    ks_distance,
    ks_two_sample,
    rng_substream,
    simulate_decomposition,
    simulate_rejection_rates,
)
from .testing import (
    ConfidenceInterval,
    DegenerateSampleError,
    PARETO_HALF_STABLE_SCALE,
    RejectionRegion,
    StableRegion,
    TestConfig,
    TestOutcome,
    confidence_interval,
    pareto_truncated_moments,
    rejection_region,
    rejection_region_stable,
    run_test,
    statistic_T,
    statistic_To,
    z_quantile,
)
from .truncation import (
    RULES_STANDARD,
    Regime,
    TruncatedStats,
    TruncationRule,
    classify_rule,
    critical_sequence,
    truncated_stats,
    truncation_value,
)

__version__ = "0.1.0"
