"""Test statistics for the truncated sample mean, closed-form moments under
the unit-Pareto null, rejection regions, confidence intervals, and the
single-dataset test runner."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .distributions import Pareto
from .limits import levy_quantile
from .truncation import Regime, TruncationRule, TruncatedStats, classify_rule, truncated_stats

__all__ = [
    "TestConfig",
    "TestOutcome",
    "RejectionRegion",
    "StableRegion",
    "ConfidenceInterval",
    "DegenerateSampleError",
    "PARETO_HALF_STABLE_SCALE",
    "statistic_T",
    "statistic_To",
    "pareto_truncated_moments",
    "rejection_region",
    "rejection_region_stable",
    "confidence_interval",
    "run_test",
]


class DegenerateSampleError(ValueError):
    """All truncated observations are identical; the studentised statistic
    is undefined."""


@dataclass(frozen=True)
class TestConfig:
    """Configuration of the two-sided truncated-mean test of alpha = alpha0."""

    __test__ = False  # not a pytest class

    alpha0: float
    rule: TruncationRule
    beta: float = 0.05
    variance_mode: str = "estimated"  # "known" | "estimated"

    def __post_init__(self):
        if not 0.0 < self.alpha0 < 2.0:
            raise ValueError("alpha0 must be in (0, 2)")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must be in (0, 1)")
        if self.variance_mode not in ("known", "estimated"):
            raise ValueError("variance_mode must be 'known' or 'estimated'")


@dataclass(frozen=True)
class RejectionRegion:
    """Two-sided region (-inf, lo_cut) U (hi_cut, inf); boundary points are
    kept (ties count as non-rejection)."""

    mu0: float
    lo_cut: float
    hi_cut: float

    def contains(self, value: float) -> bool:
        return value < self.lo_cut or value > self.hi_cut


@dataclass(frozen=True)
class StableRegion:
    """One-sided region (threshold, inf) for the untruncated sample mean."""

    threshold: float

    def contains(self, value: float) -> bool:
        return value > self.threshold


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    coverage: float


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False  # not a pytest class

    statistic: float
    mu0: float
    region: RejectionRegion
    reject: bool
    z_quantile: float
    p_value: float
    regime: Regime
    stats: TruncatedStats

    def to_json(self) -> dict:
        return {
            "statistic": self.statistic,
            "mu0": self.mu0,
            "region": [self.region.lo_cut, self.region.hi_cut],
            "reject": self.reject,
            "p_value": self.p_value,
            "regime": self.regime.value,
        }


def statistic_T(stats: TruncatedStats, mu0: float) -> float:
    """Self-normalised statistic n (mu_hat - mu0) / B_hat."""
    if stats.B_hat <= 0.0:
        raise DegenerateSampleError("B_hat is zero: all truncated values identical")
    return stats.n * (stats.mu_hat - mu0) / stats.B_hat


def statistic_To(stats: TruncatedStats, mu0: float, var_total: float) -> float:
    """Known-variance statistic n (mu_hat - mu0) / sqrt(var_total), where
    var_total = sum_k Var(X_k 1{X_k <= b}) (= n Var(X_1(b)) when iid)."""
    if var_total <= 0.0:
        raise ValueError("var_total must be positive")
    return stats.n * (stats.mu_hat - mu0) / math.sqrt(var_total)


def pareto_truncated_moments(alpha0: float, b: float) -> tuple[float, float]:
    """(mu0, var) of X 1{X <= b} under the unit Pareto with index alpha0.

    mu0 = alpha0/(1-alpha0) (b**(1-alpha0) - 1) with the log(b) limit at
    alpha0 = 1; var = alpha0/(2-alpha0) (b**(2-alpha0) - 1) - mu0**2.
    """
    if not 0.0 < alpha0 < 2.0:
        raise ValueError("alpha0 must be in (0, 2)")
    if b < 1.0:
        raise ValueError("threshold b must be >= 1")
    lb = math.log(b)
    if abs(1.0 - alpha0) < 1e-8:
        mu0 = alpha0 * lb
    else:
        mu0 = alpha0 * math.expm1((1.0 - alpha0) * lb) / (1.0 - alpha0)
    m2 = alpha0 * math.expm1((2.0 - alpha0) * lb) / (2.0 - alpha0)
    return mu0, m2 - mu0 * mu0


def z_quantile(beta: float) -> float:
    """Two-sided normal critical value Phi^{-1}(1 - beta/2)."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must be in (0, 1)")
    return float(special.ndtri(1.0 - beta / 2.0))


def rejection_region(n: int, mu0: float, scale: float, beta: float) -> RejectionRegion:
    """Two-sided region for mu_hat: cut points mu0 -+ z * scale / n, where
    scale is sqrt(Var(b_n)) (known variance) or B_hat (estimated)."""
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    z = z_quantile(beta)
    cut = z * scale / n
    return RejectionRegion(mu0=mu0, lo_cut=mu0 - cut, hi_cut=mu0 + cut)


# Scale of the limit law of mean(X)/n under the unit-Pareto null with tail
# index 1/2.  n P(X > n^2 u) = u^{-1/2}, so mean/n converges to the
# one-sided 1/2-stable law with jump measure (1/2) u^{-3/2} du, which is the
# unit-scale law (tail ~ sqrt(2/pi) u^{-1/2}) multiplied by pi/2.
PARETO_HALF_STABLE_SCALE = math.pi / 2.0


def rejection_region_stable(n: int, beta: float,
                            tail_scale: float = PARETO_HALF_STABLE_SCALE) -> StableRegion:
    """One-sided region (n*y, inf) for the untruncated sample mean of a
    unit-Pareto(1/2) sample, where y = tail_scale * q and q is the
    upper-beta quantile of the unit-scale one-sided 1/2-stable law.

    The default tail_scale matches the null model exactly; pass 1.0 to get
    the unscaled region based on the unit law's quantile alone.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if tail_scale <= 0.0:
        raise ValueError("tail_scale must be positive")
    y = tail_scale * levy_quantile(1.0 - beta)
    return StableRegion(threshold=n * y)


def confidence_interval(stats: TruncatedStats, x: float) -> ConfidenceInterval:
    """Interval mu_hat -+ x B_hat / n with nominal coverage 2 Phi(x) - 1."""
    if x <= 0.0:
        raise ValueError("x must be positive")
    half = x * stats.B_hat / stats.n
    coverage = float(2.0 * special.ndtr(x) - 1.0)
    return ConfidenceInterval(lo=stats.mu_hat - half, hi=stats.mu_hat + half, coverage=coverage)


def run_test(sample, config: TestConfig) -> TestOutcome:
    """Run the truncated-mean test of H0: alpha = alpha0 on one dataset.

    Truncates at b_n from the configured rule, centres at the closed-form
    Pareto truncated mean, studentises by B_hat or by the known standard
    deviation, and rejects when mu_hat falls outside mu0 -+ z * scale / n.
    The reported p-value is the two-sided normal approximation, meaningful
    only when the rule classifies as SubCritical (see `regime`).
    """
    sample = np.asarray(sample, dtype=float)
    n = int(sample.size)
    if n == 0:
        raise ValueError("sample must be nonempty")
    b = config.rule.value(n)
    if b < 1.0:
        # below the null support everything truncates to zero
        mu0, var1 = 0.0, 0.0
    else:
        mu0, var1 = pareto_truncated_moments(config.alpha0, b)
    model = Pareto(config.alpha0)
    stats = truncated_stats(sample, b, mu0, model=model)
    if config.variance_mode == "known":
        if var1 <= 0.0:
            raise DegenerateSampleError("truncated variance is zero at this threshold")
        scale = math.sqrt(n * var1)
        stat = statistic_To(stats, mu0, n * var1)
    else:
        scale = stats.B_hat
        stat = statistic_T(stats, mu0)
    region = rejection_region(n, mu0, scale, config.beta)
    reject = region.contains(stats.mu_hat)
    z = z_quantile(config.beta)
    p = float(2.0 * (1.0 - special.ndtr(abs(stat))))
    try:
        regime = classify_rule(config.rule, model)
    except ValueError:
        # custom tables rarely cover the wide default grid
        regime = Regime.INCONCLUSIVE
    return TestOutcome(
        statistic=stat,
        mu0=mu0,
        region=region,
        reject=reject,
        z_quantile=z,
        p_value=p,
        regime=regime,
        stats=stats,
    )
