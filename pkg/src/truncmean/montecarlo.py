"""Seeded Monte Carlo harness: rejection-rate tables, the lower/upper tail
decomposition of the stable sum, and convergence diagnostics.

Reproducibility contract: every repetition draws from a counter-based
substream keyed by (seed, cell, repetition), so results are bit-identical
for any worker count or scheduling order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy import special

from .distributions import Pareto
from .testing import (
    PARETO_HALF_STABLE_SCALE,
    pareto_truncated_moments,
    rejection_region_stable,
    z_quantile,
)
from .truncation import TruncationRule, critical_sequence

__all__ = [
    "SimPlan",
    "SimResult",
    "SimRow",
    "BudgetError",
    "MODES_ALL",
    "simulate_rejection_rates",
    "simulate_decomposition",
    "DecompositionResult",
    "convergence_diagnostics",
    "DiagnosticsReport",
    "DiagnosticsRow",
    "rng_substream",
    "ks_distance",
    "ks_two_sample",
]

MODES_ALL = frozenset({"known_var", "estimated_var", "stable_region"})

_U64 = (1 << 64) - 1


class BudgetError(RuntimeError):
    """Plan exceeds the configured draw budget and allow_large is not set."""


def rng_substream(seed: int, rep_index: int, stream: int = 0) -> np.random.Generator:
    """Counter-based substream: a Philox generator keyed by (seed, stream)
    with the repetition index in a high counter word.  The draws depend only
    on the three integers, never on scheduling."""
    if seed < 0 or rep_index < 0 or stream < 0:
        raise ValueError("seed, rep_index and stream must be nonnegative")
    key = np.array([seed & _U64, stream & _U64], dtype=np.uint64)
    counter = np.array([0, rep_index & _U64, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def pareto_draws(alpha0: float, rng: np.random.Generator, n: int) -> np.ndarray:
    """n unit-Pareto draws via inverse CDF: (1 - U)**(-1/alpha0)."""
    u = rng.random(n)
    if alpha0 == 0.5:
        t = 1.0 / (1.0 - u)
        return t * t
    return np.power(1.0 - u, -1.0 / alpha0)


# ---------------------------------------------------------------------------
# rejection-rate tables


@dataclass(frozen=True)
class SimPlan:
    """A rejection-rate simulation plan.

    One cell per (rule, n): `reps` independent samples of size n from the
    unit Pareto with index alpha0, tested at level beta.  Modes select the
    counted regions: "known_var", "estimated_var" and "stable_region" (the
    last requires alpha0 = 0.5).
    """

    alpha0: float
    rules: tuple[TruncationRule, ...]
    n_list: tuple[int, ...]
    reps: int
    beta: float = 0.05
    seed: int = 0
    modes: frozenset[str] = MODES_ALL
    draw_budget: float = 1e10
    allow_large: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "modes", frozenset(self.modes))
        if not 0.0 < self.alpha0 < 2.0:
            raise ValueError("alpha0 must be in (0, 2)")
        if not self.rules or not self.n_list:
            raise ValueError("rules and n_list must be nonempty")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must be in (0, 1)")
        if not self.modes <= MODES_ALL:
            raise ValueError(f"modes must be a subset of {sorted(MODES_ALL)}")
        if "stable_region" in self.modes and self.alpha0 != 0.5:
            raise ValueError("stable_region mode requires alpha0 = 0.5")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def total_draws(self) -> float:
        return float(len(self.rules)) * float(sum(self.n_list)) * float(self.reps)

    def to_json(self) -> dict:
        return {
            "alpha0": self.alpha0,
            "rules": [r.to_json() for r in self.rules],
            "n_list": list(self.n_list),
            "reps": self.reps,
            "beta": self.beta,
            "seed": self.seed,
            "modes": sorted(self.modes),
            "draw_budget": self.draw_budget,
            "allow_large": self.allow_large,
            "workers": self.workers,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SimPlan":
        return cls(
            alpha0=float(d["alpha0"]),
            rules=tuple(TruncationRule.from_json(r) for r in d["rules"]),
            n_list=tuple(int(n) for n in d["n_list"]),
            reps=int(d["reps"]),
            beta=float(d.get("beta", 0.05)),
            seed=int(d.get("seed", 0)),
            modes=frozenset(d.get("modes", sorted(MODES_ALL))),
            draw_budget=float(d.get("draw_budget", 1e10)),
            allow_large=bool(d.get("allow_large", False)),
            workers=int(d.get("workers", 1)),
        )


@dataclass(frozen=True)
class SimRow:
    rule: str
    n: int
    reps: int
    r_o: float | None
    r: float | None
    r_tilde: float | None
    se_o: float | None
    se: float | None
    se_tilde: float | None
    count_o: int | None = None
    count: int | None = None
    count_tilde: int | None = None


@dataclass(frozen=True)
class SimResult:
    plan: SimPlan
    rows: tuple[SimRow, ...]

    CSV_HEADER = "rule,n,N,r_o,r,r_tilde,se_o,se,se_tilde"

    def to_csv(self) -> str:
        lines = [
            f"# truncmean rejection rates, seed = {self.plan.seed}",
            f"# plan = {self.plan.to_json()}",
            self.CSV_HEADER,
        ]
        for row in self.rows:
            cells = [row.rule, str(row.n), str(row.reps)]
            for v in (row.r_o, row.r, row.r_tilde, row.se_o, row.se, row.se_tilde):
                cells.append("" if v is None else f"{v:.6g}")
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        rows = []
        for row in self.rows:
            rows.append({
                "rule": row.rule, "n": row.n, "N": row.reps,
                "r_o": row.r_o, "r": row.r, "r_tilde": row.r_tilde,
                "se_o": row.se_o, "se": row.se, "se_tilde": row.se_tilde,
            })
        return {"seed": self.plan.seed, "plan": self.plan.to_json(), "rows": rows}


def _mc_se(count: int, reps: int) -> float:
    p = count / reps
    return math.sqrt(p * (1.0 - p) / reps)


def _cell_block(alpha0, b, n, seed, cell, rep_lo, rep_hi, cut_o, z, stable_cut):
    """Rejection counts over a contiguous repetition range of one cell."""
    c_o = c_e = c_t = 0
    mu0, _ = pareto_truncated_moments(alpha0, b)
    for rep in range(rep_lo, rep_hi):
        g = rng_substream(seed, rep, stream=cell)
        x = pareto_draws(alpha0, g, n)
        xt = np.where(x <= b, x, 0.0)
        mu_hat = float(xt.sum()) / n
        dev = abs(mu_hat - mu0)
        if cut_o is not None and dev > cut_o:
            c_o += 1
        if z is not None:
            bsq = float(xt @ xt) - n * mu_hat * mu_hat
            if bsq > 0.0 and dev > z * math.sqrt(bsq) / n:
                c_e += 1
        if stable_cut is not None and float(x.mean()) > stable_cut:
            c_t += 1
    return c_o, c_e, c_t


def _run_cell(plan: SimPlan, b: float, n: int, cell: int) -> tuple[int, int, int]:
    mu0, var1 = pareto_truncated_moments(plan.alpha0, b)
    cut_o = None
    z = None
    stable_cut = None
    if "known_var" in plan.modes:
        cut_o = z_quantile(plan.beta) * math.sqrt(n * var1) / n
    if "estimated_var" in plan.modes:
        z = z_quantile(plan.beta)
    if "stable_region" in plan.modes:
        stable_cut = rejection_region_stable(n, plan.beta).threshold
    args = (plan.alpha0, b, n, plan.seed, cell)
    if plan.workers == 1:
        counts = [_cell_block(*args, 0, plan.reps, cut_o, z, stable_cut)]
    else:
        blocks = max(plan.workers * 4, 1)
        edges = np.linspace(0, plan.reps, blocks + 1, dtype=int)
        jobs = (
            delayed(_cell_block)(*args, int(lo), int(hi), cut_o, z, stable_cut)
            for lo, hi in zip(edges[:-1], edges[1:])
            if hi > lo
        )
        counts = Parallel(n_jobs=plan.workers, prefer="threads")(jobs)
    c_o = sum(c[0] for c in counts)
    c_e = sum(c[1] for c in counts)
    c_t = sum(c[2] for c in counts)
    return c_o, c_e, c_t


def simulate_rejection_rates(plan: SimPlan) -> SimResult:
    """Run the plan and tabulate rejection rates per (rule, n) cell.

    Raises BudgetError when the total draw count exceeds the plan's budget
    and allow_large is unset.  Boundary ties count as non-rejection, and a
    degenerate sample (zero spread after truncation) never rejects under
    estimated variance.
    """
    if plan.total_draws > plan.draw_budget and not plan.allow_large:
        raise BudgetError(
            f"plan needs {plan.total_draws:.3g} draws > budget {plan.draw_budget:.3g}; "
            "set allow_large to proceed"
        )
    rows = []
    cell = 0
    for rule in plan.rules:
        for n in plan.n_list:
            b = rule.value(n)
            c_o, c_e, c_t = _run_cell(plan, b, n, cell)
            N = plan.reps
            has_o = "known_var" in plan.modes
            has_e = "estimated_var" in plan.modes
            has_t = "stable_region" in plan.modes
            rows.append(SimRow(
                rule=rule.label(), n=n, reps=N,
                r_o=c_o / N if has_o else None,
                r=c_e / N if has_e else None,
                r_tilde=c_t / N if has_t else None,
                se_o=_mc_se(c_o, N) if has_o else None,
                se=_mc_se(c_e, N) if has_e else None,
                se_tilde=_mc_se(c_t, N) if has_t else None,
                count_o=c_o if has_o else None,
                count=c_e if has_e else None,
                count_tilde=c_t if has_t else None,
            ))
            cell += 1
    return SimResult(plan=plan, rows=tuple(rows))


# ---------------------------------------------------------------------------
# lower/upper decomposition of the normalised stable sum


@dataclass(frozen=True)
class DecompositionResult:
    alpha: float
    n: int
    reps: int
    c_n: float
    mu_n: float
    U: np.ndarray
    V: np.ndarray
    exceed_counts: np.ndarray
    additivity_max_err: float


def simulate_decomposition(alpha: float, n: int, reps: int, seed: int) -> DecompositionResult:
    """Split S_n = c_n^{-1} sum(X_k - mu_n) into the truncated part U_n and
    the exceedance part V_n at the critical threshold c_n (tail sum 1).

    mu_n = 0 for alpha < 1 and E[X 1{X <= c_n}] for alpha in [1, 2).
    U_n + V_n reproduces S_n to float accuracy per repetition; the largest
    relative discrepancy is recorded.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must be in (0, 2)")
    model = Pareto(alpha)
    c_n = critical_sequence(model, n, 1.0)
    mu_n = 0.0 if alpha < 1.0 else model.truncated_moment(1, c_n)
    U = np.empty(reps)
    V = np.empty(reps)
    exceed = np.empty(reps, dtype=int)
    max_err = 0.0
    for rep in range(reps):
        g = rng_substream(seed, rep, stream=0)
        x = pareto_draws(alpha, g, n)
        mask = x <= c_n
        s_low = float(np.where(mask, x, 0.0).sum())
        s_high = float(np.where(mask, 0.0, x).sum())
        U[rep] = (s_low - n * mu_n) / c_n
        V[rep] = s_high / c_n
        s_all = (float(x.sum()) - n * mu_n) / c_n
        err = abs(U[rep] + V[rep] - s_all) / max(1.0, abs(s_all))
        max_err = max(max_err, err)
        exceed[rep] = int(np.count_nonzero(~mask))
    return DecompositionResult(alpha=alpha, n=n, reps=reps, c_n=c_n, mu_n=mu_n,
                               U=U, V=V, exceed_counts=exceed, additivity_max_err=max_err)


# ---------------------------------------------------------------------------
# convergence diagnostics


@dataclass(frozen=True)
class DiagnosticsRow:
    n: int
    ks_normal: float
    median_T: float
    iqr_To: float
    T: np.ndarray | None = None
    To: np.ndarray | None = None


@dataclass(frozen=True)
class DiagnosticsReport:
    alpha0: float
    rule: str
    reps: int
    rows: tuple[DiagnosticsRow, ...]
    ks_decreasing: bool = field(init=False, default=False)
    median_decreasing: bool = field(init=False, default=False)
    iqr_decreasing: bool = field(init=False, default=False)

    def __post_init__(self):
        ks = [r.ks_normal for r in self.rows]
        med = [r.median_T for r in self.rows]
        iqr = [r.iqr_To for r in self.rows]
        object.__setattr__(self, "ks_decreasing", all(b < a for a, b in zip(ks, ks[1:])))
        object.__setattr__(self, "median_decreasing", all(b < a for a, b in zip(med, med[1:])))
        object.__setattr__(self, "iqr_decreasing", all(b < a for a, b in zip(iqr, iqr[1:])))


def convergence_diagnostics(alpha0: float, rule: TruncationRule, n_grid, reps: int,
                            seed: int, keep_samples: bool = True,
                            workers: int = 1) -> DiagnosticsReport:
    """Distributional diagnostics of the two statistics across sample sizes.

    Per n: the KS distance of the self-normalised statistic to the standard
    normal, its median, and the interquartile range of the known-variance
    statistic.  Shrinking KS indicates the normal regime; a drifting
    negative median and a collapsing IQR indicate the over-truncated regime.
    """
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be increasing")
    rows = []
    for cell, n in enumerate(n_grid):
        b = rule.value(n)
        T, To = _statistic_samples(alpha0, b, n, reps, seed, cell, workers)
        finite = np.isfinite(T)
        row = DiagnosticsRow(
            n=n,
            ks_normal=ks_distance(T[finite], special.ndtr),
            median_T=float(np.median(T[finite])),
            iqr_To=float(np.subtract(*np.percentile(To, [75.0, 25.0]))),
            T=T if keep_samples else None,
            To=To if keep_samples else None,
        )
        rows.append(row)
    return DiagnosticsReport(alpha0=alpha0, rule=rule.label(), reps=reps, rows=tuple(rows))


def _stat_block(alpha0, b, n, seed, cell, rep_lo, rep_hi, mu0, sd_total):
    T = np.empty(rep_hi - rep_lo)
    To = np.empty(rep_hi - rep_lo)
    for i, rep in enumerate(range(rep_lo, rep_hi)):
        g = rng_substream(seed, rep, stream=cell)
        x = pareto_draws(alpha0, g, n)
        xt = np.where(x <= b, x, 0.0)
        mu_hat = float(xt.sum()) / n
        bsq = float(xt @ xt) - n * mu_hat * mu_hat
        T[i] = n * (mu_hat - mu0) / math.sqrt(bsq) if bsq > 0 else -math.inf
        To[i] = n * (mu_hat - mu0) / sd_total
    return T, To


def _statistic_samples(alpha0, b, n, reps, seed, cell, workers):
    mu0, var1 = pareto_truncated_moments(alpha0, b)
    sd_total = math.sqrt(n * var1)
    if workers == 1:
        return _stat_block(alpha0, b, n, seed, cell, 0, reps, mu0, sd_total)
    edges = np.linspace(0, reps, workers * 4 + 1, dtype=int)
    parts = Parallel(n_jobs=workers, prefer="threads")(
        delayed(_stat_block)(alpha0, b, n, seed, cell, int(lo), int(hi), mu0, sd_total)
        for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo
    )
    return (np.concatenate([p[0] for p in parts]),
            np.concatenate([p[1] for p in parts]))


# ---------------------------------------------------------------------------
# KS distances


def ks_distance(values, cdf) -> float:
    """sup-norm distance between the empirical CDF of `values` and a
    continuous CDF given as a vectorised callable."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("values must be nonempty")
    F = np.asarray(cdf(v), dtype=float)
    i = np.arange(1, v.size + 1, dtype=float)
    return float(max(np.max(np.abs(F - i / v.size)), np.max(np.abs(F - (i - 1.0) / v.size))))


def ks_two_sample(a, b) -> float:
    """sup-norm distance between two empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    allv = np.concatenate([a, b])
    Fa = np.searchsorted(a, allv, side="right") / a.size
    Fb = np.searchsorted(b, allv, side="right") / b.size
    return float(np.max(np.abs(Fa - Fb)))
