"""Truncation threshold sequences, truncated sample statistics, and regime
classification of a threshold rule against the critical sequence."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .distributions import TailModel

__all__ = [
    "TruncationRule",
    "TruncatedStats",
    "Regime",
    "truncation_value",
    "truncated_stats",
    "critical_sequence",
    "classify_rule",
    "RULES_STANDARD",
]

# classification band for the "critical" regime and allowed drift per decade
CRITICAL_BAND = (0.1, 10.0)
CRITICAL_DRIFT = 0.05

# wide default grid: regimes are asymptotic statements, so probe far out
DEFAULT_CLASSIFY_GRID = (10**3, 10**6, 10**12, 10**24, 10**36, 10**50)


@dataclass(frozen=True)
class TruncationRule:
    """A threshold rule n -> b_n.

    Kinds: "log_n" (log n), "pow" (n**p), "pow_over_log" (n**p / (c log n)),
    "pow_over_log1p" (n**p / log(1+n)), or "custom" (explicit table n -> b).
    """

    kind: str
    p: float | None = None
    c: float | None = None
    table: tuple[tuple[int, float], ...] | None = None

    def __post_init__(self):
        if self.kind in ("pow", "pow_over_log", "pow_over_log1p") and self.p is None:
            raise ValueError(f"rule kind {self.kind!r} needs exponent p")
        if self.kind == "pow_over_log" and (self.c is None or self.c <= 0):
            raise ValueError("pow_over_log needs a positive divisor c")
        if self.kind == "custom":
            if not self.table:
                raise ValueError("custom rule needs a table of (n, b) pairs")
            object.__setattr__(self, "table", tuple(sorted((int(n), float(b)) for n, b in self.table)))
        elif self.kind not in ("log_n", "pow", "pow_over_log", "pow_over_log1p"):
            raise ValueError(f"unknown rule kind {self.kind!r}")

    def value(self, n: int) -> float:
        if n < 2:
            raise ValueError("truncation threshold defined for n >= 2")
        if self.kind == "log_n":
            return math.log(n)
        if self.kind == "pow":
            return float(n) ** self.p
        if self.kind == "pow_over_log":
            return float(n) ** self.p / (self.c * math.log(n))
        if self.kind == "pow_over_log1p":
            return float(n) ** self.p / math.log1p(n)
        for nk, b in self.table:
            if nk == n:
                return b
        raise ValueError(f"custom rule has no entry for n = {n}")

    def label(self) -> str:
        if self.kind == "log_n":
            return "log_n"
        if self.kind == "pow":
            return f"pow:{_fmt(self.p)}"
        if self.kind == "pow_over_log":
            return f"pow_over_log:{_fmt(self.p)},{_fmt(self.c)}"
        if self.kind == "pow_over_log1p":
            return f"pow_over_log1p:{_fmt(self.p)}"
        return "custom"

    def to_json(self) -> dict:
        d = {"kind": self.kind}
        if self.p is not None:
            d["p"] = self.p
        if self.c is not None:
            d["c"] = self.c
        if self.table is not None:
            d["table"] = {str(n): b for n, b in self.table}
        return d

    @classmethod
    def from_json(cls, d: dict) -> "TruncationRule":
        table = d.get("table")
        if table is not None:
            table = tuple((int(k), float(v)) for k, v in table.items())
        return cls(d["kind"], d.get("p"), d.get("c"), table)

    @classmethod
    def parse(cls, text: str) -> "TruncationRule":
        """Parse a compact spec like "log_n", "pow:1.8" or "pow_over_log:1.5,10"."""
        kind, _, args = text.partition(":")
        parts = [a for a in args.split(",") if a] if args else []
        if kind == "log_n":
            return cls("log_n")
        if kind == "pow":
            return cls("pow", p=float(parts[0]))
        if kind == "pow_over_log":
            return cls("pow_over_log", p=float(parts[0]), c=float(parts[1]))
        if kind == "pow_over_log1p":
            return cls("pow_over_log1p", p=float(parts[0]))
        raise ValueError(f"cannot parse rule {text!r}")


def _fmt(x: float) -> str:
    return f"{x:g}"


# the seven standard threshold rules used by the simulation tables
RULES_STANDARD = (
    TruncationRule("log_n"),
    TruncationRule("pow", p=0.5),
    TruncationRule("pow", p=1.0),
    TruncationRule("pow_over_log", p=4.0 / 3.0, c=10.0),
    TruncationRule("pow", p=1.5),
    TruncationRule("pow", p=1.8),
    TruncationRule("pow_over_log1p", p=2.0),
)


def truncation_value(rule: TruncationRule, n: int) -> float:
    return rule.value(n)


@dataclass(frozen=True)
class TruncatedStats:
    """Per-sample bundle of truncated statistics at threshold b.

    mu_hat  : truncated sample mean, n**-1 sum X_k 1{X_k <= b}
    B_hat   : sqrt(sum (X_k(b) - mu_hat)**2)
    xi_n    : sum(X_k(b) - mu_k(b)) / b
    eta_n   : sum(X_k(b) - mu0(b))**2 / b**2 with mu0(b) = mean of mu_k
    h_n     : sum_k P(X_k > b) under the supplied model (None without one)
    h_n_m   : m -> sum_k d_k(m) P(X_k > b), d_k(m) = alpha/(m-alpha)
    """

    n: int
    b: float
    mu_hat: float
    B_hat: float
    xi_n: float
    eta_n: float
    h_n: float | None = None
    h_n_m: dict | None = None

    CSV_HEADER = "n,b,mu_hat,B_hat,xi_n,eta_n,h_n"

    def csv_row(self) -> str:
        h = "" if self.h_n is None else f"{self.h_n:.17g}"
        return (
            f"{self.n},{self.b:.17g},{self.mu_hat:.17g},{self.B_hat:.17g},"
            f"{self.xi_n:.17g},{self.eta_n:.17g},{h}"
        )


def truncated_stats(sample, b: float, mu_k, model: TailModel | None = None) -> TruncatedStats:
    """Compute the truncated-mean statistic bundle for one sample.

    `mu_k` holds the truncated means E[X_k 1{X_k <= b}]; a scalar is
    broadcast over the sample (iid case).  `model` is only needed for the
    tail sums h_n and h_n(m).
    """
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("sample must be nonempty")
    if b <= 0:
        raise ValueError("threshold b must be positive")
    n = x.size
    mu = np.asarray(mu_k, dtype=float)
    if mu.ndim == 0:
        mu = np.full(n, float(mu))
    elif mu.size != n:
        raise ValueError(f"mu_k has length {mu.size}, sample has {n}")
    xt = np.where(x <= b, x, 0.0)
    mu_hat = float(xt.sum() / n)
    B_hat = float(math.sqrt(np.sum((xt - mu_hat) ** 2)))
    xi = float(np.sum(xt - mu) / b)
    mu0 = float(mu.mean())
    eta = float(np.sum((xt - mu0) ** 2) / (b * b))
    h_n = None
    h_m = None
    if model is not None:
        surv = float(np.asarray(model.survival(b)))
        h_n = n * surv
        h_m = {
            m: n * model.alpha / (m - model.alpha) * surv
            for m in (1, 2, 3, 4)
            if m > model.alpha
        }
    return TruncatedStats(n=n, b=float(b), mu_hat=mu_hat, B_hat=B_hat,
                          xi_n=xi, eta_n=eta, h_n=h_n, h_n_m=h_m)


def critical_sequence(model: TailModel, n: int, h: float) -> float:
    """Smallest x with n * P(X > x) <= h, i.e. survival(x) = h/n.

    Closed form (n/h)**(1/alpha) for the unit Pareto; fixed-point iteration
    on x = (n L(x)/h)**(1/alpha) for regularly varying tails; numeric
    survival inversion for the density families.
    """
    if not 0 < h < n:
        raise ValueError("need 0 < h < n")
    return float(model.critical_value(n, h))


class Regime(str, enum.Enum):
    SUBCRITICAL = "SubCritical"
    CRITICAL = "Critical"
    SUPERCRITICAL = "SuperCritical"
    INCONCLUSIVE = "Inconclusive"


def classify_rule(rule: TruncationRule, model: TailModel, n_grid=None) -> Regime:
    """Classify a threshold rule by the trend of h_n = n * P(X > b_n).

    Growing past the critical band -> SubCritical; vanishing below it ->
    SuperCritical; staying inside the band with small per-decade drift ->
    Critical; anything else Inconclusive.  The default grid reaches n=1e50
    because slowly varying factors move h_n only logarithmically.
    """
    if n_grid is None:
        n_grid = DEFAULT_CLASSIFY_GRID
    n_grid = [int(n) for n in n_grid]
    if len(n_grid) < 4 or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be increasing with length >= 4")
    hs = [n * float(np.asarray(model.survival(rule.value(n)))) for n in n_grid]
    lo, hi = CRITICAL_BAND
    increasing = all(h2 >= h1 for h1, h2 in zip(hs, hs[1:]))
    decreasing = all(h2 <= h1 for h1, h2 in zip(hs, hs[1:]))
    if increasing and hs[-1] > hi:
        return Regime.SUBCRITICAL
    if decreasing and hs[-1] < lo:
        return Regime.SUPERCRITICAL
    if all(lo <= h <= hi for h in hs):
        drift_ok = True
        for (n1, h1), (n2, h2) in zip(zip(n_grid, hs), zip(n_grid[1:], hs[1:])):
            decades = math.log10(n2 / n1)
            factor = (h2 / h1) ** (1.0 / decades)
            if abs(factor - 1.0) >= CRITICAL_DRIFT:
                drift_ok = False
                break
        if drift_ok:
            return Regime.CRITICAL
    return Regime.INCONCLUSIVE
