"""Heavy-tailed distribution models with tail index alpha in (0, 2)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "TailModel",
    "Pareto",
    "RegVarying",
    "DensityFamily",
    "SlowlyVarying",
    "ConditionReport",
    "NumericError",
    "cdf",
    "sample",
    "tail_sum",
    "verify_conditions",
    "model_to_json",
    "model_from_json",
]

_FAMILIES = "fghpq"


class NumericError(RuntimeError):
    """An iterative numeric procedure failed to converge."""


def _quad(fun, a, b, **kw):
    kw.setdefault("epsabs", 1e-13)
    kw.setdefault("epsrel", 1e-11)
    kw.setdefault("limit", 200)
    val, _ = integrate.quad(fun, a, b, **kw)
    return val


@dataclass(frozen=True)
class SlowlyVarying:
    """Slowly varying factor L(x): constant, polylog, log-log, or reciprocals.

    Forms: "constant" -> theta; "log1p_pow" -> theta*log(1+x)**tau;
    "loglog" -> theta*log(log(x)); "reciprocal_log1p_pow" and
    "reciprocal_loglog" invert the latter two.
    """

    form: str = "constant"
    theta: float = 1.0
    tau: float = 1.0

    def __post_init__(self):
        if self.form not in (
            "constant",
            "log1p_pow",
            "loglog",
            "reciprocal_log1p_pow",
            "reciprocal_loglog",
        ):
            raise ValueError(f"unknown slowly varying form {self.form!r}")
        if self.theta <= 0 or self.tau <= 0:
            raise ValueError("theta and tau must be positive")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.form == "constant":
            return np.full_like(x, self.theta)
        if self.form == "log1p_pow":
            return self.theta * np.log1p(x) ** self.tau
        if self.form == "reciprocal_log1p_pow":
            return self.theta / np.log1p(x) ** self.tau
        # log-log forms need x > e
        ll = np.log(np.log(x))
        if self.form == "loglog":
            return self.theta * ll
        return self.theta / ll

    def to_json(self):
        return {"form": self.form, "theta": self.theta, "tau": self.tau}

    @classmethod
    def from_json(cls, d):
        return cls(d.get("form", "constant"), d.get("theta", 1.0), d.get("tau", 1.0))


class TailModel:
    """Base class for nonnegative heavy-tailed models on [support_min, inf)."""

    alpha: float
    support_min: float

    def survival(self, x):
        raise NotImplementedError

    def cdf(self, x):
        """P(X <= x); 0 below the support and 1 - survival(x) above."""
        x = np.asarray(x, dtype=float)
        out = np.where(x < self.support_min, 0.0, 1.0 - self.survival(np.maximum(x, self.support_min)))
        return out if out.ndim else float(out)

    def sample(self, rng, count):
        """Draw `count` values by inverting the survival function at 1 - U."""
        if count < 0:
            raise ValueError("count must be >= 0")
        u = rng.random(int(count))
        return self.inverse_survival(1.0 - u)

    def inverse_survival(self, s):
        raise NotImplementedError

    def truncated_moment(self, r, b):
        """E[X^r 1{X <= b}]."""
        raise NotImplementedError

    def critical_value(self, n, h):
        """Smallest x with survival(x) <= h/n."""
        raise NotImplementedError

    def _check_alpha(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must be in (0, 2), got {self.alpha}")


@dataclass(frozen=True)
class Pareto(TailModel):
    """Unit Pareto: F(x) = 1 - x**(-alpha) for x >= 1."""

    alpha: float
    support_min: float = 1.0

    def __post_init__(self):
        self._check_alpha()
        if self.support_min != 1.0:
            raise ValueError("Pareto model uses support_min = 1")

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x <= 1.0, 1.0, x ** -self.alpha)
        return out if out.ndim else float(out)

    def inverse_survival(self, s):
        s = np.asarray(s, dtype=float)
        out = s ** (-1.0 / self.alpha)
        return out if out.ndim else float(out)

    def truncated_moment(self, r, b):
        if b < 1.0:
            return 0.0
        a = self.alpha
        # a/(r-a) * (b**(r-a) - 1), via expm1 for stability near r == a
        return a * math.expm1((r - a) * math.log(b)) / (r - a)

    def critical_value(self, n, h):
        return (n / h) ** (1.0 / self.alpha)


@dataclass(frozen=True)
class RegVarying(TailModel):
    """Regularly varying tail: 1 - F(x) = x**(-alpha) * L(x) for x >= support_min.

    The survival formula must be a valid tail from `support_min` on, i.e.
    <= 1 there and nonincreasing; this is checked at construction.  Any
    missing mass (when the formula is < 1 at `support_min`) sits as an atom
    at `support_min`.
    """

    alpha: float
    slowly_varying: SlowlyVarying = field(default_factory=SlowlyVarying)
    support_min: float = 1.0

    def __post_init__(self):
        self._check_alpha()
        if self.support_min <= 0:
            raise ValueError("support_min must be > 0")
        if self.slowly_varying.form in ("loglog", "reciprocal_loglog") and self.support_min <= math.e:
            raise ValueError("log-log slowly varying factors need support_min > e")
        grid = self.support_min * np.logspace(0.0, 15.0, 181)
        v = self._formula(grid)
        if v[0] > 1.0 + 1e-12:
            raise ValueError(
                "survival formula exceeds 1 at support_min; raise support_min"
            )
        if np.any(np.diff(v) > 1e-12 * np.maximum(v[:-1], 1e-300)):
            raise ValueError(
                "survival formula is not nonincreasing from support_min; raise support_min"
            )

    def _formula(self, x):
        x = np.asarray(x, dtype=float)
        return x ** -self.alpha * self.slowly_varying.value(x)

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < self.support_min, 1.0,
                       np.clip(self._formula(np.maximum(x, self.support_min)), 0.0, 1.0))
        return out if out.ndim else float(out)

    def inverse_survival(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s <= 0.0) or np.any(s > 1.0):
            raise ValueError("survival targets must lie in (0, 1]")
        s_at_min = float(self.survival(self.support_min))
        out = np.empty_like(s)
        for i, si in enumerate(s):
            if si >= s_at_min:
                out[i] = self.support_min
                continue
            lo, hi = self.support_min, 2.0 * self.support_min
            for _ in range(600):
                if self.survival(hi) <= si:
                    break
                hi *= 4.0
            else:
                raise NumericError("survival inversion failed to bracket")
            out[i] = optimize.brentq(
                lambda x: self.survival(x) - si, lo, hi, xtol=1e-300, rtol=1e-14
            )
        return out if out.size > 1 else float(out[0])

    def truncated_moment(self, r, b):
        if b < self.support_min:
            return 0.0
        # X >= a almost surely, so E[X^r 1{X<=b}] = a^r + r int_a^b x^{r-1}
        # S(x) dx - b^r S(b); any atom at a enters through the constant term
        a = self.support_min
        total = a**r - b**r * float(self.survival(b))
        edges = [a]
        while edges[-1] < b:
            edges.append(min(2.0 * edges[-1], b))
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += r * _quad(lambda x: x ** (r - 1) * self.survival(x), lo, hi)
        return total

    def critical_value(self, n, h):
        # fixed point of x = (n L(x)/h)^(1/alpha), seeded with the L==1 guess
        inv_a = 1.0 / self.alpha
        x = max((n / h) ** inv_a, self.support_min)
        for _ in range(200):
            nxt = (n * float(self.slowly_varying.value(x)) / h) ** inv_a
            if abs(nxt - x) <= 1e-8 * abs(nxt):
                return max(nxt, self.support_min)
            x = nxt
        raise NumericError("critical sequence iteration did not converge in 200 steps")


# normalising constants, keyed (family, alpha)
_NORM_CACHE: dict[tuple[str, float], float] = {}


@dataclass(frozen=True)
class DensityFamily(TailModel):
    """One of five densities on [1, inf) with polynomial tail x**-(1+alpha).

    family "f": c*cos(x**-a) / (x**(1+a) * (sin(x**-a)+1))
    family "g": c*x**-(a+1) * cos(1/x)
    family "h": c*x**-a * sin(1/x)
    family "p": c*sin(x**-(a+1))
    family "q": c*x**-(a+1)   (exact Pareto tail)

    The damped trigonometric factors tend to 1 (or to the leading power) as
    x -> inf, so every member has regularly varying tail index alpha.
    Normalising constants are computed once by quadrature and cached;
    "f" and "q" also have closed forms used as cross-checks.
    """

    family: str
    alpha: float
    support_min: float = 1.0

    def __post_init__(self):
        self._check_alpha()
        if self.family not in _FAMILIES:
            raise ValueError(f"family must be one of {_FAMILIES!r}")
        if self.support_min != 1.0:
            raise ValueError("density families use support_min = 1")
        object.__setattr__(self, "_inv_table", None)

    @property
    def norm_const(self):
        key = (self.family, self.alpha)
        c = _NORM_CACHE.get(key)
        if c is None:
            raw = _quad(lambda t: self._w_raw(np.asarray(t)), 0.0, 1.0)
            c = 1.0 / raw
            _NORM_CACHE[key] = c
        return c

    def density(self, x):
        x = np.asarray(x, dtype=float)
        a, c = self.alpha, self.norm_const
        if self.family == "f":
            u = x**-a
            d = c * np.cos(u) / (x ** (1 + a) * (np.sin(u) + 1.0))
        elif self.family == "g":
            d = c * x ** -(a + 1) * np.cos(1.0 / x)
        elif self.family == "h":
            d = c * x**-a * np.sin(1.0 / x)
        elif self.family == "p":
            d = c * np.sin(x ** -(a + 1))
        else:
            d = c * x ** -(a + 1)
        out = np.where(x < 1.0, 0.0, d)
        return out if out.ndim else float(out)

    def _w_raw(self, t):
        # tail integrand after x = t**(-1/alpha): survival(x) = norm * int_0^{x^-alpha} w_raw
        a = self.alpha
        t = np.asarray(t, dtype=float)
        if self.family == "f":
            return np.cos(t) / ((np.sin(t) + 1.0) * a)
        if self.family == "g":
            return np.cos(t ** (1.0 / a)) / a
        if self.family == "h":
            y = t ** (1.0 / a)
            return _sinc(y) / a
        if self.family == "p":
            z = t ** ((1.0 + a) / a)
            return _sinc(z) / a
        return np.full_like(t, 1.0 / a)

    def _w(self, t):
        return self.norm_const * self._w_raw(t)

    def survival(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        a = self.alpha
        out = np.empty_like(x)
        for i, xi in enumerate(x):
            if xi <= 1.0:
                out[i] = 1.0
            elif self.family == "f":
                # closed form: (c/alpha) * log(1 + sin(x**-alpha))
                out[i] = self.norm_const / a * math.log1p(math.sin(xi**-a))
            elif self.family == "q":
                out[i] = xi**-a
            else:
                out[i] = _quad(lambda t: self._w(np.asarray(t)), 0.0, xi**-a)
        return out if out.size > 1 else float(out[0])

    def _table(self):
        # cached cumulative tail integral W(t) = int_0^t w on a fine grid
        if self._inv_table is None:
            nodes = np.linspace(0.0, 1.0, 2049)
            segs = [0.0]
            for lo, hi in zip(nodes[:-1], nodes[1:]):
                segs.append(_quad(lambda t: self._w(np.asarray(t)), lo, hi))
            W = np.cumsum(segs)
            W[-1] = 1.0
            object.__setattr__(self, "_inv_table", (nodes, W))
        return self._inv_table

    def inverse_survival(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        nodes, W = self._table()
        out = np.empty_like(s)
        for i, si in enumerate(s):
            if si >= 1.0:
                out[i] = 1.0
                continue
            j = int(np.searchsorted(W, si, side="right")) - 1
            j = min(max(j, 0), len(nodes) - 2)
            base, t_lo, t_hi = W[j], nodes[j], nodes[j + 1]

            def local(t):
                return base + _quad(lambda u: self._w(np.asarray(u)), t_lo, t) - si

            t_star = optimize.brentq(local, t_lo, t_hi, xtol=1e-14, rtol=8.9e-16)
            out[i] = max(t_star, 1e-300) ** (-1.0 / self.alpha)
        return out if out.size > 1 else float(out[0])

    def truncated_moment(self, r, b):
        if b <= 1.0:
            return 0.0
        edges = [1.0]
        while edges[-1] < b:
            edges.append(min(2.0 * edges[-1], b))
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += _quad(lambda x: x**r * self.density(np.asarray(x)), lo, hi)
        return total

    def critical_value(self, n, h):
        return float(self.inverse_survival(h / n))


def _sinc(y):
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1e-6
    safe = np.where(small, 1.0, y)
    return np.where(small, 1.0 - y * y / 6.0, np.sin(safe) / safe)


# ---------------------------------------------------------------------------
# module-level operations


def cdf(model: TailModel, x):
    return model.cdf(x)


def sample(model: TailModel, rng, count: int):
    return model.sample(rng, count)


def tail_sum(models, b):
    """D_n(b) = sum_k P(X_k > b) over a list of models."""
    return float(sum(float(np.asarray(m.survival(b))) for m in models))


@dataclass(frozen=True)
class ConditionReport:
    """Moment-growth diagnostics for a tail model.

    `ratios[i]` is E[X^r 1{X<=b_i}] / (d_r * b_i^r * survival(b_i)) with
    d_r = alpha/(r-alpha); the tail-moment condition holds when the ratios
    approach 1.  `survivals` records max_k survival(b_i), which must vanish.
    """

    r: int
    alpha: float
    d_r: float
    b_grid: tuple
    ratios: tuple
    survivals: tuple
    converged: bool
    survival_vanishing: bool


def verify_conditions(model: TailModel, r: int, b_grid, tol: float = 0.05) -> ConditionReport:
    """Check the tail-moment growth ratio E[X^r 1{X<=b}] / (d_r b^r S(b)) -> 1."""
    if r < 1:
        raise ValueError("r must be >= 1")
    if r <= model.alpha:
        raise ValueError(f"need r > alpha (r={r}, alpha={model.alpha}); use r >= 2 when alpha >= 1")
    b_grid = [float(b) for b in b_grid]
    if any(b2 <= b1 for b1, b2 in zip(b_grid, b_grid[1:])):
        raise ValueError("b_grid must be increasing")
    d_r = model.alpha / (r - model.alpha)
    ratios, survs = [], []
    for b in b_grid:
        s = float(np.asarray(model.survival(b)))
        m = model.truncated_moment(r, b)
        ratios.append(m / (d_r * b**r * s))
        survs.append(s)
    gaps = [abs(rt - 1.0) for rt in ratios]
    converged = gaps[-1] < tol and all(g2 <= g1 * 1.1 + 1e-12 for g1, g2 in zip(gaps, gaps[1:]))
    vanishing = survs[-1] < survs[0] or survs[0] == 0.0
    return ConditionReport(
        r=r,
        alpha=model.alpha,
        d_r=d_r,
        b_grid=tuple(b_grid),
        ratios=tuple(ratios),
        survivals=tuple(survs),
        converged=converged,
        survival_vanishing=vanishing,
    )


# ---------------------------------------------------------------------------
# JSON serialisation: {kind, alpha, slowly_varying, support_min}


def model_to_json(model: TailModel) -> dict:
    if isinstance(model, Pareto):
        kind = "pareto"
        sv = None
    elif isinstance(model, RegVarying):
        kind = "reg_varying"
        sv = model.slowly_varying.to_json()
    elif isinstance(model, DensityFamily):
        kind = f"family_{model.family}"
        sv = None
    else:
        raise ValueError(f"unknown model type {type(model)!r}")
    return {
        "kind": kind,
        "alpha": model.alpha,
        "slowly_varying": sv,
        "support_min": model.support_min,
    }


def model_from_json(d: dict) -> TailModel:
    kind = d["kind"]
    alpha = float(d["alpha"])
    if kind == "pareto":
        return Pareto(alpha)
    if kind == "reg_varying":
        sv = d.get("slowly_varying")
        sv = SlowlyVarying.from_json(sv) if sv else SlowlyVarying()
        return RegVarying(alpha, sv, float(d.get("support_min", 1.0)))
    if kind.startswith("family_") and kind[-1] in _FAMILIES and len(kind) == 8:
        return DensityFamily(kind[-1], alpha)
    raise ValueError(f"unknown model kind {kind!r}")
