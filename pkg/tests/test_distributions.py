import json
import math

import numpy as np
import pytest
from scipy import integrate

from truncmean import (
    DensityFamily,
    Pareto,
    RegVarying,
    SlowlyVarying,
    model_from_json,
    model_to_json,
    rng_substream,
    tail_sum,
    verify_conditions,
)

ALL_FAMILIES = "fghpq"


class FixedUniform:
    """Stub generator feeding prescribed uniforms to the sampler."""

    def __init__(self, values):
        self.values = list(values)

    def random(self, n):
        out, self.values = self.values[:n], self.values[n:]
        return np.asarray(out)


# ---------------------------------------------------------------------------
# Pareto


def test_pareto_cdf_closed_form():
    m = Pareto(0.5)
    assert m.cdf(1.0) == 0.0
    assert m.cdf(4.0) == pytest.approx(0.5, abs=1e-15)
    assert m.cdf(0.2) == 0.0
    assert m.cdf(np.inf) == 1.0


def test_pareto_parameter_validation():
    with pytest.raises(ValueError):
        Pareto(0.0)
    with pytest.raises(ValueError):
        Pareto(2.0)
    with pytest.raises(ValueError):
        Pareto(0.5, support_min=2.0)


def test_pareto_sampler_fixed_uniforms():
    m = Pareto(0.5)
    draws = m.sample(FixedUniform([0.0, 0.75]), 2)
    assert draws[0] == pytest.approx(1.0, abs=0)
    assert draws[1] == pytest.approx(16.0, rel=1e-15)
    with pytest.raises(ValueError):
        m.sample(FixedUniform([]), -1)


def test_pareto_sampler_ks():
    m = Pareto(0.5)
    x = m.sample(rng_substream(11, 0), 10**5)
    assert np.all(x >= 1.0)
    xs = np.sort(x)
    F = m.cdf(xs)
    i = np.arange(1, xs.size + 1)
    ks = max(np.max(np.abs(F - i / xs.size)), np.max(np.abs(F - (i - 1) / xs.size)))
    assert ks <= 0.01


def test_pareto_roundtrip_exact():
    m = Pareto(0.5)
    u = np.linspace(0.001, 0.999, 57)
    x = m.inverse_survival(1.0 - u)
    assert np.max(np.abs(m.cdf(x) - u)) < 1e-9


# ---------------------------------------------------------------------------
# density families


def test_family_normalisation_all():
    for fam in ALL_FAMILIES:
        for alpha in (0.3, 0.8, 1.5):
            m = DensityFamily(fam, alpha)
            total, _ = integrate.quad(lambda x: m.density(x), 1.0, np.inf, limit=400)
            assert total == pytest.approx(1.0, abs=1e-8), (fam, alpha)


def test_family_f_cdf_matches_quadrature_oracle():
    m = DensityFamily("f", 0.5)
    oracle, err = integrate.quad(lambda x: m.density(x), 1.0, 10.0, epsabs=1e-12, limit=400)
    assert err < 1e-10
    assert m.cdf(10.0) == pytest.approx(oracle, abs=1e-8)


def test_family_f_survival_closed_form_vs_quadrature():
    m = DensityFamily("f", 0.7)
    for x in (2.0, 10.0, 1e4):
        direct, _ = integrate.quad(lambda y: m.density(y), x, np.inf, limit=400)
        assert float(m.survival(x)) == pytest.approx(direct, rel=1e-9)


def test_family_q_is_exact_pareto():
    m = DensityFamily("q", 0.5)
    p = Pareto(0.5)
    for x in (1.5, 7.0, 300.0):
        assert float(m.survival(x)) == pytest.approx(float(p.survival(x)), rel=1e-10)


def test_family_density_nonnegative():
    xs = np.geomspace(1.0, 1e6, 200)
    for fam in ALL_FAMILIES:
        m = DensityFamily(fam, 0.7)
        assert np.all(m.density(xs) >= 0.0)


def test_family_roundtrip_numeric():
    for fam in ("g", "h"):
        m = DensityFamily(fam, 0.6)
        s = np.array([0.9, 0.5, 0.1, 1e-3])
        x = m.inverse_survival(s)
        back = np.array([float(m.survival(v)) for v in x])
        assert np.max(np.abs(back - s)) < 1e-6


def test_family_sampler_ks():
    m = DensityFamily("g", 0.5)
    x = m.sample(rng_substream(12, 0), 2000)
    xs = np.sort(x)
    F = 1.0 - np.array([float(m.survival(v)) for v in xs])
    i = np.arange(1, xs.size + 1)
    ks = max(np.max(np.abs(F - i / xs.size)), np.max(np.abs(F - (i - 1) / xs.size)))
    assert ks <= 0.04


# ---------------------------------------------------------------------------
# regularly varying


def test_regvarying_constant_matches_pareto():
    m = RegVarying(0.5, SlowlyVarying("constant", theta=1.0))
    p = Pareto(0.5)
    xs = np.geomspace(1.0, 1e8, 40)
    assert np.allclose(m.cdf(xs), p.cdf(xs), atol=1e-14)


def test_regvarying_atom_at_support_min():
    m = RegVarying(0.5, SlowlyVarying("constant", theta=0.5))
    assert m.cdf(1.0) == pytest.approx(0.5)
    draws = m.inverse_survival(np.array([0.9, 0.6, 0.501]))
    assert np.all(draws == 1.0)
    assert m.inverse_survival(0.25) == pytest.approx(4.0, rel=1e-9)


def test_regvarying_rejects_non_monotone_tail():
    with pytest.raises(ValueError):
        RegVarying(0.3, SlowlyVarying("log1p_pow", theta=1.0, tau=1.0), support_min=1.0)


def test_regvarying_log_factor_valid_far_out():
    m = RegVarying(0.5, SlowlyVarying("log1p_pow", theta=1.0, tau=1.0), support_min=5.0)
    xs = np.geomspace(5.0, 1e12, 60)
    s = m.survival(xs)
    assert np.all(np.diff(s) <= 1e-15)
    u = np.array([0.3, 0.05, 1e-4])
    x = m.inverse_survival(u)
    assert np.max(np.abs(m.survival(x) - u)) < 1e-6


def test_regvarying_truncated_moment_matches_closed_forms():
    # theta = 1 reproduces the unit-Pareto moment exactly
    m = RegVarying(0.5, SlowlyVarying("constant", theta=1.0))
    p = Pareto(0.5)
    for r, b in ((1, 10.0), (2, 100.0)):
        assert m.truncated_moment(r, b) == pytest.approx(p.truncated_moment(r, b), rel=1e-9)
    # theta = 0.5 puts an atom of mass 1/2 at the endpoint:
    # E[X 1{X<=b}] = 0.5 * 1 + int_1^b x * 0.25 x^-1.5 dx = 0.5 sqrt(b)
    atom = RegVarying(0.5, SlowlyVarying("constant", theta=0.5))
    for b in (4.0, 25.0):
        assert atom.truncated_moment(1, b) == pytest.approx(0.5 * math.sqrt(b), rel=1e-9)
    assert atom.truncated_moment(1, 1.0) == pytest.approx(0.5, rel=1e-12)


def test_loglog_form_needs_large_support():
    with pytest.raises(ValueError):
        RegVarying(0.5, SlowlyVarying("loglog"), support_min=2.0)
    m = RegVarying(0.5, SlowlyVarying("loglog"), support_min=25.0)
    assert 0.0 < float(m.survival(30.0)) < 1.0


def test_slowly_varying_ratio_tends_to_one():
    # logarithmic factors converge only logarithmically: L(tx)/L(t) - 1 is
    # about tau*log(x)/log(t), so the 1% band needs t far beyond 1e8
    for form, tau in (("log1p_pow", 1.0), ("log1p_pow", 2.5), ("loglog", 1.0),
                      ("reciprocal_log1p_pow", 1.0), ("reciprocal_loglog", 1.0)):
        L = SlowlyVarying(form, theta=2.0, tau=tau)
        for x in (2.0, 10.0):
            gap_mid = abs(float(L.value(1e8 * x) / L.value(1e8)) - 1.0)
            gap_far = abs(float(L.value(1e280 * x) / L.value(1e280)) - 1.0)
            assert gap_far < gap_mid, (form, x)
            assert gap_far <= 0.01, (form, x, gap_far)


# ---------------------------------------------------------------------------
# cdf shape properties (random grids)


@pytest.mark.parametrize("model", [
    Pareto(0.5),
    Pareto(1.3),
    RegVarying(0.5, SlowlyVarying("log1p_pow"), support_min=5.0),
    DensityFamily("f", 0.5),
    DensityFamily("h", 1.2),
])
def test_cdf_monotone_and_bounded(model):
    rng = rng_substream(13, 0)
    xs = np.sort(model.support_min * np.exp(rng.random(60) * 20.0))
    F = np.array([float(np.asarray(model.cdf(x))) for x in xs])
    assert np.all((0.0 <= F) & (F <= 1.0))
    assert np.all(np.diff(F) >= -1e-12)
    assert float(np.asarray(model.cdf(model.support_min * 0.5))) == 0.0


# ---------------------------------------------------------------------------
# tail sums and the moment-growth conditions


def test_tail_sum_values():
    models = [Pareto(0.5)] * 100
    assert tail_sum(models, 10.0) == pytest.approx(100 * 10**-0.5, rel=1e-12)
    models = [Pareto(0.5)] * 10
    assert tail_sum(models, 100.0) == pytest.approx(1.0, rel=1e-12)
    assert tail_sum(models, 1e300) == pytest.approx(0.0, abs=1e-140)


def test_verify_conditions_pareto_exact_ratios():
    rep = verify_conditions(Pareto(0.5), 1, [100.0, 1e6])
    assert rep.ratios[0] == pytest.approx(0.9, rel=1e-10)
    assert rep.ratios[1] == pytest.approx(0.999, rel=1e-10)
    assert rep.converged
    assert rep.survival_vanishing
    assert rep.d_r == pytest.approx(1.0)


def test_verify_conditions_family_q_monotone():
    rep = verify_conditions(DensityFamily("q", 0.5), 2, np.geomspace(1e2, 1e6, 5))
    gaps = [abs(r - 1.0) for r in rep.ratios]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert rep.converged


def test_verify_conditions_rejects_bad_r():
    with pytest.raises(ValueError):
        verify_conditions(Pareto(0.5), 0, [10.0, 100.0])
    with pytest.raises(ValueError):
        verify_conditions(Pareto(1.2), 1, [10.0, 100.0])


def test_verify_conditions_spot_family():
    rep = verify_conditions(DensityFamily("p", 0.8), 2, np.geomspace(1e2, 1e5, 4))
    assert rep.converged


# ---------------------------------------------------------------------------
# serialisation


@pytest.mark.parametrize("model", [
    Pareto(0.7),
    RegVarying(1.1, SlowlyVarying("log1p_pow", theta=0.5, tau=2.0), support_min=3.0),
    DensityFamily("p", 0.4),
])
def test_model_json_roundtrip(model):
    blob = json.dumps(model_to_json(model))
    back = model_from_json(json.loads(blob))
    assert type(back) is type(model)
    assert back.alpha == model.alpha
    assert back.support_min == model.support_min


def test_model_json_rejects_unknown():
    with pytest.raises(ValueError):
        model_from_json({"kind": "weibull", "alpha": 0.5})
