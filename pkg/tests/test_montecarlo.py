import math

import numpy as np
import pytest
from scipy import special, stats

from truncmean import (
    BudgetError,
    Pareto,
    SimPlan,
    TruncationRule,
    convergence_diagnostics,
    critical_sequence,
    ks_distance,
    ks_two_sample,
    rng_substream,
    simulate_decomposition,
    simulate_rejection_rates,
)
from truncmean.montecarlo import pareto_draws

LOG_N = TruncationRule("log_n")
SQRT = TruncationRule("pow", p=0.5)


# ---------------------------------------------------------------------------
# substreams


def test_substream_deterministic():
    a = rng_substream(7, 3).random(100)
    b = rng_substream(7, 3).random(100)
    assert np.array_equal(a, b)


def test_substream_separation():
    a = rng_substream(7, 3).random(100)
    b = rng_substream(7, 4).random(100)
    c = rng_substream(8, 3).random(100)
    d = rng_substream(7, 3, stream=1).random(100)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_substream_validation():
    with pytest.raises(ValueError):
        rng_substream(-1, 0)


def test_substream_equidistribution_smoke():
    u = rng_substream(9, 0).random(10**4)
    assert abs(u.mean() - 0.5) < 4.0 * (1.0 / math.sqrt(12.0)) / 100.0
    assert ks_distance(u, lambda x: np.clip(x, 0.0, 1.0)) < 0.02


# ---------------------------------------------------------------------------
# rejection-rate simulation


def _tiny_plan(**kw):
    base = dict(alpha0=0.5, rules=(LOG_N,), n_list=(200,), reps=50, seed=123)
    base.update(kw)
    return SimPlan(**base)


def test_single_rep_rate_is_zero_or_one():
    res = simulate_rejection_rates(_tiny_plan(reps=1))
    row = res.rows[0]
    assert row.r_o in (0.0, 1.0)
    assert row.r in (0.0, 1.0)
    assert row.r_tilde in (0.0, 1.0)


def test_budget_guard():
    plan = _tiny_plan(n_list=(10**5,), reps=10**5, rules=(LOG_N, SQRT))
    with pytest.raises(BudgetError):
        simulate_rejection_rates(plan)
    # explicit override or a raised budget lets it through validation
    small = _tiny_plan(draw_budget=10.0, allow_large=True)
    assert simulate_rejection_rates(small).rows


def test_plan_validation():
    with pytest.raises(ValueError):
        _tiny_plan(alpha0=0.3, modes=frozenset({"stable_region"}))
    with pytest.raises(ValueError):
        _tiny_plan(reps=0)
    with pytest.raises(ValueError):
        _tiny_plan(modes=frozenset({"bootstrap"}))
    plan = _tiny_plan(alpha0=0.3, modes=frozenset({"known_var", "estimated_var"}))
    res = simulate_rejection_rates(plan)
    assert res.rows[0].r_tilde is None


def test_workers_do_not_change_counts():
    plan1 = _tiny_plan(n_list=(500,), reps=400)
    plan8 = _tiny_plan(n_list=(500,), reps=400, workers=8)
    r1 = simulate_rejection_rates(plan1).rows[0]
    r8 = simulate_rejection_rates(plan8).rows[0]
    assert (r1.count_o, r1.count, r1.count_tilde) == (r8.count_o, r8.count, r8.count_tilde)


def test_result_is_seed_reproducible():
    a = simulate_rejection_rates(_tiny_plan()).rows[0]
    b = simulate_rejection_rates(_tiny_plan()).rows[0]
    c = simulate_rejection_rates(_tiny_plan(seed=124)).rows[0]
    assert (a.count_o, a.count, a.count_tilde) == (b.count_o, b.count, b.count_tilde)
    assert (a.count_o, a.count, a.count_tilde) != (c.count_o, c.count, c.count_tilde)


def test_csv_and_json_outputs():
    res = simulate_rejection_rates(_tiny_plan())
    csv = res.to_csv()
    lines = csv.strip().split("\n")
    assert lines[0].startswith("# truncmean rejection rates, seed = 123")
    assert lines[2] == res.CSV_HEADER
    assert len(lines) == 4
    blob = res.to_json()
    assert blob["seed"] == 123
    assert blob["rows"][0]["N"] == 50
    # CSV cells are the 6-significant-digit rendering of the JSON values
    row = blob["rows"][0]
    cells = lines[3].split(",")
    assert cells[3] == f"{row['r_o']:.6g}"
    assert cells[6] == f"{row['se_o']:.6g}"


def test_plan_json_roundtrip():
    plan = _tiny_plan(rules=(LOG_N, SQRT), n_list=(100, 200), workers=2)
    again = SimPlan.from_json(plan.to_json())
    assert again == plan


# ---------------------------------------------------------------------------
# decomposition at the critical threshold


def test_decomposition_additivity_and_exceedances():
    out = simulate_decomposition(0.5, 1000, 2000, seed=31)
    assert out.additivity_max_err <= 1e-9
    assert out.c_n == pytest.approx(10**6, rel=1e-12)
    assert out.mu_n == 0.0
    # expected exceedance count is exactly n * (1 - F(c_n)) = 1
    mean = out.exceed_counts.mean()
    se = out.exceed_counts.std() / math.sqrt(out.reps)
    assert abs(mean - 1.0) <= 3.0 * se
    assert np.all(out.V >= 0.0)


def test_decomposition_centres_with_finite_mean():
    out = simulate_decomposition(1.5, 500, 200, seed=32)
    model = Pareto(1.5)
    assert out.mu_n == pytest.approx(model.truncated_moment(1, out.c_n), rel=1e-9)
    assert out.additivity_max_err <= 1e-9


# ---------------------------------------------------------------------------
# diagnostics


def test_convergence_diagnostics_smoke():
    rep = convergence_diagnostics(0.5, TruncationRule("pow", p=1.0), [500, 2000], 400, seed=33)
    assert len(rep.rows) == 2
    for row in rep.rows:
        assert 0.0 < row.ks_normal < 1.0
        assert row.T.shape == (400,)
    assert rep.rule == "pow:1"


def test_convergence_diagnostics_validation():
    with pytest.raises(ValueError):
        convergence_diagnostics(0.5, LOG_N, [2000, 500], 100, seed=1)


def test_critical_rule_statistic_distribution_is_stable_in_n():
    # at the critical threshold the known-variance statistic settles into a
    # fixed non-normal law: empirical CDFs at different n stay close
    rule = TruncationRule("pow", p=2.0)
    rep = convergence_diagnostics(0.5, rule, [10**4, 10**5], 10**4, seed=34, workers=4)
    d = ks_two_sample(rep.rows[0].To, rep.rows[1].To)
    assert d <= 0.02
    # and it is visibly non-normal at both sizes
    assert ks_distance(rep.rows[0].To, special.ndtr) > 0.05


# ---------------------------------------------------------------------------
# KS helpers vs scipy oracles


def test_ks_distance_matches_scipy():
    x = rng_substream(35, 0).normal(size=500)
    mine = ks_distance(x, special.ndtr)
    ref = stats.kstest(x, "norm").statistic
    assert mine == pytest.approx(ref, rel=1e-12)


def test_ks_two_sample_matches_scipy():
    g = rng_substream(36, 0)
    a, b = g.normal(size=300), g.normal(size=400) + 0.3
    mine = ks_two_sample(a, b)
    ref = stats.ks_2samp(a, b).statistic
    assert mine == pytest.approx(ref, rel=1e-12)


def test_pareto_draws_match_inverse_cdf():
    g1 = rng_substream(37, 0)
    g2 = rng_substream(37, 0)
    x = pareto_draws(0.5, g1, 1000)
    u = g2.random(1000)
    assert np.allclose(x, (1.0 - u) ** -2.0, rtol=1e-13)
    x8 = pareto_draws(0.8, rng_substream(37, 1), 1000)
    assert np.all(x8 >= 1.0)
