import math

import mpmath
import numpy as np
import pytest
from scipy import integrate, stats

from mstage.models import ModelSpec
from mstage.oc import (
    CrossingMode,
    ExactUnavailableError,
    StageCapError,
    band_crossing_probability,
    gamma_sum_survival,
    has_exact_engine,
    oc_exact,
)
from mstage.plans import TestShape, build_plan, rejection_bound

from oracles import erlang_survival_mp, mc_band_crossing


# -------------------------------------------------------- survival kernel


def test_survival_examples():
    assert gamma_sum_survival([2], [1.0]) == pytest.approx(2 * math.exp(-1), abs=1e-14)
    assert gamma_sum_survival([1, 2], [0.5, 1.0]) == pytest.approx(1.5 * math.exp(-1), abs=1e-14)


@pytest.mark.parametrize("k", range(1, 11))
def test_erlang_poisson_identity(k):
    for z in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
        assert gamma_sum_survival([k], [z]) == pytest.approx(erlang_survival_mp(k, z), abs=1e-12)


def test_two_constraint_survival_against_quadrature():
    # Pr{Z1 + Z2 > 1.2, Z1 + ... + Z5 > 4.0}; condition on S2 = s with Gamma(2) density.
    def integrand(s):
        return s * math.exp(-s) * erlang_survival_mp(3, max(4.0 - s, 0.0)) if 4.0 - s > 0 else s * math.exp(-s)

    ref = integrate.quad(integrand, 1.2, 4.0, epsabs=1e-14)[0] + integrate.quad(lambda s: s * math.exp(-s), 4.0, np.inf)[0]
    assert gamma_sum_survival([2, 5], [1.2, 4.0]) == pytest.approx(ref, abs=1e-11)


def test_survival_large_counts_stay_bounded():
    v = gamma_sum_survival([200, 400, 800], [150.0, 390.0, 820.0])
    with mpmath.workdps(30):
        single = float(mpmath.gammainc(800, 820, mpmath.inf, regularized=True))
    assert 0.0 <= v <= single + 1e-12


@pytest.mark.parametrize("ks, zs", [([2, 1], [0.5, 1.0]), ([1, 2], [1.0, 0.5]), ([0], [1.0]), ([1], [0.0])])
def test_survival_input_errors(ks, zs):
    with pytest.raises(ValueError):
        gamma_sum_survival(ks, zs)


# ------------------------------------------------------ band crossings


def test_single_stage_band_is_erlang_difference():
    a, b, k = 1.5, 4.0, 3
    got = band_crossing_probability([a], [b], [k])
    assert got == pytest.approx(erlang_survival_mp(k, a) - erlang_survival_mp(k, b), abs=1e-13)


@pytest.mark.parametrize(
    "a, b, ks, mode",
    [
        ([0.5, 2.0], [2.5, 5.0], [2, 5], CrossingMode.ALL_INSIDE),
        ([0.5, 2.0], [2.5, 5.0], [2, 5], CrossingMode.INSIDE_THEN_ABOVE),
        ([0.5, 2.0], [2.5, 5.0], [2, 5], CrossingMode.INSIDE_THEN_BELOW),
        ([1.0, 1.5, 4.0], [3.0, 6.0, 9.0], [2, 4, 7], CrossingMode.ALL_INSIDE),
        ([2.0, 1.0], [3.0, 6.0], [3, 4], CrossingMode.ALL_INSIDE),  # non-ascending lower edges
    ],
)
def test_band_crossing_against_monte_carlo(a, b, ks, mode):
    exact = band_crossing_probability(a, b, ks, mode)
    est, se = mc_band_crossing(a, b, ks, mode.value, reps=1_000_000, seed=97)
    assert abs(exact - est) <= 3 * se


@pytest.mark.parametrize("L", [1, 2, 3])
def test_inside_then_below_decomposition(L):
    a = [0.3, 1.2, 2.5, 4.0][: L + 1]
    b = [2.0, 4.0, 6.5, 9.0][: L + 1]
    ks = [1, 3, 5, 8][: L + 1]
    inside = band_crossing_probability(a[:L], b[:L], ks[:L], CrossingMode.ALL_INSIDE)
    above = band_crossing_probability(a, b, ks, CrossingMode.INSIDE_THEN_ABOVE)
    below = band_crossing_probability(a, b, ks, CrossingMode.INSIDE_THEN_BELOW)
    assert below == pytest.approx(inside - above, abs=1e-15)


def test_stage_cap():
    n = 14
    a = [0.5 * (j + 1) for j in range(n)]
    b = [a[j] + 3.0 for j in range(n)]
    with pytest.raises(StageCapError):
        band_crossing_probability(a, b, list(range(1, n + 1)))
    # The cap is configurable.
    assert 0.0 <= band_crossing_probability(a[:4], b[:4], [1, 2, 3, 4], cap=4) <= 1.0


# ------------------------------------------------------------- plan OC


def test_single_stage_exponential_is_erlang_cdf():
    plan = build_plan(ModelSpec.exponential(), TestShape.one_sided(1.0, 1.5, 0.05, 0.05), zeta=1.0, stages=1)
    n, g = plan.sizes[0], plan.upper[0][0]
    for theta in (0.8, 1.2, 1.7):
        rep = oc_exact(plan, theta)
        assert rep.accept_prob[0] == pytest.approx(stats.gamma.cdf(n * g / theta, n), abs=1e-12)
        assert rep.trunc_error == 0.0


def _mc_plan(plan, theta, reps, seed):
    """Direct simulation of a gamma-family plan with numpy's generator."""
    rng = np.random.default_rng(seed)
    model = plan.model
    N = int(plan.sizes[-1])
    counts = np.zeros(plan.m)
    from mstage.plans import decide, stage_estimates

    left = reps
    while left:
        r = min(left, 50_000)
        if model.family.value in ("exponential", "gamma-scale"):
            k = model.shape
            x = rng.gamma(k, theta / k, size=(r, N))
        else:
            mu = model.mu if model.mu is not None else 0.0
            x = rng.normal(mu, theta, size=(r, N))
        done = np.zeros(r, dtype=bool)
        for ell, n in enumerate(plan.sizes):
            d = decide(plan.lower[ell], plan.upper[ell], stage_estimates(model, x, n))
            new = (~done) & (d > 0)
            for h in range(plan.m):
                counts[h] += np.sum(new & (d == h + 1))
            done |= new
        left -= r
    p = counts / reps
    return p, np.sqrt(np.maximum(p * (1 - p), 1e-12) / reps)


@pytest.mark.parametrize(
    "model, shape, thetas",
    [
        (ModelSpec.exponential(), TestShape.one_sided(1.0, 1.5, 0.05, 0.05), [1.0, 1.25, 1.5]),
        (ModelSpec.gamma_scale(3.0), TestShape.triple(1.0, 1.3, 1.6, [0.05] * 3), [1.1, 1.3, 1.5]),
        (ModelSpec.normal_std(0.0), TestShape.one_sided(1.0, 1.5, 0.05, 0.05), [1.0, 1.2, 1.5]),
        (ModelSpec.normal_std(None), TestShape.multiple_simple([1.0, 1.4, 1.8], [0.05] * 3), [1.2, 1.6]),
    ],
)
def test_plan_oc_against_monte_carlo(model, shape, thetas):
    plan = build_plan(model, shape, zeta=1.0, stages=3)
    assert has_exact_engine(plan)
    for theta in thetas:
        rep = oc_exact(plan, theta)
        p, se = _mc_plan(plan, theta, 200_000, seed=int(theta * 1000))
        assert np.all(np.abs(np.array(rep.accept_prob) - p) <= 3 * se + 1e-12), (theta, rep.accept_prob, p)
        assert abs(sum(rep.accept_prob) - 1.0) <= 1e-9


def test_variance_plan_rejection_bound_at_zone_endpoint():
    plan = build_plan(ModelSpec.normal_std(0.0), TestShape.one_sided(1.0, 1.5, 0.05, 0.05), zeta=1.0)
    rep = oc_exact(plan, 1.5)
    assert rep.accept_prob[0] <= rejection_bound(plan, 1)


def test_no_exact_engine_for_normal_mean_t_and_f():
    for model, shape in [
        (ModelSpec.normal_mean(1.0), TestShape.one_sided(0.0, 0.5, 0.05, 0.05)),
        (ModelSpec.normal_mean_over_std(), TestShape.one_sided(0.0, 0.5, 0.05, 0.05)),
        (ModelSpec.variance_ratio(True), TestShape.one_sided(1.0, 2.0, 0.05, 0.05)),
        (ModelSpec.gamma_scale(2.5), TestShape.one_sided(1.0, 1.5, 0.05, 0.05)),
    ]:
        plan = build_plan(model, shape, zeta=1.0)
        assert not has_exact_engine(plan)
        with pytest.raises(ExactUnavailableError):
            oc_exact(plan, shape.values[0])


def test_wrong_parity_refused():
    plan = build_plan(ModelSpec.normal_std(0.0), TestShape.one_sided(1.0, 1.5, 0.05, 0.05), zeta=1.0, sizes=[9, 20, 41])
    assert not has_exact_engine(plan)
    with pytest.raises(ExactUnavailableError):
        oc_exact(plan, 1.2)


@pytest.mark.parametrize("model, lo, hi", [(ModelSpec.exponential(), 0.2, 1.0), (ModelSpec.normal_std(None), 0.3, 1.0)])
def test_reject_null_monotone_on_null(model, lo, hi):
    plan = build_plan(model, TestShape.one_sided(1.0, 1.5, 0.05, 0.05), zeta=1.0, stages=4)
    rej = [oc_exact(plan, th).reject_prob(0) for th in np.linspace(lo, hi, 25)]
    assert all(b >= a - 1e-12 for a, b in zip(rej, rej[1:]))
