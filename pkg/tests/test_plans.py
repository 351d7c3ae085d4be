import itertools
import math

import numpy as np
import pytest
from scipy import stats

from mstage import boundaries as bd
from mstage.models import BoundaryKind, ModelSpec
from mstage.plans import (
    HypothesesSpec,
    InsufficientDataError,
    TestShape,
    build_plan,
    decide,
    reduce_shape,
    rejection_bound,
    run_plan,
    stage_decision,
)

EXACT = BoundaryKind.EXACT


# ----------------------------------------------------------- reductions


def test_one_sided_reduction():
    red = reduce_shape(TestShape.one_sided(0.4, 0.6, 0.05, 0.05))
    assert red.hyp.m == 2
    assert (red.hyp.indiff_lo, red.hyp.indiff_hi) == ((0.4,), (0.6,))
    assert red.risks(0.5) == [(0.025, 0.025)]
    assert red.risks(100.0) == [(1.0, 1.0)]


def test_two_sided_reduction_cuts():
    red = reduce_shape(TestShape.two_sided(0.2, 0.5, 0.9, 0.1, 0.05))
    assert red.hyp.cuts == pytest.approx((0.35, 0.7))
    assert red.hyp.indiff_lo == (0.2, 0.5)
    assert red.hyp.indiff_hi == (0.5, 0.9)


def test_multiple_simple_reduction():
    red = reduce_shape(TestShape.multiple_simple([0.0, 1.0, 3.0, 4.0], [0.1, 0.2, 0.3, 0.4]))
    assert red.hyp.cuts == (0.5, 2.0, 3.5)
    assert red.hyp.indiff_lo == (0.0, 1.0, 3.0)
    assert red.hyp.indiff_hi == (1.0, 3.0, 4.0)
    assert red.risks(1.0) == [(0.1, 0.2), (0.2, 0.3), (0.3, 0.4)]


def test_interval_reduction():
    red = reduce_shape(TestShape.interval(0.1, 0.2, 0.3, 0.6, 0.7, 0.8, 0.05, 0.1))
    assert red.hyp.cuts == (0.2, 0.7)
    assert red.risks(1.0) == [(0.1, 0.05), (0.05, 0.1)]


@pytest.mark.parametrize(
    "factory",
    [
        lambda: TestShape.one_sided(0.6, 0.4, 0.05, 0.05),
        lambda: TestShape.two_sided(0.2, 0.1, 0.9, 0.05, 0.05),
        lambda: TestShape.multiple_simple([1.0, 1.0], [0.1, 0.1]),
        lambda: TestShape.one_sided(0.4, 0.6, 0.0, 0.05),
        lambda: TestShape.interval(0.1, 0.2, 0.3, 0.25, 0.7, 0.8, 0.05, 0.1),
    ],
)
def test_shape_ordering_errors(factory):
    with pytest.raises(ValueError):
        reduce_shape(factory())


def test_hypotheses_spec_validation():
    with pytest.raises(ValueError):
        HypothesesSpec((0.5,), (0.5,), (0.6,), (0.1, 0.1))
    with pytest.raises(ValueError):
        HypothesesSpec((0.3, 0.5), (0.2, 0.4), (0.45, 0.6), (0.1, 0.1, 0.1))


# --------------------------------------------------------------- building


def test_single_stage_plan_is_terminal():
    plan = build_plan(ModelSpec.normal_mean(1.0), TestShape.one_sided(0.0, 0.5, 0.05, 0.05), zeta=1.0, stages=1)
    assert plan.sizes == (44,)
    assert plan.lower[0] == plan.upper[0]
    for est in np.linspace(-3, 3, 61):
        assert stage_decision(plan, 1, float(est)) in (1, 2)


def test_thresholds_reproduce_boundary_ops():
    m = ModelSpec.bernoulli()
    plan = build_plan(m, TestShape.one_sided(0.4, 0.6, 0.05, 0.05), zeta=0.5, stages=3)
    assert plan.s == 3
    for ell, n in enumerate(plan.sizes):
        lo = bd.boundary_lower(m, EXACT, n, 0.6, 0.025)
        up = bd.boundary_upper(m, EXACT, n, 0.4, 0.025)
        assert (plan.lower[ell][0], plan.upper[ell][0]) == tuple(bd.merge_boundaries(lo, up))
    assert plan.sizes[-1] == plan.nbar == bd.scan_terminal_size(m, EXACT, [bd.Constraint(0.4, 0.6, 0.025, 0.025)])


def test_variance_ratio_terminal_feasibility():
    plan = build_plan(ModelSpec.variance_ratio(True), TestShape.one_sided(1.0, 2.0, 0.05, 0.05), zeta=1.0)
    n = plan.sizes[-1]
    assert 2.0 * stats.f.ppf(0.05, n, n) >= 1.0 * stats.f.ppf(0.95, n, n)
    assert 2.0 * stats.f.ppf(0.05, n - 1, n - 1) < 1.0 * stats.f.ppf(0.95, n - 1, n - 1)


_PLANS = [
    (ModelSpec.bernoulli(), TestShape.two_sided(0.2, 0.4, 0.6, 0.05, 0.05), BoundaryKind.EXACT),
    (ModelSpec.poisson(), TestShape.multiple_simple([1.0, 2.0, 3.0, 4.0], [0.05] * 4), BoundaryKind.CHERNOFF),
    (ModelSpec.finite_population(300), TestShape.one_sided(0.1, 0.2, 0.05, 0.05), BoundaryKind.QUANTILE),
    (ModelSpec.normal_mean(2.0), TestShape.interval(-1, -0.5, 0, 1, 1.5, 2, 0.05, 0.05), BoundaryKind.EXACT),
    (ModelSpec.exponential(), TestShape.triple(1.0, 1.5, 2.0, [0.05, 0.05, 0.05]), BoundaryKind.CHERNOFF),
    (ModelSpec.gamma_scale(2.0), TestShape.one_sided(1.0, 1.5, 0.05, 0.1), BoundaryKind.EXACT),
    (ModelSpec.normal_std(0.0), TestShape.one_sided(1.0, 1.5, 0.05, 0.05), BoundaryKind.EXACT),
    (ModelSpec.normal_std(None), TestShape.one_sided(1.0, 1.5, 0.05, 0.05), BoundaryKind.QUANTILE),
    (ModelSpec.life_test(), TestShape.one_sided(1.0, 2.0, 0.05, 0.05), BoundaryKind.EXACT),
    (ModelSpec.normal_mean_over_std(), TestShape.two_sided(-0.5, 0.0, 0.5, 0.05, 0.05), BoundaryKind.EXACT),
    (ModelSpec.variance_ratio(False), TestShape.one_sided(1.0, 2.5, 0.05, 0.05), BoundaryKind.EXACT),
]


@pytest.fixture(scope="module", params=range(len(_PLANS)), ids=lambda i: _PLANS[i][0].family.value)
def built(request):
    model, shape, kind = _PLANS[request.param]
    return build_plan(model, shape, kind, zeta=1.0)


def test_plan_invariants(built):
    f, g = built.lower_array, built.upper_array
    assert np.all(np.diff(built.sizes) > 0)
    assert np.all(f <= g)
    assert np.all(np.diff(f, axis=1) >= 0) and np.all(np.diff(g, axis=1) >= 0)
    assert np.array_equal(f[-1], g[-1])
    assert built.sizes[-1] >= built.nbar


def test_terminal_stage_always_decides(built):
    cuts = np.array(built.lower[-1])
    probes = np.concatenate([cuts, np.nextafter(cuts, np.inf), np.linspace(-10, 10, 401)])
    assert np.all(decide(built.lower[-1], built.upper[-1], probes) > 0)


def test_acceptance_bands_ordered(built):
    probes = np.sort(np.concatenate([np.linspace(-5, 10, 3001)] + [np.ravel(built.lower_array), np.ravel(built.upper_array)]))
    probes = probes[np.isfinite(probes)]
    for ell in range(built.s):
        d = decide(built.lower[ell], built.upper[ell], probes)
        acc = d[d > 0]
        assert np.all(np.diff(acc) >= 0)


def test_std_plans_use_gamma_friendly_parity():
    even = build_plan(ModelSpec.normal_std(0.0), TestShape.one_sided(1.0, 1.5, 0.05, 0.05), zeta=1.0)
    odd = build_plan(ModelSpec.normal_std(None), TestShape.one_sided(1.0, 1.5, 0.05, 0.05), zeta=1.0)
    assert all(n % 2 == 0 for n in even.sizes)
    assert all(n % 2 == 1 for n in odd.sizes)


def test_build_plan_argument_errors():
    shape = TestShape.one_sided(0.4, 0.6, 0.05, 0.05)
    with pytest.raises(ValueError):
        build_plan(ModelSpec.bernoulli(), shape)
    with pytest.raises(ValueError):
        build_plan(ModelSpec.bernoulli(), shape, zeta=1.0, risks=[(0.05, 0.05)])
    with pytest.raises(ValueError):
        build_plan(ModelSpec.bernoulli(), shape, zeta=1.0, sizes=[5, 10])
    with pytest.raises(bd.NonTerminationError):
        build_plan(ModelSpec.finite_population(10), TestShape.one_sided(0.4, 0.5, 0.05, 0.05), zeta=0.01)


def test_explicit_larger_terminal_size_warns():
    plan = build_plan(ModelSpec.normal_mean(1.0), TestShape.one_sided(0.0, 0.5, 0.05, 0.05), zeta=1.0, sizes=[20, 50])
    assert plan.warnings and "exceeds" in plan.warnings[0]


# --------------------------------------------------------------- rejection bound


def test_rejection_bound():
    plan = build_plan(ModelSpec.exponential(), TestShape.multiple_simple([1.0, 1.5, 2.0], [0.02, 0.04, 0.06]), zeta=0.5)
    a = [r[0] for r in plan.risks]
    b = [r[1] for r in plan.risks]
    assert rejection_bound(plan, 0) == pytest.approx(plan.s * max(a))
    assert rejection_bound(plan, 1) == pytest.approx(plan.s * (a[1] + b[0]))
    assert rejection_bound(plan, 2) == pytest.approx(plan.s * max(b))
    with pytest.raises(ValueError):
        rejection_bound(plan, 3)


# --------------------------------------------------------------- decisions


@pytest.mark.parametrize("est, expected", [(0.5, 0), (0.2, 1), (0.8, 2), (0.3, 1), (0.7, 0), (0.7000001, 2)])
def test_decide_two_hypotheses(est, expected):
    assert int(decide([0.3], [0.7], est)) == expected


def test_decide_middle_band():
    assert int(decide([0.2, 0.55], [0.45, 0.8], 0.5)) == 2
    assert int(decide([0.2, 0.55], [0.45, 0.8], 0.45)) == 0
    assert int(decide([0.2, 0.55], [0.45, 0.8], 0.9)) == 3


def test_stage_decision_range():
    plan = build_plan(ModelSpec.bernoulli(), TestShape.one_sided(0.4, 0.6, 0.05, 0.05), zeta=1.0, stages=2)
    with pytest.raises(ValueError):
        stage_decision(plan, 0, 0.5)
    with pytest.raises(ValueError):
        stage_decision(plan, plan.s + 1, 0.5)


@pytest.fixture(scope="module")
def tiny_bernoulli():
    plan = build_plan(ModelSpec.bernoulli(), TestShape.one_sided(0.3, 0.7, 0.2, 0.2), zeta=1.0, sizes=None, stages=2)
    assert plan.sizes[-1] <= 14
    return plan


def test_run_plan_matches_hand_trace(tiny_bernoulli):
    plan = tiny_bernoulli
    N = plan.sizes[-1]
    for bits in itertools.product((0, 1), repeat=N):
        out = run_plan(plan, bits)
        expected = None
        for ell, n in enumerate(plan.sizes):
            est = sum(bits[:n]) / n
            f, g = plan.lower[ell][0], plan.upper[ell][0]
            if est <= f:
                expected = (0, ell + 1, n)
            elif est > g:
                expected = (1, ell + 1, n)
            if expected:
                break
        assert (out.accepted, out.stage, out.samples_used) == expected


def test_run_plan_constant_stream():
    plan = build_plan(ModelSpec.exponential(), TestShape.multiple_simple([1.0, 2.0, 3.0], [0.05] * 3), zeta=1.0)
    out = run_plan(plan, [100.0] * plan.sizes[-1])
    assert (out.accepted, out.stage) == (2, 1)


def test_run_plan_errors(tiny_bernoulli):
    with pytest.raises(InsufficientDataError):
        run_plan(tiny_bernoulli, [0, 1][: tiny_bernoulli.sizes[0] - 1] if tiny_bernoulli.sizes[0] > 1 else [])
    with pytest.raises(ValueError):
        run_plan(tiny_bernoulli, [0.5] * tiny_bernoulli.sizes[-1])


def test_run_plan_is_deterministic():
    plan = build_plan(ModelSpec.poisson(), TestShape.one_sided(1.0, 1.5, 0.05, 0.05), zeta=1.0)
    data = np.random.default_rng(3).poisson(1.2, plan.sizes[-1])
    assert run_plan(plan, data) == run_plan(plan, data)


def test_t_plan_decisions_agree_on_t_scale():
    plan = build_plan(ModelSpec.normal_mean_over_std(), TestShape.one_sided(-0.3, 0.3, 0.05, 0.05), zeta=1.0)
    rng = np.random.default_rng(11)
    for _ in range(200):
        x = rng.normal(rng.uniform(-0.5, 0.5), 1.0, plan.sizes[-1])
        out = run_plan(plan, x)
        for ell, n in enumerate(plan.sizes):
            t = stats.ttest_1samp(x[:n], 0.0).statistic
            r = math.sqrt(n - 1)
            f, g = plan.lower[ell][0] * r, plan.upper[ell][0] * r
            d = 1 if t <= f * (1 + 1e-12) else 2 if t > g * (1 - 1e-12) else 0
            if d:
                assert (out.accepted, out.stage) == (d - 1, ell + 1)
                break


def test_variance_ratio_needs_second_stream():
    plan = build_plan(ModelSpec.variance_ratio(True), TestShape.one_sided(1.0, 2.0, 0.05, 0.05), zeta=1.0)
    with pytest.raises(ValueError):
        run_plan(plan, np.ones(plan.sizes[-1]))
    rng = np.random.default_rng(0)
    out = run_plan(plan, rng.normal(0, 3, plan.sizes[-1]), rng.normal(0, 1, plan.sizes_y[-1]))
    assert out.accepted == 1


def test_life_test_run():
    plan = build_plan(ModelSpec.life_test(), TestShape.one_sided(1.0, 2.0, 0.05, 0.05), zeta=1.0)
    # No failures at all is the strongest evidence for the low rate.
    assert run_plan(plan, []).accepted == 0
    dense = np.linspace(0.0, plan.sizes[-1], int(10 * plan.sizes[-1]))
    assert run_plan(plan, dense).accepted == 1


# ------------------------------------------------------- reduction soundness


@pytest.mark.parametrize("shape", [TestShape.two_sided(0.2, 0.5, 0.8, 0.2, 0.2),
                                   TestShape.interval(0.1, 0.2, 0.3, 0.6, 0.7, 0.8, 0.2, 0.2)])
def test_accept_middle_equals_both_outer_rejections(shape):
    """Accepting the middle hypothesis is the same event as rejecting both outer composite nulls."""
    plan = build_plan(ModelSpec.bernoulli(), shape, zeta=1.0, stages=3)
    for ell, n in enumerate(plan.sizes):
        f, g = plan.lower[ell], plan.upper[ell]
        for k in range(n + 1):
            est = k / n
            d = int(decide(f, g, est))
            # Left null rejected: est > g_1.  Right null rejected: est <= f_2.
            assert (d == 2) == (est > g[0] and est <= f[1])
