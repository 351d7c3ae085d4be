import numpy as np
import pytest

from mstage.models import ModelSpec
from mstage.oc import interval_risk_bounds, oc_exact
from mstage.plans import TestShape, build_plan

from oracles import bernoulli_paths_oc, bernoulli_paths_reject_split


@pytest.fixture(scope="module")
def plan():
    shape = TestShape.m_hypotheses([0.3, 0.7], [0.2, 0.6], [0.4, 0.8], [0.35] * 3)
    p = build_plan(ModelSpec.bernoulli(), shape, zeta=1.0, stages=3)
    assert p.sizes[-1] <= 14
    return p


def test_degenerate_interval_is_point_risk(plan):
    lo, hi = interval_risk_bounds(plan, 1, 0.5, 0.5, epsilon=0.0)
    assert lo == pytest.approx(hi, abs=1e-15)
    assert hi == pytest.approx(oc_exact(plan, 0.5, epsilon=0.0).reject_prob(1), abs=1e-15)


@pytest.mark.parametrize("a, b", [(0.3, 0.7), (0.4, 0.6), (0.35, 0.5), (0.45, 0.55)])
def test_bounds_bracket_enumerated_risk(plan, a, b):
    lo, hi = interval_risk_bounds(plan, 1, a, b, epsilon=0.0)
    for theta in np.linspace(a, b, 7):
        risk = 1.0 - bernoulli_paths_oc(plan, float(theta))[1]
        assert lo - 1e-13 <= risk <= hi + 1e-13


@pytest.mark.parametrize("a, b", [(0.3, 0.7), (0.45, 0.55)])
def test_upper_bound_matches_event_split(plan, a, b):
    """The upper bound is the sum of the two terminal-estimate events at the interval ends."""
    low_a, _ = bernoulli_paths_reject_split(plan, a, 1, a, b)
    _, high_b = bernoulli_paths_reject_split(plan, b, 1, a, b)
    _, hi = interval_risk_bounds(plan, 1, a, b, epsilon=0.0)
    assert hi == pytest.approx(low_a + high_b, abs=1e-13)


def test_nesting_never_widens_gap(plan):
    mid = 0.5
    gaps = []
    for half in np.linspace(0.2, 0.0, 9):
        lo, hi = interval_risk_bounds(plan, 1, mid - half, mid + half, epsilon=0.0)
        gaps.append(hi - lo)
    assert all(b <= a + 1e-15 for a, b in zip(gaps, gaps[1:]))


def test_band_condition_enforced(plan):
    with pytest.raises(ValueError):
        interval_risk_bounds(plan, 1, 0.2, 0.7)
    with pytest.raises(ValueError):
        interval_risk_bounds(plan, 1, 0.6, 0.5)
    with pytest.raises(ValueError):
        interval_risk_bounds(plan, 3, 0.4, 0.5)


def test_outer_hypotheses_and_gamma_family():
    plan = build_plan(ModelSpec.exponential(), TestShape.multiple_simple([1.0, 1.5, 2.0], [0.05] * 3), zeta=1.0)
    lo, hi = interval_risk_bounds(plan, 1, 1.5, 1.5)
    assert lo == pytest.approx(hi, abs=1e-12)
    f = plan.lower_array
    a = float(np.max(f[:, 0]))
    lo, hi = interval_risk_bounds(plan, 1, a, 1.5)
    for theta in np.linspace(a, 1.5, 5):
        r = oc_exact(plan, float(theta)).reject_prob(1)
        assert lo - 1e-12 <= r <= hi + 1e-12
