"""Exact operating characteristics, ASN and interval risk bounds."""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np

from ..models import Family
from ..plans import TestPlan
from .discrete import oc_exact_discrete
from .gamma import (
    STAGE_CAP,
    CrossingMode,
    GammaSumEngine,
    StageCapError,
    band_crossing_probability,
    gamma_sum_survival,
    oc_exact_gamma,
)
from .report import ExactUnavailableError, OCReport

__all__ = [
    "OCReport",
    "ExactUnavailableError",
    "StageCapError",
    "STAGE_CAP",
    "CrossingMode",
    "GammaSumEngine",
    "gamma_sum_survival",
    "band_crossing_probability",
    "oc_exact_discrete",
    "oc_exact_gamma",
    "oc_exact",
    "has_exact_engine",
    "asn",
    "interval_risk_bounds",
    "DEFAULT_EPSILON",
]

DEFAULT_EPSILON = 1e-10

_GAMMA_FAMILIES = (
    Family.EXPONENTIAL,
    Family.GAMMA_SCALE,
    Family.NORMAL_STD_KNOWN_MEAN,
    Family.NORMAL_STD_UNKNOWN_MEAN,
)


def has_exact_engine(plan: TestPlan) -> bool:
    """Whether :func:`oc_exact` can evaluate ``plan``."""
    model = plan.model
    if model.is_discrete:
        return True
    if model.family not in _GAMMA_FAMILIES or plan.s > STAGE_CAP:
        return False
    if model.family is Family.GAMMA_SCALE and model.shape != int(model.shape):
        return False
    if model.family is Family.NORMAL_STD_KNOWN_MEAN:
        return all(int(n) % 2 == 0 for n in plan.sizes)
    if model.family is Family.NORMAL_STD_UNKNOWN_MEAN:
        return all(int(n) % 2 == 1 for n in plan.sizes)
    return True


def oc_exact(plan: TestPlan, theta: float, epsilon: float = DEFAULT_EPSILON) -> OCReport:
    """Exact OC of ``plan`` at ``theta`` using whichever engine fits the model.

    Raises:
        ExactUnavailableError: The model has no exact engine (normal mean,
            t and F plans, non-integer gamma shape, wrong parity, too many stages).
    """
    if plan.model.is_discrete:
        return oc_exact_discrete(plan, theta, epsilon)
    if plan.model.family in _GAMMA_FAMILIES:
        return oc_exact_gamma(plan, theta)
    raise ExactUnavailableError(f"no exact OC engine for {plan.model.family.value}; use simulation")


def asn(plan: TestPlan, theta: float, epsilon: float = DEFAULT_EPSILON) -> float:
    """Average sample number (test time for life testing) at ``theta``."""
    return oc_exact(plan, theta, epsilon).asn


def _band_condition(plan: TestPlan, i: int, a: float, b: float) -> bool:
    f, g = plan.lower_array, plan.upper_array
    ok_lo = i == 0 or bool(np.all(np.max(f[:, :i], axis=1) <= a))
    ok_hi = i == plan.m - 1 or bool(np.all(np.min(g[:, i:], axis=1) >= b))
    return ok_lo and ok_hi


def interval_risk_bounds(
    plan: TestPlan, i: int, a: float, b: float, epsilon: float = DEFAULT_EPSILON
) -> Tuple[float, float]:
    """Bounds on ``Pr{Reject H_i | theta}`` valid for every ``theta`` in ``[a, b]``.

    With every acceptance of a lower hypothesis at or below ``a`` and every
    acceptance of a higher hypothesis at or above ``b``, rejecting ``H_i``
    splits into ``{accept below i}`` (estimate ``<= a``) and ``{accept above i}``
    (estimate ``>= b``).  The first is non-increasing and the second
    non-decreasing in ``theta``, so

    ``upper = Pr_a{accept below i} + Pr_b{accept above i}`` and
    ``lower = Pr_b{accept below i} + Pr_a{accept above i}``.

    Each bound carries the truncation error of the two exact evaluations,
    which is added to ``upper`` and subtracted from ``lower``.

    Args:
        plan: A plan with an exact engine.
        i: Hypothesis index (0-based).
        a: Left end of the interval.
        b: Right end of the interval.
        epsilon: Truncation budget per evaluation.

    Raises:
        ValueError: ``a > b``, ``i`` out of range, or some threshold falls
            inside ``(a, b)`` so the event split above does not hold.
    """
    if not 0 <= i < plan.m:
        raise ValueError(f"hypothesis index must lie in 0..{plan.m - 1}")
    if a > b:
        raise ValueError("need a <= b")
    if not _band_condition(plan, i, a, b):
        raise ValueError("thresholds of neighbouring hypotheses fall inside (a, b)")
    ra = oc_exact(plan, a, epsilon)
    rb = ra if b == a else oc_exact(plan, b, epsilon)

    def below(r: OCReport) -> float:
        return math.fsum(r.accept_prob[:i])

    def above(r: OCReport) -> float:
        return math.fsum(r.accept_prob[i + 1 :])

    err = ra.trunc_error + rb.trunc_error
    upper = min(1.0, below(ra) + above(rb) + err)
    lower = max(0.0, below(rb) + above(ra) - err)
    return lower, upper
