"""Risk tuning: the largest ``zeta`` whose plan meets every risk requirement.

Boundary hypotheses are checked at a single endpoint, which suffices because
the probability of rejecting ``H_0`` rises and that of rejecting ``H_{m-1}``
falls as ``theta`` moves into the indifference zone.  Interior hypotheses are
checked over their whole interval by recursive splitting with the
interval bounds of :func:`mstage.oc.interval_risk_bounds`; an interval that
cannot be resolved above the width tolerance fails.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import boundaries as bd
from .models import BoundaryKind, Family, ModelSpec
from .oc import DEFAULT_EPSILON, ExactUnavailableError, OCReport, has_exact_engine, interval_risk_bounds, oc_exact
from .plans import PlanInvariantError, RiskConstraint, TestPlan, TestShape, build_plan, reduce_shape
from .rng import DEFAULT_SEED

__all__ = [
    "CertificateEntry",
    "Margin",
    "CheckResult",
    "TuningResult",
    "TuningError",
    "risk_check",
    "tune",
    "ZETA_CEILING",
    "ZETA_FLOOR_EXPONENT",
]

ZETA_CEILING = 10.0
ZETA_FLOOR_EXPONENT = 60
REL_TOL = 1e-3
SPLIT_DEPTH = 10
SIM_GRID = 5
SIM_SE_MULT = 3.0


class TuningError(RuntimeError):
    """No ``zeta`` above the search floor passes the risk check."""

    def __init__(self, message: str, trace: Sequence[Tuple[float, bool]] = ()):
        super().__init__(message)
        self.trace = tuple(trace)


@dataclass(frozen=True)
class CertificateEntry:
    """One verified point or interval.

    Attributes:
        event: ``"reject"`` or ``"accept"``.
        hypothesis: Index into the reduced hypotheses.
        lo: Left end (equal to ``hi`` for a point).
        hi: Right end.
        bound: Upper bound on the event probability over ``[lo, hi]``.
        delta: Required level.
        passed: ``bound <= delta``.
        method: ``"exact"``, ``"interval"``, ``"grid"`` or ``"simulation"``.
        note: Free-form caveat (for example a Monte Carlo confidence statement).
    """

    event: str
    hypothesis: int
    lo: float
    hi: float
    bound: float
    delta: float
    passed: bool
    method: str
    note: str = ""


@dataclass(frozen=True)
class Margin:
    """Worst verified risk of one requirement against its level."""

    event: str
    hypothesis: int
    worst: float
    delta: float


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    zeta: float
    plan: Optional[TestPlan]
    margins: Tuple[Margin, ...]
    certificate: Tuple[CertificateEntry, ...]
    error: str = ""


@dataclass(frozen=True)
class TuningResult:
    """Outcome of :func:`tune`.

    Attributes:
        zeta_star: Largest passing ``zeta`` found.
        plan: The plan built at ``zeta_star``.
        margins: Per-requirement worst risk and level.
        certificate: Every point and interval verified at ``zeta_star``.
        trace: ``(zeta, passed)`` for every probe, in search order.
        ceiling_hit: ``zeta_star`` equals the search ceiling.
    """

    zeta_star: float
    plan: TestPlan
    margins: Tuple[Margin, ...]
    certificate: Tuple[CertificateEntry, ...]
    trace: Tuple[Tuple[float, bool], ...] = field(default=(), compare=False)
    ceiling_hit: bool = False

    def certificate_json(self) -> str:
        return certificate_json(self.certificate)

    def certificate_digest(self) -> str:
        return hashlib.sha256(self.certificate_json().encode()).hexdigest()


def certificate_json(entries: Sequence[CertificateEntry]) -> str:
    """Canonical JSON for a certificate."""
    return json.dumps([asdict(e) for e in entries], sort_keys=True, separators=(",", ":"))


# ------------------------------------------------------------- evaluation


class _Evaluator:
    """Memoized OC evaluations for one plan."""

    def __init__(self, plan: TestPlan, method: str, epsilon: float, sim_reps: int, seed: int):
        self.plan = plan
        self.method = method
        self.epsilon = epsilon
        self.sim_reps = sim_reps
        self.seed = seed
        self._cache = {}

    def report(self, theta: float) -> OCReport:
        hit = self._cache.get(theta)
        if hit is None:
            if self.method == "exact":
                hit = oc_exact(self.plan, theta, self.epsilon)
            else:
                from .simulate import oc_simulate

                hit = oc_simulate(self.plan, theta, self.sim_reps, self.seed)
            self._cache[theta] = hit
        return hit

    def point(self, c: RiskConstraint, theta: float) -> float:
        """Upper bound on the event probability at ``theta``."""
        r = self.report(theta)
        p = r.reject_prob(c.hypothesis) if c.event == "reject" else r.accept_prob[c.hypothesis]
        if r.method == "simulation":
            se = math.sqrt(max(p * (1.0 - p), 0.0) / self.sim_reps)
            return min(1.0, p + SIM_SE_MULT * se)
        return min(1.0, p + r.trunc_error)


def _point_entry(ev: _Evaluator, c: RiskConstraint, theta: float) -> CertificateEntry:
    bound = ev.point(c, theta)
    sim = ev.method == "simulation"
    return CertificateEntry(
        c.event,
        c.hypothesis,
        theta,
        theta,
        bound,
        c.delta,
        bound <= c.delta,
        "simulation" if sim else "exact",
        f"estimate plus {SIM_SE_MULT:g} standard errors over {ev.sim_reps} replications" if sim else "",
    )


def _interval_bounds(ev: _Evaluator, c: RiskConstraint, a: float, b: float) -> Tuple[float, float]:
    lo, hi = interval_risk_bounds(ev.plan, c.hypothesis, a, b, ev.epsilon)
    if c.event == "accept":
        lo, hi = 1.0 - hi, 1.0 - lo
    return lo, hi


def _check_interval_exact(ev: _Evaluator, c: RiskConstraint, tol: float) -> List[CertificateEntry]:
    """Recursive splitting over ``[c.lo, c.hi]``; stops at the first failure."""
    out: List[CertificateEntry] = []
    stack = [(c.lo, c.hi)]
    while stack:
        a, b = stack.pop()
        try:
            lo, hi = _interval_bounds(ev, c, a, b)
        except ValueError as exc:
            lo, hi, note = 0.0, 1.0, str(exc)
        else:
            note = ""
        if hi <= c.delta:
            out.append(CertificateEntry(c.event, c.hypothesis, a, b, hi, c.delta, True, "interval"))
            continue
        if lo > c.delta:
            out.append(CertificateEntry(c.event, c.hypothesis, a, b, lo, c.delta, False, "interval", "lower bound exceeds level"))
            return out
        if b - a <= tol:
            out.append(CertificateEntry(c.event, c.hypothesis, a, b, hi, c.delta, False, "interval", note or "unresolved at width tolerance"))
            return out
        mid = 0.5 * (a + b)
        stack.append((mid, b))
        stack.append((a, mid))
    return out


def _grid_points(model: ModelSpec, a: float, b: float) -> List[float]:
    N = model.population
    i0, i1 = math.ceil(a * N - 1e-9), math.floor(b * N + 1e-9)
    return [i / N for i in range(i0, i1 + 1)]


def _check_constraint(ev: _Evaluator, c: RiskConstraint, tol_div: int) -> List[CertificateEntry]:
    if c.is_point:
        return [_point_entry(ev, c, c.lo)]
    if ev.method == "simulation":
        pts = np.linspace(c.lo, c.hi, SIM_GRID)
        return [_point_entry(ev, c, float(t)) for t in pts]
    if ev.plan.model.family is Family.FINITE_POPULATION:
        out = []
        for t in _grid_points(ev.plan.model, c.lo, c.hi):
            e = _point_entry(ev, c, t)
            out.append(CertificateEntry(e.event, e.hypothesis, t, t, e.bound, e.delta, e.passed, "grid"))
            if not e.passed:
                break
        return out
    return _check_interval_exact(ev, c, (c.hi - c.lo) / tol_div)


def _margins(checks: Sequence[RiskConstraint], cert: Sequence[CertificateEntry]) -> Tuple[Margin, ...]:
    out = []
    for c in checks:
        worst = max(
            (e.bound for e in cert if e.event == c.event and e.hypothesis == c.hypothesis and c.lo <= e.lo and e.hi <= c.hi),
            default=math.nan,
        )
        out.append(Margin(c.event, c.hypothesis, worst, c.delta))
    return tuple(out)


def _resolve_method(plan: TestPlan, method: str) -> str:
    if method == "auto":
        return "exact" if has_exact_engine(plan) else "simulation"
    if method == "exact" and not has_exact_engine(plan):
        raise ExactUnavailableError(f"no exact OC engine for {plan.model.family.value}")
    if method not in ("exact", "simulation"):
        raise ValueError(f"unknown method {method!r}")
    return method


def risk_check(
    model: ModelSpec,
    shape: TestShape,
    kind=BoundaryKind.EXACT,
    zeta: float = 1.0,
    *,
    stages: Optional[int] = None,
    ratio: float = 0.5,
    epsilon: float = DEFAULT_EPSILON,
    method: str = "auto",
    sim_reps: int = 100_000,
    seed: int = DEFAULT_SEED,
    extra_checks: Sequence[RiskConstraint] = (),
    split_depth: int = SPLIT_DEPTH,
) -> CheckResult:
    """Build the plan at ``zeta`` and verify every risk requirement of ``shape``.

    Args:
        model: Distribution family.
        shape: Test shape carrying the required risk levels.
        kind: Boundary kind.
        zeta: Risk tuning parameter.
        stages: Number of stages (``None`` picks the default for the plan's size).
        ratio: Geometric schedule ratio.
        epsilon: Truncation budget of each exact evaluation.
        method: ``"auto"``, ``"exact"`` or ``"simulation"``.
        sim_reps: Replications per simulated point.
        seed: Simulation seed.
        extra_checks: Additional requirements on the reduced hypotheses.
        split_depth: Interval splitting stops at width ``(hi - lo) / 2**split_depth``.

    Returns:
        A :class:`CheckResult`.  Plan construction failures (no finite
        terminal size, broken invariants) are reported as a failed check.

    Raises:
        ExactUnavailableError: ``method="exact"`` on a model without an exact engine.
    """
    red = reduce_shape(shape)
    checks = tuple(red.checks) + tuple(extra_checks)
    try:
        plan = build_plan(model, shape, kind, zeta=zeta, stages=stages, ratio=ratio)
    except (bd.NonTerminationError, PlanInvariantError, ValueError, OverflowError) as exc:
        return CheckResult(False, zeta, None, (), (), f"{type(exc).__name__}: {exc}")
    ev = _Evaluator(plan, _resolve_method(plan, method), epsilon, sim_reps, seed)
    cert: List[CertificateEntry] = []
    passed = True
    for c in checks:
        entries = _check_constraint(ev, c, 2**split_depth)
        cert.extend(entries)
        if not all(e.passed for e in entries):
            passed = False
            break
    return CheckResult(passed, zeta, plan, _margins(checks, cert), tuple(cert))


def tune(
    model: ModelSpec,
    shape: TestShape,
    kind=BoundaryKind.EXACT,
    *,
    stages: Optional[int] = None,
    ratio: float = 0.5,
    epsilon: float = DEFAULT_EPSILON,
    method: str = "auto",
    sim_reps: int = 100_000,
    seed: int = DEFAULT_SEED,
    extra_checks: Sequence[RiskConstraint] = (),
    rel_tol: float = REL_TOL,
    on_probe: Optional[Callable[[CheckResult], None]] = None,
) -> TuningResult:
    """Find the largest ``zeta`` whose plan passes :func:`risk_check`.

    A coarse phase tries ``10 * 2**-i`` for ``i = 0, 1, ...`` until one passes;
    bisection then refines within ``[zeta, 2 * zeta)`` to relative tolerance
    ``rel_tol``.  The plan (terminal size and schedule included) is rebuilt at
    every probe, and the best passing probe is returned.

    Raises:
        TuningError: Nothing passes down to ``10 * 2**-60``.

    Example:
        >>> from mstage import ModelSpec, TestShape
        >>> res = tune(ModelSpec.bernoulli(), TestShape.one_sided(0.2, 0.6, 0.1, 0.1))
        >>> all(m.worst <= m.delta for m in res.margins)
        True
    """
    trace: List[Tuple[float, bool]] = []

    def probe(z: float) -> CheckResult:
        res = risk_check(
            model, shape, kind, z, stages=stages, ratio=ratio, epsilon=epsilon, method=method,
            sim_reps=sim_reps, seed=seed, extra_checks=extra_checks,
        )
        trace.append((z, res.passed))
        if on_probe is not None:
            on_probe(res)
        return res

    best: Optional[CheckResult] = None
    for i in range(ZETA_FLOOR_EXPONENT + 1):
        res = probe(ZETA_CEILING * 2.0**-i)
        if res.passed:
            best = res
            break
    if best is None:
        raise TuningError(f"no zeta down to {ZETA_CEILING}*2^-{ZETA_FLOOR_EXPONENT} passes the risk check", trace)
    if best.zeta == ZETA_CEILING:
        return _result(best, trace, ceiling=True)
    lo, hi = best.zeta, 2.0 * best.zeta
    while hi - lo > rel_tol * lo:
        mid = 0.5 * (lo + hi)
        res = probe(mid)
        if res.passed:
            lo = mid
            if mid > best.zeta:
                best = res
        else:
            hi = mid
    return _result(best, trace, ceiling=False)


def _result(res: CheckResult, trace, ceiling: bool) -> TuningResult:
    return TuningResult(res.zeta, res.plan, res.margins, res.certificate, tuple(trace), ceiling)
