"""Hypotheses, test shapes, multistage plans and their execution.

Every test shape is reduced to an ordered family of ``m`` hypotheses
``H_0: theta <= theta_1, ..., H_{m-1}: theta > theta_{m-1}`` with one
indifference zone ``(theta_i', theta_i'')`` around each cut.  Zone ``i`` carries a
pair of per-stage risks: ``alpha_i`` for the upper boundary built at
``theta_i'`` and ``beta_i`` for the lower boundary built at ``theta_i''``.
The shape also records which error probabilities must be checked, and where,
for the tuner.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import boundaries as bd
from .models import BoundaryKind, Family, ModelSpec, SPECIAL_FAMILIES

__all__ = [
    "HypothesesSpec",
    "ShapeKind",
    "TestShape",
    "RiskConstraint",
    "Reduction",
    "reduce_shape",
    "TestPlan",
    "PlanInvariantError",
    "InsufficientDataError",
    "build_plan",
    "rejection_bound",
    "decide",
    "stage_decision",
    "stage_estimates",
    "DecisionOutcome",
    "run_plan",
]


class PlanInvariantError(RuntimeError):
    """A constructed plan violates an ordering or closure invariant."""


class InsufficientDataError(RuntimeError):
    """The observation stream ended before the plan reached a decision."""


# ------------------------------------------------------------- hypotheses


@dataclass(frozen=True)
class HypothesesSpec:
    """``m`` ordered hypotheses split at ``cuts`` with indifference zones around each cut.

    Attributes:
        cuts: ``theta_1 < ... < theta_{m-1}``.
        indiff_lo: ``theta_i'`` for each cut.
        indiff_hi: ``theta_i''`` for each cut.
        risks: ``delta_0, ..., delta_{m-1}``, one per hypothesis.
    """

    cuts: Tuple[float, ...]
    indiff_lo: Tuple[float, ...]
    indiff_hi: Tuple[float, ...]
    risks: Tuple[float, ...]

    def __post_init__(self):
        for name in ("cuts", "indiff_lo", "indiff_hi", "risks"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        k = len(self.cuts)
        if k < 1:
            raise ValueError("need at least two hypotheses")
        if len(self.indiff_lo) != k or len(self.indiff_hi) != k or len(self.risks) != k + 1:
            raise ValueError("cuts, zone endpoints and risks have inconsistent lengths")
        for d in self.risks:
            if not 0.0 < d < 1.0:
                raise ValueError(f"risk levels must lie in (0, 1), got {d}")
        for i in range(k):
            if not self.indiff_lo[i] < self.cuts[i] < self.indiff_hi[i]:
                raise ValueError(f"zone {i + 1} must satisfy theta' < theta < theta''")
            # Adjacent zones may touch: reduced two-sided and simple shapes share an endpoint.
            if i + 1 < k and not self.indiff_hi[i] <= self.indiff_lo[i + 1]:
                raise ValueError(f"zones {i + 1} and {i + 2} overlap")

    @property
    def m(self) -> int:
        return len(self.cuts) + 1

    def check_model(self, model: ModelSpec) -> None:
        for v in self.indiff_lo + self.indiff_hi:
            model.check_parameter(v)


@dataclass(frozen=True)
class RiskConstraint:
    """A requirement ``Pr{event of hypothesis | theta} <= delta`` over ``[lo, hi]``.

    ``event`` is ``"reject"`` or ``"accept"``; ``hypothesis`` indexes the
    reduced ``m``-hypothesis family.  ``lo == hi`` denotes a single point.
    """

    event: str
    hypothesis: int
    lo: float
    hi: float
    delta: float

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi


class ShapeKind(str, enum.Enum):
    M_HYPOTHESES = "m-hypotheses"
    ONE_SIDED = "one-sided"
    TWO_SIDED = "two-sided"
    TRIPLE = "triple"
    INTERVAL = "interval"
    MULTIPLE_SIMPLE = "multiple-simple"


@dataclass(frozen=True)
class TestShape:
    """User-level description of a test before reduction.

    Build instances with the classmethods; ``values`` and ``risks`` are laid
    out per shape as documented there.
    """

    __test__ = False  # keep pytest from collecting this class

    kind: ShapeKind
    values: Tuple[float, ...]
    risks: Tuple[float, ...]
    extra: Tuple[Tuple[float, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", ShapeKind(self.kind))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "risks", tuple(float(v) for v in self.risks))
        object.__setattr__(self, "extra", tuple(tuple(float(v) for v in e) for e in self.extra))
        for d in self.risks:
            if not 0.0 < d < 1.0:
                raise ValueError(f"risk levels must lie in (0, 1), got {d}")

    @classmethod
    def one_sided(cls, theta0: float, theta1: float, alpha: float, beta: float) -> "TestShape":
        """``H_0: theta <= theta0`` vs ``H_1: theta >= theta1``."""
        return cls(ShapeKind.ONE_SIDED, (theta0, theta1), (alpha, beta))

    @classmethod
    def two_sided(cls, theta0: float, theta1: float, theta2: float, alpha: float, beta: float) -> "TestShape":
        """``H_0: theta = theta1`` vs ``H_1: theta != theta1``, indifferent on ``(theta0, theta2)``."""
        return cls(ShapeKind.TWO_SIDED, (theta0, theta1, theta2), (alpha, beta))

    @classmethod
    def triple(cls, theta0: float, theta1: float, theta2: float, deltas: Sequence[float]) -> "TestShape":
        """``theta < theta1``, ``theta = theta1``, ``theta > theta1`` with outer points ``theta0``, ``theta2``."""
        return cls(ShapeKind.TRIPLE, (theta0, theta1, theta2), tuple(deltas))

    @classmethod
    def interval(
        cls,
        theta1_lo: float,
        theta1: float,
        theta1_hi: float,
        theta2_lo: float,
        theta2: float,
        theta2_hi: float,
        alpha: float,
        beta: float,
    ) -> "TestShape":
        """``H_0: theta in [theta1, theta2]`` vs its complement, zones around both ends."""
        return cls(
            ShapeKind.INTERVAL,
            (theta1_lo, theta1, theta1_hi, theta2_lo, theta2, theta2_hi),
            (alpha, beta),
        )

    @classmethod
    def multiple_simple(cls, points: Sequence[float], deltas: Sequence[float]) -> "TestShape":
        """``H_i: theta = points[i]`` for each point."""
        return cls(ShapeKind.MULTIPLE_SIMPLE, tuple(points), tuple(deltas))

    @classmethod
    def m_hypotheses(
        cls,
        cuts: Sequence[float],
        indiff_lo: Sequence[float],
        indiff_hi: Sequence[float],
        deltas: Sequence[float],
    ) -> "TestShape":
        return cls(ShapeKind.M_HYPOTHESES, tuple(cuts), tuple(deltas), (tuple(indiff_lo), tuple(indiff_hi)))

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "values": list(self.values), "risks": list(self.risks)}
        if self.extra:
            out["extra"] = [list(e) for e in self.extra]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TestShape":
        return cls(ShapeKind(data["kind"]), tuple(data["values"]), tuple(data["risks"]), tuple(data.get("extra", ())))


@dataclass(frozen=True)
class Reduction:
    """An ``m``-hypothesis equivalent of a shape plus its risk map and checks.

    ``coeffs[i] = (a_i, b_i)`` gives the per-stage risks of zone ``i`` as
    ``(min(a_i * zeta, 1), min(b_i * zeta, 1))``.
    """

    hyp: HypothesesSpec
    coeffs: Tuple[Tuple[float, float], ...]
    checks: Tuple[RiskConstraint, ...]

    def risks(self, zeta: float) -> List[Tuple[float, float]]:
        if not zeta > 0:
            raise ValueError(f"zeta must be positive, got {zeta}")
        return [(min(a * zeta, 1.0), min(b * zeta, 1.0)) for a, b in self.coeffs]

    def constraints(self, risks: Sequence[Tuple[float, float]]) -> List[bd.Constraint]:
        h = self.hyp
        return [bd.Constraint(h.indiff_lo[i], h.indiff_hi[i], a, b) for i, (a, b) in enumerate(risks)]


def _ordered(vals: Sequence[float], what: str) -> None:
    if any(not a < b for a, b in zip(vals, vals[1:])):
        raise ValueError(f"{what} must be strictly increasing, got {list(vals)}")


def reduce_shape(shape: TestShape) -> Reduction:
    """Express ``shape`` as an ``m``-hypothesis family with a ``zeta``-indexed risk map."""
    k, v, r = shape.kind, shape.values, shape.risks
    if k is ShapeKind.ONE_SIDED:
        t0, t1 = v
        alpha, beta = r
        _ordered(v, "one-sided points")
        hyp = HypothesesSpec((0.5 * (t0 + t1),), (t0,), (t1,), (alpha, beta))
        checks = (RiskConstraint("reject", 0, t0, t0, alpha), RiskConstraint("reject", 1, t1, t1, beta))
        return Reduction(hyp, ((alpha, beta),), checks)
    if k in (ShapeKind.TWO_SIDED, ShapeKind.TRIPLE):
        t0, t1, t2 = v
        _ordered(v, "points")
        cuts = (0.5 * (t0 + t1), 0.5 * (t1 + t2))
        if k is ShapeKind.TWO_SIDED:
            alpha, beta = r
            hyp = HypothesesSpec(cuts, (t0, t1), (t1, t2), (beta, alpha, beta))
            coeffs = ((beta, 0.5 * alpha), (0.5 * alpha, beta))
            checks = (
                RiskConstraint("accept", 1, t0, t0, beta),
                RiskConstraint("reject", 1, t1, t1, alpha),
                RiskConstraint("accept", 1, t2, t2, beta),
            )
        else:
            if len(r) != 3:
                raise ValueError("triple test needs three risk levels")
            d0, d1, d2 = r
            hyp = HypothesesSpec(cuts, (t0, t1), (t1, t2), (d0, d1, d2))
            coeffs = ((d0, 0.5 * d1), (0.5 * d1, d2))
            checks = (
                RiskConstraint("reject", 0, t0, t0, d0),
                RiskConstraint("reject", 1, t1, t1, d1),
                RiskConstraint("reject", 2, t2, t2, d2),
            )
        return Reduction(hyp, coeffs, checks)
    if k is ShapeKind.INTERVAL:
        _ordered(v, "interval points")
        a1, t1, b1, a2, t2, b2 = v
        alpha, beta = r
        hyp = HypothesesSpec((t1, t2), (a1, a2), (b1, b2), (beta, alpha, beta))
        checks = (
            RiskConstraint("accept", 1, a1, a1, beta),
            RiskConstraint("reject", 1, b1, a2, alpha),
            RiskConstraint("accept", 1, b2, b2, beta),
        )
        return Reduction(hyp, ((beta, alpha), (alpha, beta)), checks)
    if k is ShapeKind.MULTIPLE_SIMPLE:
        if len(v) < 2 or len(r) != len(v):
            raise ValueError("need one risk level per point and at least two points")
        _ordered(v, "simple hypothesis points")
        cuts = tuple(0.5 * (a + b) for a, b in zip(v, v[1:]))
        hyp = HypothesesSpec(cuts, v[:-1], v[1:], r)
        coeffs = tuple((r[i - 1], r[i]) for i in range(1, len(v)))
        checks = tuple(RiskConstraint("reject", i, v[i], v[i], r[i]) for i in range(len(v)))
        return Reduction(hyp, coeffs, checks)
    if k is ShapeKind.M_HYPOTHESES:
        lo, hi = shape.extra
        hyp = HypothesesSpec(v, lo, hi, r)
        m = hyp.m
        coeffs = tuple((r[i - 1], r[i]) for i in range(1, m))
        checks = [RiskConstraint("reject", 0, lo[0], lo[0], r[0])]
        for i in range(1, m - 1):
            checks.append(RiskConstraint("reject", i, hi[i - 1], lo[i], r[i]))
        checks.append(RiskConstraint("reject", m - 1, hi[-1], hi[-1], r[-1]))
        return Reduction(hyp, coeffs, tuple(checks))
    raise ValueError(f"unknown shape {k}")


# ------------------------------------------------------------------ plans


@dataclass(frozen=True)
class TestPlan:
    """An immutable multistage plan.

    Attributes:
        model: Distribution family.
        kind: Boundary kind used to build the thresholds.
        shape: The user-level test shape.
        hyp: Reduced hypotheses.
        sizes: Sample sizes ``n_1 < ... < n_s`` (test times for life testing).
        lower: ``lower[l][i]`` is ``f_{l+1, i+1}``.
        upper: ``upper[l][i]`` is ``g_{l+1, i+1}``.
        risks: Per-zone ``(alpha_i, beta_i)`` actually used.
        zeta: Risk tuning parameter, ``None`` when risks were given directly.
        nbar: Minimal terminal size for these risks.
        sizes_y: Second-sample sizes for variance-ratio plans.
    """

    __test__ = False

    model: ModelSpec
    kind: BoundaryKind
    shape: TestShape
    hyp: HypothesesSpec
    sizes: Tuple[float, ...]
    lower: Tuple[Tuple[float, ...], ...]
    upper: Tuple[Tuple[float, ...], ...]
    risks: Tuple[Tuple[float, float], ...]
    zeta: Optional[float] = None
    nbar: Optional[float] = None
    sizes_y: Optional[Tuple[int, ...]] = None
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    @property
    def m(self) -> int:
        return self.hyp.m

    @property
    def s(self) -> int:
        return len(self.sizes)

    @property
    def lower_array(self) -> np.ndarray:
        return np.array(self.lower, dtype=float).reshape(self.s, self.m - 1)

    @property
    def upper_array(self) -> np.ndarray:
        return np.array(self.upper, dtype=float).reshape(self.s, self.m - 1)


def rejection_bound(plan: TestPlan, i: int) -> float:
    """Upper bound ``s * (max alpha above i + max beta up to i)`` on ``Pr{Reject H_i}`` over ``H_i``.

    Zone ``j`` (0-based) separates hypotheses ``j`` and ``j + 1``; the upper
    boundaries of zones ``i..m-2`` and the lower boundaries of zones ``0..i-1``
    are the only ways to leave ``H_i``.
    """
    if not 0 <= i < plan.m:
        raise ValueError(f"hypothesis index must lie in 0..{plan.m - 1}")
    a_bar = max((plan.risks[z][0] for z in range(i, plan.m - 1)), default=0.0)
    b_bar = max((plan.risks[z][1] for z in range(i)), default=0.0)
    return plan.s * (a_bar + b_bar)


def _default_parity(model: ModelSpec) -> Optional[str]:
    # Even / odd sizes keep the gamma-sum OC engine applicable.
    if model.family is Family.NORMAL_STD_KNOWN_MEAN:
        return "even"
    if model.family is Family.NORMAL_STD_UNKNOWN_MEAN:
        return "odd"
    return None


def _stage_pair(model: ModelSpec, kind, n, ny, c: bd.Constraint) -> bd.BoundaryPair:
    fam = model.family
    if fam is Family.NORMAL_MEAN_OVER_STD:
        return bd.t_plan_thresholds(int(n), c.theta_lo, c.theta_hi, c.alpha, c.beta)
    if fam is Family.VARIANCE_RATIO:
        return bd.f_ratio_thresholds(int(n), int(ny), c.theta_lo, c.theta_hi, c.alpha, c.beta, model.means_known)
    lo = bd.boundary_lower(model, kind, n, c.theta_hi, c.beta)
    up = bd.boundary_upper(model, kind, n, c.theta_lo, c.alpha)
    return bd.merge_boundaries(lo, up)


def build_plan(
    model: ModelSpec,
    shape: TestShape,
    kind=BoundaryKind.EXACT,
    *,
    zeta: Optional[float] = None,
    risks: Optional[Sequence[Tuple[float, float]]] = None,
    stages: Optional[int] = None,
    ratio: float = 0.5,
    sizes: Optional[Sequence[float]] = None,
    sizes_y: Optional[Sequence[int]] = None,
) -> TestPlan:
    """Construct a plan for ``shape`` under ``model``.

    Args:
        model: Distribution family.
        shape: Test shape; reduced to ordered hypotheses internally.
        kind: Boundary kind (ignored by the t and F families, which have their own thresholds).
        zeta: Risk tuning parameter; mutually exclusive with ``risks``.
        risks: Explicit per-zone ``(alpha_i, beta_i)``.
        stages: Number of stages for the default geometric schedule.
        ratio: Geometric schedule ratio.
        sizes: Explicit ascending sample sizes; the last must reach the terminal size.
        sizes_y: Second-sample sizes for variance-ratio plans (defaults to ``sizes``).

    Raises:
        NonTerminationError: No terminal size reaches boundary crossing.
        PlanInvariantError: The resulting thresholds violate an ordering invariant.
    """
    kind = BoundaryKind(kind)
    red = reduce_shape(shape)
    red.hyp.check_model(model)
    if (zeta is None) == (risks is None):
        raise ValueError("pass exactly one of zeta or risks")
    if risks is None:
        risks = red.risks(zeta)
    risks = [(float(a), float(b)) for a, b in risks]
    if len(risks) != red.hyp.m - 1:
        raise ValueError("need one (alpha, beta) pair per indifference zone")
    if model.family in SPECIAL_FAMILIES:
        for a, b in risks:
            if not (0 < a < 1 and 0 < b < 1):
                raise ValueError("t and F plans need risks strictly inside (0, 1)")
    constraints = red.constraints(risks)
    warnings: List[str] = []

    if model.continuous_time:
        nbar = bd.min_test_time(kind, constraints)
    else:
        nbar = bd.min_terminal_size(model, kind, constraints)

    if sizes is None:
        if model.continuous_time:
            s = stages or bd.default_stage_count(max(1, math.ceil(nbar)), ratio)
            sizes = sorted({ratio ** (s - ell) * nbar for ell in range(1, s + 1)})
        else:
            s = stages or bd.default_stage_count(nbar, ratio)
            sizes = bd.sample_schedule(nbar, s, ratio, model.min_size, _default_parity(model))
    sizes = tuple(float(n) if model.continuous_time else int(n) for n in sizes)
    if any(not a < b for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sample sizes must be strictly increasing")
    if sizes[0] < model.min_size:
        raise ValueError(f"sample sizes must be at least {model.min_size}")
    if sizes[-1] < nbar:
        raise ValueError(f"terminal size {sizes[-1]} is below the required {nbar}")
    if sizes[-1] != nbar:
        warnings.append(f"terminal size {sizes[-1]} exceeds the minimal {nbar}")
    if sizes_y is None:
        sizes_y = sizes if model.family is Family.VARIANCE_RATIO else None
    elif len(sizes_y) != len(sizes):
        raise ValueError("sizes_y must match sizes in length")

    lower, upper = [], []
    for ell, n in enumerate(sizes):
        ny = sizes_y[ell] if sizes_y is not None else None
        pairs = [_stage_pair(model, kind, n, ny, c) for c in constraints]
        lower.append(tuple(p.lower for p in pairs))
        upper.append(tuple(p.upper for p in pairs))

    plan = TestPlan(
        model=model,
        kind=kind,
        shape=shape,
        hyp=red.hyp,
        sizes=sizes,
        lower=tuple(lower),
        upper=tuple(upper),
        risks=tuple(risks),
        zeta=zeta,
        nbar=nbar,
        sizes_y=tuple(int(n) for n in sizes_y) if sizes_y is not None else None,
        warnings=tuple(warnings),
    )
    _check_invariants(plan)
    return plan


def _check_invariants(plan: TestPlan) -> None:
    f, g = plan.lower_array, plan.upper_array
    if np.any(f > g):
        raise PlanInvariantError("a lower threshold exceeds its upper threshold")
    # Acceptance bands must be ordered: everything accepted for H_j lies left of H_{j+1}.
    running = np.maximum.accumulate(f, axis=1)
    rev_min = np.minimum.accumulate(g[:, ::-1], axis=1)[:, ::-1]
    if np.any(running > rev_min):
        raise PlanInvariantError("acceptance bands overlap")
    if np.any(f[-1] != g[-1]):
        raise PlanInvariantError("terminal thresholds do not coincide; plan is not closed")


# --------------------------------------------------------------- decisions


def decide(lower_row: Sequence[float], upper_row: Sequence[float], est) -> np.ndarray:
    """Vectorized decision variable ``D`` in ``{0, ..., m}`` for one stage."""
    f = np.asarray(lower_row, dtype=float)
    g = np.asarray(upper_row, dtype=float)
    x = np.asarray(est, dtype=float)
    m = f.size + 1
    d = np.zeros(x.shape, dtype=np.int64)
    d[x <= f[0]] = 1
    for i in range(2, m):
        hit = (d == 0) & (x > g[i - 2]) & (x <= f[i - 1])
        d[hit] = i
    d[(d == 0) & (x > g[m - 2])] = m
    return d


def stage_decision(plan: TestPlan, stage: int, estimate: float) -> int:
    """``D_stage`` for a scalar estimate; ``stage`` counts from 1."""
    if not 1 <= stage <= plan.s:
        raise ValueError(f"stage must lie in 1..{plan.s}")
    return int(decide(plan.lower[stage - 1], plan.upper[stage - 1], estimate))


@dataclass(frozen=True)
class DecisionOutcome:
    accepted: int
    stage: int
    samples_used: float
    estimate: float


def stage_estimates(model: ModelSpec, x: np.ndarray, n: int, y: Optional[np.ndarray] = None, ny: Optional[int] = None):
    """Estimator from the first ``n`` observations along the last axis of ``x``.

    Works on a single path or a batch of paths (leading axes).  Life testing
    takes ascending failure times on the accumulated-time axis and ``n`` is a
    test time.
    """
    fam = model.family
    if fam is Family.LIFE_TEST_POISSON:
        return np.sum(x < n, axis=-1) / n
    xs = x[..., : int(n)]
    if fam is Family.NORMAL_STD_KNOWN_MEAN:
        return np.sqrt(np.mean((xs - model.mu) ** 2, axis=-1))
    if fam is Family.NORMAL_STD_UNKNOWN_MEAN:
        return np.sqrt(np.var(xs, axis=-1))
    if fam is Family.NORMAL_MEAN_OVER_STD:
        num = np.mean(xs, axis=-1) - model.mu
        den = np.std(xs, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / den
        return np.where(den > 0, out, np.sign(num) * np.inf)
    if fam is Family.VARIANCE_RATIO:
        ys = y[..., : int(ny)]
        if model.means_known:
            return np.mean((xs - model.mu) ** 2, axis=-1) / np.mean((ys - model.mu_y) ** 2, axis=-1)
        return np.var(xs, axis=-1, ddof=1) / np.var(ys, axis=-1, ddof=1)
    return np.mean(xs, axis=-1)


def _validate_stream(model: ModelSpec, x: np.ndarray) -> None:
    if model.family in (Family.BERNOULLI, Family.FINITE_POPULATION):
        if not np.all((x == 0) | (x == 1)):
            raise ValueError("observations must be 0 or 1")
    if model.family is Family.POISSON and not np.all((x >= 0) & (x == np.floor(x))):
        raise ValueError("Poisson observations must be non-negative integers")
    if model.family is Family.FINITE_POPULATION and x.size > model.population:
        raise ValueError("more draws than population units")


def run_plan(plan: TestPlan, observations: Iterable[float], y: Optional[Iterable[float]] = None) -> DecisionOutcome:
    """Execute ``plan`` on an observation stream and return the first non-zero decision.

    Args:
        plan: The plan.
        observations: Samples of ``X`` (failure times for life testing).
        y: Samples of ``Y`` for variance-ratio plans.

    Raises:
        InsufficientDataError: The stream ends before a decision is reached.
    """
    model = plan.model
    x = np.asarray(list(observations), dtype=float)
    _validate_stream(model, x)
    yy = np.asarray(list(y), dtype=float) if y is not None else None
    if model.family is Family.VARIANCE_RATIO and yy is None:
        raise ValueError("variance-ratio plans need a second stream")
    for ell, n in enumerate(plan.sizes):
        ny = plan.sizes_y[ell] if plan.sizes_y is not None else None
        # Life-test streams list failure times, so any prefix of time is covered.
        if not model.continuous_time and (x.size < n or (ny is not None and yy.size < ny)):
            raise InsufficientDataError(f"stage {ell + 1} needs {n} observations, stream has {x.size}")
        est = float(stage_estimates(model, x, n, yy, ny))
        d = int(decide(plan.lower[ell], plan.upper[ell], est))
        if d:
            return DecisionOutcome(accepted=d - 1, stage=ell + 1, samples_used=n, estimate=est)
    raise PlanInvariantError("terminal stage produced no decision")
