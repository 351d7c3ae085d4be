"""Per-stage acceptance thresholds, terminal sample sizes and sample-size schedules.

For a stage with ``n`` samples the lower boundary ``f(n, theta, delta)`` is the
largest estimate value ``z`` with ``Pr{theta_hat <= z | theta} <= delta`` (and,
for the exact kind, ``z <= theta``); the upper boundary ``g`` mirrors it.
Chernoff boundaries replace the tail by its Chernoff bound, quantile
boundaries drop the ``z <= theta`` clamp.  Empty defining sets give ``-inf``
and ``+inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, special, stats

from . import dist
from .models import BoundaryKind, Family, ModelSpec

__all__ = [
    "BoundaryPair",
    "Constraint",
    "NonTerminationError",
    "boundary_lower",
    "boundary_upper",
    "merge_boundaries",
    "feasible",
    "min_terminal_size",
    "scan_terminal_size",
    "sample_schedule",
    "default_stage_count",
    "life_test_time",
    "min_test_time",
    "t_plan_thresholds",
    "f_ratio_thresholds",
    "HARD_CAP",
]

HARD_CAP = 10_000_000
# Relative slack on "<= delta" so that analytic ties (delta == (1-p)**n) resolve
# the way the definitions intend despite rounding.
TIE_RTOL = 1e-12
_GRID_EPS = 1e-9


class NonTerminationError(RuntimeError):
    """No sample size up to the cap makes the terminal boundaries cross."""


@dataclass(frozen=True)
class BoundaryPair:
    lower: float
    upper: float

    def __iter__(self):
        yield self.lower
        yield self.upper


@dataclass(frozen=True)
class Constraint:
    """One indifference zone ``(theta_lo, theta_hi)`` with its per-stage risks.

    ``alpha`` governs the upper boundary built at ``theta_lo``; ``beta`` governs
    the lower boundary built at ``theta_hi``.
    """

    theta_lo: float
    theta_hi: float
    alpha: float
    beta: float


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise ValueError(f"risk must lie in (0, 1), got {delta}")


def _thr(delta: float) -> float:
    return delta * (1.0 + TIE_RTOL)


def _log_thr(delta: float) -> float:
    return math.log(delta) + TIE_RTOL


# ------------------------------------------------------------ discrete grids


def _count_law(model: ModelSpec, n: float, theta: float):
    """Frozen scipy law of the count ``K = n * theta_hat`` and the grid top."""
    fam = model.family
    if fam is Family.BERNOULLI:
        return stats.binom(int(n), theta), int(n)
    if fam in (Family.POISSON, Family.LIFE_TEST_POISSON):
        return stats.poisson(n * theta), None
    if fam is Family.FINITE_POPULATION:
        N = model.population
        M = int(round(theta * N))
        return stats.hypergeom(N, M, int(n)), int(n)
    raise ValueError(f"{fam.value} is not a discrete family")


def _largest_k_cdf_le(law, delta: float, kmax: Optional[int]) -> int:
    """Largest integer ``k >= 0`` with ``Pr{K <= k} <= delta``; ``-1`` when none."""
    thr = _thr(delta)
    k = int(law.ppf(delta)) - 1
    k = max(k, -1)
    if kmax is not None:
        k = min(k, kmax)
    while (kmax is None or k + 1 <= kmax) and law.cdf(k + 1) <= thr:
        k += 1
    while k >= 0 and law.cdf(k) > thr:
        k -= 1
    return k


def _smallest_k_sf_le(law, delta: float) -> int:
    """Smallest integer ``k >= 0`` with ``Pr{K >= k} <= delta``."""
    thr = _thr(delta)
    k = max(int(law.isf(delta)) + 1, 0)
    while k > 0 and law.sf(k - 2) <= thr:
        k -= 1
    while law.sf(k - 1) > thr:
        k += 1
    return k


def _discrete_lower(model: ModelSpec, kind: BoundaryKind, n: float, theta: float, delta: float) -> float:
    law, kmax = _count_law(model, n, theta)
    top = math.floor(n * theta + _GRID_EPS)
    if kind is BoundaryKind.CHERNOFF:
        k = _chernoff_lower_count(model, n, theta, delta, top)
    else:
        k = _largest_k_cdf_le(law, delta, kmax)
        if kind is BoundaryKind.EXACT:
            k = min(k, top)
    return -math.inf if k < 0 else k / n


def _discrete_upper(model: ModelSpec, kind: BoundaryKind, n: float, theta: float, delta: float) -> float:
    law, kmax = _count_law(model, n, theta)
    bottom = math.ceil(n * theta - _GRID_EPS)
    if kind is BoundaryKind.CHERNOFF:
        k = _chernoff_upper_count(model, n, theta, delta, bottom, kmax)
    else:
        k = _smallest_k_sf_le(law, delta)
        if kind is BoundaryKind.EXACT:
            k = max(k, bottom)
    if k is None or (kmax is not None and k > kmax):
        return math.inf
    return k / n


def _chernoff_log_counts(model: ModelSpec, n: float, theta: float, ks: np.ndarray) -> np.ndarray:
    """Log Chernoff bound at each grid point ``k/n``."""
    if model.family is Family.FINITE_POPULATION:
        N = model.population
        M = int(round(theta * N))
        out = np.empty(ks.shape, dtype=float)
        for j, k in enumerate(ks):
            out[j] = dist.log_hypergeom_chernoff_bound(N, int(n), int(k), M)
        return out
    z = ks / n
    if model.family is Family.BERNOULLI:
        with np.errstate(divide="ignore", invalid="ignore"):
            r = special.xlogy(z, theta) - special.xlogy(z, z)
            r = r + special.xlog1py(1 - z, -theta) - special.xlogy(1 - z, 1 - z)
        return n * r
    # Poisson counts
    with np.errstate(divide="ignore", invalid="ignore"):
        r = z - theta + special.xlogy(z, theta) - special.xlogy(z, z)
    return n * r


def _chernoff_lower_count(model, n, theta, delta, top) -> int:
    if top < 0:
        return -1
    lt = _log_thr(delta)
    if model.family is Family.FINITE_POPULATION:
        ks = np.arange(0, top + 1)
        ok = np.nonzero(_chernoff_log_counts(model, n, theta, ks) <= lt)[0]
        return int(ks[ok[-1]]) if ok.size else -1
    # Bound is increasing in z on [0, theta]; locate the crossing, then fix up on the grid.
    z_star = _mean_rate_root(model, n, theta, delta, lower=True)
    k = min(top, math.floor(n * z_star + _GRID_EPS)) if z_star is not None else -1
    log_at = lambda kk: float(_chernoff_log_counts(model, n, theta, np.array([kk], dtype=float))[0])
    while k + 1 <= top and log_at(k + 1) <= lt:
        k += 1
    while k >= 0 and log_at(k) > lt:
        k -= 1
    return k


def _chernoff_upper_count(model, n, theta, delta, bottom, kmax):
    lt = _log_thr(delta)
    if model.family is Family.FINITE_POPULATION:
        ks = np.arange(max(bottom, 0), kmax + 1)
        ok = np.nonzero(_chernoff_log_counts(model, n, theta, ks) <= lt)[0]
        return int(ks[ok[0]]) if ok.size else None
    z_star = _mean_rate_root(model, n, theta, delta, lower=False)
    if z_star is None:
        return None
    k = max(bottom, math.ceil(n * z_star - _GRID_EPS))
    log_at = lambda kk: float(_chernoff_log_counts(model, n, theta, np.array([kk], dtype=float))[0])
    while k - 1 >= bottom and log_at(k - 1) <= lt:
        k -= 1
    while (kmax is None or k <= kmax) and log_at(k) > lt:
        k += 1
    return k


def _mean_rate_root(model: ModelSpec, n: float, theta: float, delta: float, lower: bool):
    """Root of ``n * rate(z, theta) = ln delta`` on the requested side of ``theta``.

    Returns the endpoint of the admissible range when the bound stays below
    ``delta`` all the way to the edge, and ``None`` when the set is empty.
    """
    target = math.log(delta) / n
    rate = lambda z: dist.rate_function(model, z, theta) - target
    if lower:
        if theta <= 0.0:
            return 0.0 if rate(0.0) <= 0 else None
        if rate(0.0) > 0:
            return None
        return optimize.brentq(rate, 0.0, theta, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    if model.family is Family.BERNOULLI:
        if theta >= 1.0:
            return 1.0
        if rate(1.0) > 0:
            return None
        return optimize.brentq(rate, theta, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    hi = max(2.0 * theta, theta + 1.0)
    while rate(hi) > 0:
        hi *= 2.0
    return optimize.brentq(rate, theta, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


# ---------------------------------------------------------- continuous forms


def _gamma_chernoff_roots(shape: float, delta: float) -> Tuple[float, float]:
    """Roots ``u_lo < 1 < u_hi`` of ``shape * (ln u + 1 - u) = ln delta``."""
    c = math.log(delta) / shape
    h = lambda u: math.log(u) + 1.0 - u - c
    lo_left = math.exp(c - 1.0) / 2.0
    u_lo = optimize.brentq(h, lo_left, 1.0, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    u_hi = optimize.brentq(h, 1.0, 2.0 * (1.0 - c) + 1.0, rtol=4 * np.finfo(float).eps)
    return u_lo, u_hi


def _continuous_lower(model: ModelSpec, kind: BoundaryKind, n: float, theta: float, delta: float) -> float:
    fam = model.family
    if fam is Family.NORMAL_MEAN:
        s = model.sigma / math.sqrt(n)
        if kind is BoundaryKind.CHERNOFF:
            return theta - s * math.sqrt(2.0 * math.log(1.0 / delta))
        z = dist.normal_quantile(delta)
        return theta - s * (max(z, 0.0) if kind is BoundaryKind.EXACT else z)
    if fam in (Family.EXPONENTIAL, Family.GAMMA_SCALE):
        m = n * model.shape
        if kind is BoundaryKind.CHERNOFF:
            return theta * _gamma_chernoff_roots(m, delta)[0]
        q = theta * special.gammaincinv(m, delta) / m
        return min(theta, q) if kind is BoundaryKind.EXACT else q
    if fam in (Family.NORMAL_STD_KNOWN_MEAN, Family.NORMAL_STD_UNKNOWN_MEAN):
        dof = n if fam is Family.NORMAL_STD_KNOWN_MEAN else n - 1
        if kind is BoundaryKind.CHERNOFF:
            u = _gamma_chernoff_roots(0.5 * dof, delta)[0]
            return min(theta, theta * math.sqrt(dof * u / n))
        q = theta * math.sqrt(dist.chi_square_quantile(dof, delta) / n)
        return min(theta, q) if kind is BoundaryKind.EXACT else q
    raise ValueError(f"no boundary formulas for {fam.value}")


def _continuous_upper(model: ModelSpec, kind: BoundaryKind, n: float, theta: float, delta: float) -> float:
    fam = model.family
    if fam is Family.NORMAL_MEAN:
        s = model.sigma / math.sqrt(n)
        if kind is BoundaryKind.CHERNOFF:
            return theta + s * math.sqrt(2.0 * math.log(1.0 / delta))
        z = dist.normal_quantile(delta)
        return theta + s * (max(z, 0.0) if kind is BoundaryKind.EXACT else z)
    if fam in (Family.EXPONENTIAL, Family.GAMMA_SCALE):
        m = n * model.shape
        if kind is BoundaryKind.CHERNOFF:
            return theta * _gamma_chernoff_roots(m, delta)[1]
        q = theta * special.gammainccinv(m, delta) / m
        return max(theta, q) if kind is BoundaryKind.EXACT else q
    if fam in (Family.NORMAL_STD_KNOWN_MEAN, Family.NORMAL_STD_UNKNOWN_MEAN):
        dof = n if fam is Family.NORMAL_STD_KNOWN_MEAN else n - 1
        if kind is BoundaryKind.CHERNOFF:
            u = _gamma_chernoff_roots(0.5 * dof, delta)[1]
            return max(theta, theta * math.sqrt(dof * u / n))
        q = theta * math.sqrt(dist.chi_square_quantile(dof, 1.0 - delta) / n)
        return max(theta, q) if kind is BoundaryKind.EXACT else q
    raise ValueError(f"no boundary formulas for {fam.value}")


def _validate(model: ModelSpec, kind, n: float, theta: float, delta: float) -> BoundaryKind:
    kind = BoundaryKind(kind)
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"risk must lie in (0, 1], got {delta}")
    if delta == 1.0 and kind is BoundaryKind.QUANTILE:
        raise ValueError("quantile boundaries need risk < 1")
    model.check_parameter(theta)
    if not n > 0 or n < model.min_size:
        raise ValueError(f"sample size {n} below the minimum {model.min_size} for {model.family.value}")
    if not model.continuous_time and n != int(n):
        raise ValueError(f"sample size must be an integer, got {n}")
    if model.family is Family.FINITE_POPULATION and n > model.population:
        raise ValueError(f"sample size {n} exceeds population {model.population}")
    return kind


def boundary_lower(model: ModelSpec, kind, n: float, theta: float, delta: float) -> float:
    """Lower stage boundary ``f``, ``F_hat`` or ``f_c`` at ``(n, theta, delta)``.

    Args:
        model: Distribution family.
        kind: Boundary kind.
        n: Sample size (accumulated test time for life testing).
        theta: Parameter value at which the tail is evaluated.
        delta: Tail risk in (0, 1).

    Returns:
        The boundary on the estimator scale, ``-inf`` when no admissible value exists.
    """
    kind = _validate(model, kind, n, theta, delta)
    if delta == 1.0:
        # Every z <= theta qualifies; the clamp alone decides.
        return math.floor(n * theta + _GRID_EPS) / n if model.is_discrete else float(theta)
    if model.is_discrete:
        return _discrete_lower(model, kind, n, theta, delta)
    return float(_continuous_lower(model, kind, n, theta, delta))


def boundary_upper(model: ModelSpec, kind, n: float, theta: float, delta: float) -> float:
    """Upper stage boundary ``g``, ``G_hat`` or ``g_c``; ``+inf`` when empty."""
    kind = _validate(model, kind, n, theta, delta)
    if delta == 1.0:
        return math.ceil(n * theta - _GRID_EPS) / n if model.is_discrete else float(theta)
    if model.is_discrete:
        return _discrete_upper(model, kind, n, theta, delta)
    return float(_continuous_upper(model, kind, n, theta, delta))


def merge_boundaries(lower_raw: float, upper_raw: float) -> BoundaryPair:
    """Keep a non-crossing pair; collapse a crossing pair onto its midpoint."""
    if math.isnan(lower_raw) or math.isnan(upper_raw):
        raise ValueError("boundary values must not be NaN")
    if lower_raw < upper_raw:
        return BoundaryPair(lower_raw, upper_raw)
    if math.isinf(lower_raw) and math.isinf(upper_raw):
        raise ValueError(f"cannot merge infinite pair ({lower_raw}, {upper_raw})")
    mid = 0.5 * (lower_raw + upper_raw)
    return BoundaryPair(mid, mid)


# --------------------------------------------------------- t and F plans


def t_plan_thresholds(n: int, theta_lo: float, theta_hi: float, alpha: float, beta: float) -> BoundaryPair:
    """Thresholds for ``(mean - gamma)/std`` on the ``theta_hat`` scale.

    ``theta_hat * sqrt(n - 1)`` is the usual one-sample t statistic, so the
    pair below equals the t-scale thresholds divided by ``sqrt(n - 1)``.
    """
    if n < 2:
        raise ValueError(f"t-plan needs n >= 2, got {n}")
    if not theta_lo < theta_hi:
        raise ValueError("need theta_lo < theta_hi")
    _check_delta(alpha)
    _check_delta(beta)
    r = math.sqrt(n - 1)
    ta = dist.t_quantile(n - 1, alpha)
    tb = dist.t_quantile(n - 1, beta)
    if (theta_hi - theta_lo) * r < ta + tb:
        return BoundaryPair(theta_hi - tb / r, theta_lo + ta / r)
    mid = 0.5 * (theta_lo + theta_hi) + (ta - tb) / (2.0 * r)
    return BoundaryPair(mid, mid)


def _f_dof(nx: int, ny: int, means_known: bool) -> Tuple[int, int]:
    return (nx, ny) if means_known else (nx - 1, ny - 1)


def f_ratio_thresholds(
    nx: int,
    ny: int,
    theta_lo: float,
    theta_hi: float,
    alpha: float,
    beta: float,
    means_known: bool = True,
) -> BoundaryPair:
    """Thresholds for the variance ratio ``sigma_X**2 / sigma_Y**2``.

    The estimator is the ratio of mean squares (about the known means, or
    sample variances otherwise), which is ``theta`` times an F variable; the
    quantile used is therefore the standard F quantile.
    """
    if nx < 2 or ny < 2:
        raise ValueError("F-plan needs nx, ny >= 2")
    _check_delta(alpha)
    _check_delta(beta)
    d1, d2 = _f_dof(nx, ny, means_known)
    lower = theta_hi * dist.f_quantile(d1, d2, beta)
    upper = theta_lo * dist.f_quantile(d1, d2, 1.0 - alpha)
    return merge_boundaries(lower, upper)


# ------------------------------------------------------- terminal sample size


def _raw_pair(model: ModelSpec, kind, n: float, c: Constraint) -> Tuple[float, float]:
    fam = model.family
    if fam is Family.NORMAL_MEAN_OVER_STD:
        r = math.sqrt(n - 1)
        return (c.theta_hi - dist.t_quantile(n - 1, c.beta) / r, c.theta_lo + dist.t_quantile(n - 1, c.alpha) / r)
    if fam is Family.VARIANCE_RATIO:
        d1, d2 = _f_dof(int(n), int(n), model.means_known)
        return (c.theta_hi * dist.f_quantile(d1, d2, c.beta), c.theta_lo * dist.f_quantile(d1, d2, 1.0 - c.alpha))
    return (
        boundary_lower(model, kind, n, c.theta_hi, c.beta),
        boundary_upper(model, kind, n, c.theta_lo, c.alpha),
    )


def feasible(model: ModelSpec, kind, n: float, constraints: Sequence[Constraint]) -> bool:
    """Whether the raw boundaries cross, ``f(n, theta'', beta) >= g(n, theta', alpha)``, for all constraints."""
    for c in constraints:
        lo, up = _raw_pair(model, kind, n, c)
        if not lo >= up:
            return False
    return True


def _search_integer(pred: Callable[[int], bool], start: int, cap: int) -> int:
    n = start
    if pred(n):
        return n
    lo = n
    while True:
        hi = min(2 * lo, cap)
        if pred(hi):
            break
        if hi >= cap:
            raise NonTerminationError(f"no sample size <= {cap} satisfies the constraints")
        lo = hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def min_terminal_size(
    model: ModelSpec,
    kind,
    constraints: Sequence[Constraint],
    cap: int = HARD_CAP,
) -> int:
    """Smallest ``n`` at which every constraint's raw boundaries cross.

    Searches by doubling then bisection.  For lattice families the crossing
    criterion is not exactly monotone in ``n``; see :func:`scan_terminal_size`
    for the exhaustive alternative used when exactness matters.
    """
    constraints = list(constraints)
    if not constraints:
        raise ValueError("need at least one constraint")
    for c in constraints:
        if not c.theta_lo < c.theta_hi:
            raise NonTerminationError(f"empty indifference zone ({c.theta_lo}, {c.theta_hi})")
        for d in (c.alpha, c.beta):
            if not 0.0 < d <= 1.0:
                raise ValueError(f"risk must lie in (0, 1], got {d}")
    if model.family is Family.FINITE_POPULATION:
        cap = min(cap, model.population)
    start = max(1, model.min_size)
    pred = lambda n: feasible(model, kind, n, constraints)
    if model.is_discrete:
        return _discrete_terminal_size(pred, start, cap)
    return _search_integer(pred, start, cap)


def _discrete_terminal_size(pred: Callable[[int], bool], start: int, cap: int) -> int:
    # Lattice effects make the criterion non-monotone near its threshold; take
    # the first feasible n by scanning downward from the bisection result
    # until a run of infeasible sizes long enough to rule out stragglers.
    hi = _search_integer(pred, start, cap)
    best = hi
    misses = 0
    n = hi - 1
    window = max(16, hi // 4)
    while n >= start and misses < window:
        if pred(n):
            best = n
            misses = 0
        else:
            misses += 1
        n -= 1
    return best


def scan_terminal_size(model: ModelSpec, kind, constraints: Sequence[Constraint], cap: int = 100_000) -> int:
    """Linear-scan reference for :func:`min_terminal_size`."""
    start = max(1, model.min_size)
    for n in range(start, cap + 1):
        if feasible(model, kind, n, constraints):
            return n
    raise NonTerminationError(f"no sample size <= {cap} satisfies the constraints")


def _lower_count(model: ModelSpec, kind, t: float, c: Constraint) -> int:
    f = boundary_lower(model, kind, t, c.theta_hi, c.beta)
    return -1 if math.isinf(f) else int(round(f * t))


def _lower_jump_guess(kind, k: int, c: Constraint) -> Optional[float]:
    """Time at which the life-test lower count first reaches ``k``, from the tail root in the Poisson mean."""
    kind = BoundaryKind(kind)
    lt = math.log(_thr(c.beta))
    if kind is BoundaryKind.CHERNOFF:
        if k == 0:
            mu = -lt
        else:
            h = lambda mu: -mu + k + k * math.log(mu / k) - lt
            hi = 2.0 * k - lt + 1.0
            while h(hi) > 0:
                hi *= 2.0
            mu = optimize.brentq(h, k, hi, xtol=1e-14, rtol=1e-15)
    else:
        mu = float(special.gammainccinv(k + 1, _thr(c.beta)))
        if kind is BoundaryKind.EXACT:
            mu = max(mu, float(k))
    return mu / c.theta_hi if mu > 0 and math.isfinite(mu) else None


def min_test_time(kind, constraints: Sequence[Constraint], rtol: float = 1e-9) -> float:
    """Minimal accumulated test time at which every life-test constraint is met.

    Feasibility is not monotone in ``t``: the lower boundary count jumps up at
    isolated times while the upper one drifts up in between.  A set of
    constraints can only become feasible at a jump of some lower count, so the
    search brackets a feasible time by doubling and then checks those jump
    times in ascending order.
    """
    constraints = list(constraints)
    if not constraints:
        raise ValueError("need at least one constraint")
    for c in constraints:
        if not c.theta_lo < c.theta_hi:
            raise NonTerminationError(f"empty indifference zone ({c.theta_lo}, {c.theta_hi})")
    model = ModelSpec.life_test()
    pred = lambda t: feasible(model, kind, t, constraints)
    hi = 1.0 / max(c.theta_hi for c in constraints)
    while not pred(hi):
        hi *= 2.0
        if hi > HARD_CAP:
            raise NonTerminationError("no finite test time satisfies the constraints")
    floor_t = hi * 1e-9
    candidates = [hi]
    for c in constraints:
        count = lambda t: _lower_count(model, kind, t, c)
        for k in range(max(count(floor_t), -1) + 1, count(hi) + 1):
            t = _lower_jump_guess(kind, k, c)
            for _ in range(4):
                if t is None or not floor_t < t <= hi or count(t) >= k:
                    break
                t *= 1.0 + 1e-12
            if t is None or not floor_t < t <= hi or count(t) < k:
                lo, t = floor_t, hi
                while t - lo > rtol * t:
                    mid = 0.5 * (lo + t)
                    if count(mid) >= k:
                        t = mid
                    else:
                        lo = mid
            candidates.append(t)
    for t in sorted(candidates):
        if pred(t):
            return t
    return hi


def life_test_time(
    kind,
    lam_lo: float,
    lam_hi: float,
    delta_lo: float,
    delta_hi: float,
    rtol: float = 1e-9,
) -> float:
    """Minimal accumulated test time at which the life-test boundaries cross.

    Args:
        kind: Boundary kind.
        lam_lo: Lower indifference endpoint of the failure rate.
        lam_hi: Upper indifference endpoint.
        delta_lo: Risk for the upper boundary at ``lam_lo``.
        delta_hi: Risk for the lower boundary at ``lam_hi``.
        rtol: Relative tolerance on the returned time.
    """
    if not lam_lo < lam_hi:
        raise NonTerminationError("need lam_lo < lam_hi")
    return min_test_time(kind, [Constraint(lam_lo, lam_hi, delta_lo, delta_hi)], rtol)


# -------------------------------------------------------------- schedules


def sample_schedule(
    nbar: int,
    stages: int,
    ratio: float = 0.5,
    min_size: int = 1,
    parity: Optional[str] = None,
) -> list:
    """Ascending distinct sizes ``ceil(ratio**(s - l) * nbar)`` for ``l = 1..s``.

    Args:
        nbar: Terminal sample size.
        stages: Number of stages before de-duplication.
        ratio: Geometric ratio in (0, 1).
        min_size: Smallest admissible size.
        parity: ``"even"`` or ``"odd"`` to round each size up to that parity.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    if stages < 1 or nbar < 1:
        raise ValueError("need stages >= 1 and nbar >= 1")
    sizes = []
    for ell in range(1, stages + 1):
        x = ratio ** (stages - ell) * nbar
        n = max(math.ceil(x - 1e-9 * x), min_size)
        if parity is not None:
            want = 0 if parity == "even" else 1
            if n % 2 != want:
                n += 1
        sizes.append(n)
    return sorted(set(sizes))


def default_stage_count(nbar: int, ratio: float = 0.5) -> int:
    """Largest ``s`` whose first size stays at least ``max(2, ceil(0.05 * nbar))``."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    floor_size = max(2, math.ceil(0.05 * nbar))
    if nbar <= floor_size:
        return 1
    s = 1
    while math.ceil(ratio**s * nbar) >= floor_size:
        s += 1
    return s
