"""Exact crossing probabilities for partial sums of unit exponentials.

``S_k = Z_1 + ... + Z_k`` with ``Z_q`` i.i.d. unit exponentials.  The survival
``Pr{S_{k_j} > z_j for all j}`` is computed by a triangular recursion that is
equivalent to counting arrivals of a unit-rate Poisson process: ``S_k > z``
exactly when fewer than ``k`` arrivals occur by time ``z``.  Band
probabilities follow by inclusion-exclusion over the two endpoints of every
band.

Plans for the exponential, integer-shape gamma and normal-variance families
map onto these sums: the estimator at stage ``l`` is a fixed multiple (or
square root of a multiple) of ``S_{k_l}`` for nested ``k_l``.
"""

from __future__ import annotations

import enum
import itertools
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..models import Family
from ..plans import TestPlan
from .report import ExactUnavailableError, OCReport

__all__ = [
    "gamma_sum_survival",
    "CrossingMode",
    "band_crossing_probability",
    "GammaSumEngine",
    "oc_exact_gamma",
    "STAGE_CAP",
]

STAGE_CAP = 12


class StageCapError(ExactUnavailableError):
    """Too many stages for inclusion-exclusion; fall back to simulation."""


def _canonical(ks: Sequence[int], zs: Sequence[float]) -> Optional[Tuple[Tuple[int, float], ...]]:
    """Drop implied constraints; ``None`` signals probability zero.

    ``S_{k_j} > z_j`` is implied by an earlier kept ``S_{k_i} > z_i`` whenever
    ``z_j <= z_i`` because the partial sums increase, and is vacuous for ``z_j <= 0``.
    """
    kept: List[Tuple[int, float]] = []
    top = 0.0
    for k, z in zip(ks, zs):
        if math.isinf(z):
            return None
        if z > top:
            kept.append((int(k), float(z)))
            top = z
    return tuple(kept)


class _Survival:
    """Memoized ``Pr{S_{k_j} > z_j, j <= l}`` keyed by canonical prefixes."""

    def __init__(self):
        self._tables: Dict[Tuple[Tuple[int, float], ...], np.ndarray] = {(): np.ones(1)}

    def table(self, row: Tuple[Tuple[int, float], ...]) -> np.ndarray:
        """Scaled weights ``e^{-z_l} w(l, q)`` for ``q = 1..k_l`` (index ``q - 1``)."""
        hit = self._tables.get(row)
        if hit is not None:
            return hit
        prefixes = [self.table(row[:r]) for r in range(len(row))]
        k_l, z_l = row[-1]
        out = np.empty(k_l)
        ks = [1] + [k for k, _ in row[:-1]]
        zs = [0.0] + [z for _, z in row[:-1]]
        bounds = ks[1:] + [k_l]
        for r in range(len(row)):
            q_lo, q_hi = (1 if r == 0 else ks[r] + 1), bounds[r]
            if q_hi < q_lo:
                continue
            prev = prefixes[r]
            pmf = stats.poisson.pmf(np.arange(q_hi), z_l - zs[r])
            conv = np.convolve(prev, pmf)[: q_hi]
            out[q_lo - 1 : q_hi] = conv[q_lo - 1 : q_hi]
        self._tables[row] = out
        return out

    def __call__(self, ks: Sequence[int], zs: Sequence[float]) -> float:
        row = _canonical(ks, zs)
        if row is None:
            return 0.0
        if not row:
            return 1.0
        return min(1.0, math.fsum(self.table(row)))


def gamma_sum_survival(ks: Sequence[int], zs: Sequence[float]) -> float:
    """``Pr{S_{k_j} > z_j for all j}`` for ascending ``ks`` and ``zs``.

    Args:
        ks: Strictly ascending positive counts.
        zs: Strictly ascending positive levels.

    Example:
        >>> round(gamma_sum_survival([2], [1.0]), 6)
        0.735759
    """
    ks, zs = list(ks), list(zs)
    if len(ks) != len(zs) or not ks:
        raise ValueError("ks and zs must be non-empty and of equal length")
    if any(k < 1 or int(k) != k for k in ks) or any(a >= b for a, b in zip(ks, ks[1:])):
        raise ValueError("ks must be strictly ascending positive integers")
    if any(z <= 0 for z in zs) or any(a >= b for a, b in zip(zs, zs[1:])):
        raise ValueError("zs must be strictly ascending and positive")
    return _Survival()(ks, zs)


class CrossingMode(str, enum.Enum):
    ALL_INSIDE = "all-inside"
    INSIDE_THEN_ABOVE = "inside-then-above"
    INSIDE_THEN_BELOW = "inside-then-below"


def _signed_rows(a: Sequence[float], b: Sequence[float]):
    """Rows of the A and B matrices: ``(+1, row)`` for A and ``(-1, row)`` for B."""
    rows = [(1, (a[0],)), (-1, (b[0],))]
    for j in range(1, len(a)):
        nxt = []
        for sign, row in rows:
            nxt.append((sign, row + (a[j],)))
            nxt.append((-sign, row + (b[j],)))
        rows = nxt
    return rows


class GammaSumEngine:
    """Band probabilities with a shared survival cache."""

    def __init__(self, cap: int = STAGE_CAP):
        self.cap = cap
        self._surv = _Survival()

    def all_inside(self, a: Sequence[float], b: Sequence[float], ks: Sequence[int]) -> float:
        if len(a) > self.cap:
            raise StageCapError(f"{len(a)} stages exceed the cap of {self.cap}; use simulation")
        terms = [sign * self._surv(ks, row) for sign, row in _signed_rows(a, b)]
        return max(0.0, math.fsum(terms))

    def inside_then_above(self, a, b, ks) -> float:
        ell = len(a) - 1
        if ell + 1 > self.cap:
            raise StageCapError(f"{ell + 1} stages exceed the cap of {self.cap}; use simulation")
        if ell == 0:
            return self._surv(ks[:1], (b[0],))
        terms = [sign * self._surv(ks, row + (b[ell],)) for sign, row in _signed_rows(a[:ell], b[:ell])]
        return max(0.0, math.fsum(terms))

    def inside_then_below(self, a, b, ks) -> float:
        ell = len(a) - 1
        if ell == 0:
            return 1.0 - self._surv(ks[:1], (b[0],))
        return max(0.0, self.all_inside(a[:ell], b[:ell], ks[:ell]) - self.inside_then_above(a, b, ks))


def band_crossing_probability(
    a: Sequence[float],
    b: Sequence[float],
    ks: Sequence[int],
    mode=CrossingMode.ALL_INSIDE,
    cap: int = STAGE_CAP,
) -> float:
    """Probability that partial sums stay inside bands, optionally leaving at the last stage.

    Args:
        a: Lower band edges, one per stage.
        b: Upper band edges, one per stage (``+inf`` allowed).
        ks: Strictly ascending counts.
        mode: ``ALL_INSIDE``: ``a_j < S_{k_j} < b_j`` for every ``j``.
            ``INSIDE_THEN_ABOVE``: inside for ``j < L`` and ``S_{k_L} > b_L``.
            ``INSIDE_THEN_BELOW``: inside for ``j < L`` and ``S_{k_L} < b_L``
            (``a_L`` is ignored in both exit modes).
        cap: Maximum number of stages.
    """
    a, b, ks = list(map(float, a)), list(map(float, b)), list(ks)
    if not (len(a) == len(b) == len(ks)) or not a:
        raise ValueError("a, b and ks must be non-empty and of equal length")
    if any(x >= y for x, y in zip(ks, ks[1:])):
        raise ValueError("ks must be strictly ascending")
    mode = CrossingMode(mode)
    if any(not 0 <= x < y for x, y in zip(a, b)) and mode is CrossingMode.ALL_INSIDE:
        raise ValueError("need 0 <= a_j < b_j")
    eng = GammaSumEngine(cap)
    if mode is CrossingMode.ALL_INSIDE:
        return eng.all_inside(a, b, ks)
    if mode is CrossingMode.INSIDE_THEN_ABOVE:
        return eng.inside_then_above(a, b, ks)
    return eng.inside_then_below(a, b, ks)


# ---------------------------------------------------------------- plans


def _gamma_map(plan: TestPlan, theta: float):
    """Per-stage counts ``k_l`` and the estimator-to-sum map for ``plan``."""
    model = plan.model
    fam = model.family
    sizes = [int(n) for n in plan.sizes]
    if fam in (Family.EXPONENTIAL, Family.GAMMA_SCALE):
        shape = model.shape
        if shape != int(shape):
            raise ExactUnavailableError("gamma shape must be an integer for the exact engine")
        ks = [n * int(shape) for n in sizes]
        scale = [k / theta for k in ks]
        return ks, [lambda v, c=c: c * v for c in scale]
    if fam in (Family.NORMAL_STD_KNOWN_MEAN, Family.NORMAL_STD_UNKNOWN_MEAN):
        want = 0 if fam is Family.NORMAL_STD_KNOWN_MEAN else 1
        if any(n % 2 != want for n in sizes):
            raise ExactUnavailableError("stage sizes must be even (known mean) or odd (unknown mean)")
        ks = [n // 2 for n in sizes] if want == 0 else [(n - 1) // 2 for n in sizes]
        scale = [0.5 * n / theta**2 for n in sizes]

        def square(v, c):
            return c * max(v, 0.0) ** 2 if not math.isinf(v) else (math.inf if v > 0 else 0.0)

        return ks, [lambda v, c=c: square(v, c) for c in scale]
    raise ExactUnavailableError(f"no gamma-sum engine for {fam.value}")


def _to_z(fn, v: float) -> float:
    if math.isinf(v):
        return math.inf if v > 0 else 0.0
    return max(0.0, fn(v))


def oc_exact_gamma(plan: TestPlan, theta: float, engine: Optional[GammaSumEngine] = None) -> OCReport:
    """Exact OC for exponential, integer-shape gamma and normal-variance plans.

    Each acceptance at stage ``l`` is a union over continuation-band paths of
    events ``{S_{k_j} in band_j, j < l; S_{k_l} in acceptance interval}``, each
    an all-inside probability.
    """
    plan.model.check_parameter(theta)
    if plan.s > STAGE_CAP:
        raise StageCapError(f"{plan.s} stages exceed the cap of {STAGE_CAP}; use simulation")
    ks, maps = _gamma_map(plan, theta)
    eng = engine or GammaSumEngine()
    m, s = plan.m, plan.s
    f, g = plan.lower_array, plan.upper_array
    accept = [[] for _ in range(m)]
    stop = [[] for _ in range(s)]
    cont_bands: List[List[Tuple[float, float]]] = []
    for ell in range(s):
        fn = maps[ell]
        zf = [_to_z(fn, v) for v in f[ell]]
        zg = [_to_z(fn, v) for v in g[ell]]
        acc = [(0.0, zf[0])] + [(zg[h - 1], zf[h]) for h in range(1, m - 1)] + [(zg[m - 2], math.inf)]
        for h, (lo, hi) in enumerate(acc):
            if not lo < hi:
                continue
            for path in itertools.product(*cont_bands):
                a = [p[0] for p in path] + [lo]
                b = [p[1] for p in path] + [hi]
                accept[h].append(eng.all_inside(a, b, ks[: ell + 1]))
                stop[ell].append(accept[h][-1])
        cont_bands.append([(zf[i], zg[i]) for i in range(m - 1) if zf[i] < zg[i]])
        if not cont_bands[-1]:
            break
    accept_prob = tuple(min(1.0, math.fsum(v)) for v in accept)
    stop_prob = tuple(math.fsum(v) for v in stop)
    total = math.fsum(stop_prob)
    asn = math.fsum(n * q for n, q in zip(plan.sizes, stop_prob)) / total if total > 0 else float(plan.sizes[-1])
    return OCReport(
        theta=float(theta),
        accept_prob=accept_prob,
        stop_prob=stop_prob,
        asn=asn,
        trunc_error=0.0,
        method="exact-gamma",
    )
