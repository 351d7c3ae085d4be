"""Exact OC recursion for count-based estimators (binomial, Poisson, hypergeometric).

The running count ``K_l = n_l * theta_hat_l`` is propagated stage by stage:
mass that stops at stage ``l`` is booked to the accepted hypothesis, mass
that continues is convolved with the increment law of the next batch.  Each
stage's count is confined to a window holding all but ``eta = eps / s`` of the
marginal law of ``K_l``; dropped mass is summed into ``trunc_error``.
"""

from __future__ import annotations

import math
from typing import List

import numpy as np
from scipy import stats

from ..dist import poisson_tail_cut
from ..models import Family
from ..plans import TestPlan, decide
from .report import OCReport

POISSON_TAIL = 1e-300


def _marginal(plan: TestPlan, n: float, theta: float):
    fam = plan.model.family
    if fam is Family.BERNOULLI:
        return stats.binom(int(n), theta)
    if fam in (Family.POISSON, Family.LIFE_TEST_POISSON):
        return stats.poisson(n * theta)
    N = plan.model.population
    return stats.hypergeom(N, int(round(theta * N)), int(n))


def _support(plan: TestPlan, n: float, theta: float, law) -> tuple:
    fam = plan.model.family
    if fam is Family.BERNOULLI:
        if theta == 0.0:
            return 0, 0
        if theta == 1.0:
            return int(n), int(n)
        return 0, int(n)
    if fam is Family.FINITE_POPULATION:
        lo, hi = law.support()
        return int(lo), int(hi)
    if n * theta == 0.0:
        return 0, 0
    return 0, poisson_tail_cut(n * theta, POISSON_TAIL)


def _window(plan: TestPlan, n: float, theta: float, eta: float) -> tuple:
    law = _marginal(plan, n, theta)
    lo, hi = _support(plan, n, theta, law)
    if eta > 0:
        u = int(law.ppf(0.5 * eta))
        if plan.model.family in (Family.POISSON, Family.LIFE_TEST_POISSON):
            v = poisson_tail_cut(n * theta, 0.5 * eta)
        else:
            v = int(law.isf(0.5 * eta))
        lo, hi = max(lo, u), min(hi, max(v, u))
    return lo, hi


def _increment_pmf(plan: TestPlan, dn: float, theta: float) -> np.ndarray:
    fam = plan.model.family
    if fam is Family.BERNOULLI:
        j = np.arange(int(dn) + 1)
        return stats.binom.pmf(j, int(dn), theta)
    mu = dn * theta
    if mu == 0.0:
        return np.ones(1)
    top = poisson_tail_cut(mu, POISSON_TAIL)
    return stats.poisson.pmf(np.arange(top + 1), mu)


def _advance_hypergeom(plan: TestPlan, p: np.ndarray, lo: int, n_prev: int, n_next: int, theta: float) -> tuple:
    """Distribution of ``K`` after drawing ``n_next - n_prev`` more units without replacement."""
    N = plan.model.population
    M = int(round(theta * N))
    dn = n_next - n_prev
    rest = N - n_prev
    out = np.zeros(p.size + dn)
    j = np.arange(dn + 1)
    for idx in np.nonzero(p)[0]:
        k = lo + idx
        out[idx : idx + dn + 1] += p[idx] * stats.hypergeom.pmf(j, rest, M - k, dn)
    return out, lo


def oc_exact_discrete(plan: TestPlan, theta: float, epsilon: float = 1e-10) -> OCReport:
    """Exact OC, stage-stop distribution and ASN for a count-based plan.

    Args:
        plan: A Bernoulli, Poisson, finite-population or life-test plan.
        theta: Parameter value.
        epsilon: Total truncation budget; 0 keeps the full support.

    Returns:
        OCReport whose probabilities are exact up to ``trunc_error <= epsilon``
        (plus floating-point rounding).
    """
    model = plan.model
    if not model.is_discrete:
        raise ValueError(f"{model.family.value} has no count recursion")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    model.check_parameter(theta)
    s, m = plan.s, plan.m
    eta = epsilon / s
    accept = [[] for _ in range(m)]
    stop: List[List[float]] = [[] for _ in range(s)]
    dropped: List[float] = []

    n_prev = 0
    lo = 0
    p = np.ones(1)  # K_0 = 0 with probability one
    for ell, n in enumerate(plan.sizes):
        # Propagate continuing mass to stage ell.
        if model.family is Family.FINITE_POPULATION:
            p, lo = _advance_hypergeom(plan, p, lo, int(n_prev), int(n), theta)
        else:
            p = np.convolve(p, _increment_pmf(plan, n - n_prev, theta))
        w_lo, w_hi = _window(plan, n, theta, eta)
        hi = lo + p.size - 1
        a, b = max(lo, w_lo), min(hi, w_hi)
        if a > b:
            dropped.append(math.fsum(p))
            p, lo = np.zeros(1), a
        else:
            dropped.append(math.fsum(p[: a - lo]) + math.fsum(p[b - lo + 1 :]))
            p, lo = p[a - lo : b - lo + 1], a
        k = np.arange(lo, lo + p.size)
        est = k / n
        d = decide(plan.lower[ell], plan.upper[ell], est)
        for h in range(m):
            mass = p[d == h + 1]
            accept[h].append(math.fsum(mass))
        stop[ell].append(math.fsum(p[d != 0]))
        p = np.where(d == 0, p, 0.0)
        n_prev = n

    if np.any(p > 0):
        dropped.append(math.fsum(p))  # unreachable for closed plans
    accept_prob = tuple(min(1.0, math.fsum(v)) for v in accept)
    stop_prob = tuple(math.fsum(v) for v in stop)
    total = math.fsum(stop_prob)
    asn = math.fsum(n * q for n, q in zip(plan.sizes, stop_prob)) / total if total > 0 else float(plan.sizes[-1])
    return OCReport(
        theta=float(theta),
        accept_prob=accept_prob,
        stop_prob=stop_prob,
        asn=asn,
        trunc_error=math.fsum(dropped),
        method="exact-discrete",
    )
