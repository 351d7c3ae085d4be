"""Independent reference computations used across the test suite.

None of these reuse the package's probability engines: they enumerate paths,
integrate with mpmath, or simulate with numpy's own generator.
"""

from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np

from mstage.plans import decide


def bernoulli_paths_oc(plan, p: float) -> np.ndarray:
    """Acceptance probabilities by enumerating all ``2**n_s`` sample paths."""
    ns = [int(n) for n in plan.sizes]
    N = ns[-1]
    acc = [[] for _ in range(plan.m)]
    for bits in itertools.product((0, 1), repeat=N):
        ones = sum(bits)
        w = p**ones * (1.0 - p) ** (N - ones)
        csum = np.cumsum(bits)
        for ell, n in enumerate(ns):
            d = int(decide(plan.lower[ell], plan.upper[ell], csum[n - 1] / n))
            if d:
                acc[d - 1].append(w)
                break
    return np.array([math.fsum(a) for a in acc])


def bernoulli_paths_reject_split(plan, p: float, i: int, a: float, b: float):
    """``Pr{reject H_i, est <= a}`` and ``Pr{reject H_i, est >= b}`` by path enumeration."""
    ns = [int(n) for n in plan.sizes]
    N = ns[-1]
    low, high = [], []
    for bits in itertools.product((0, 1), repeat=N):
        ones = sum(bits)
        w = p**ones * (1.0 - p) ** (N - ones)
        csum = np.cumsum(bits)
        for ell, n in enumerate(ns):
            est = csum[n - 1] / n
            d = int(decide(plan.lower[ell], plan.upper[ell], est))
            if d:
                if d - 1 != i:
                    if est <= a:
                        low.append(w)
                    if est >= b:
                        high.append(w)
                break
    return math.fsum(low), math.fsum(high)


def erlang_survival_mp(k: int, z: float, dps: int = 40) -> float:
    """``Pr{Gamma(k, 1) > z}`` as a Poisson CDF in high precision."""
    with mpmath.workdps(dps):
        z = mpmath.mpf(z)
        return float(mpmath.fsum(mpmath.exp(-z) * z**q / mpmath.factorial(q) for q in range(k)))


def mc_band_crossing(a, b, ks, mode: str, reps: int, seed: int, chunk: int = 200_000):
    """Monte Carlo estimate and standard error of a band-crossing probability."""
    rng = np.random.default_rng(seed)
    ks = list(ks)
    hits = 0
    done = 0
    while done < reps:
        r = min(chunk, reps - done)
        inc = np.diff([0] + ks)
        sums = np.cumsum(np.stack([rng.gamma(k, 1.0, r) for k in inc], axis=1), axis=1)
        inside = (sums > np.asarray(a)) & (sums < np.asarray(b))
        L = len(ks) - 1
        if mode == "all-inside":
            ok = inside.all(axis=1)
        elif mode == "inside-then-above":
            ok = inside[:, :L].all(axis=1) & (sums[:, L] > b[L])
        else:
            ok = inside[:, :L].all(axis=1) & (sums[:, L] < b[L])
        hits += int(ok.sum())
        done += r
    p = hits / reps
    return p, math.sqrt(max(p * (1 - p), 1e-300) / reps)


def binom_tail_mp(n: int, p: float, k: int, upper: bool, dps: int = 50) -> float:
    """Exact binomial tail ``Pr{K <= k}`` or ``Pr{K >= k}`` in high precision."""
    with mpmath.workdps(dps):
        pp = mpmath.mpf(p)
        rng = range(k, n + 1) if upper else range(0, k + 1)
        return float(mpmath.fsum(mpmath.binomial(n, j) * pp**j * (1 - pp) ** (n - j) for j in rng))


def poisson_tail_mp(mu: float, k: int, upper: bool, dps: int = 50) -> float:
    """Exact Poisson tail ``Pr{K <= k}`` or ``Pr{K >= k}`` via the incomplete gamma."""
    with mpmath.workdps(dps):
        m = mpmath.mpf(mu)
        if upper:
            return 1.0 if k <= 0 else float(mpmath.gammainc(k, 0, m, regularized=True))
        return float(mpmath.gammainc(k + 1, m, mpmath.inf, regularized=True))


def hypergeom_tail_exact(N: int, K: int, n: int, k: int, upper: bool):
    """Exact hypergeometric tail as a ``Fraction``."""
    from fractions import Fraction

    total = math.comb(N, n)
    rng = range(k, n + 1) if upper else range(0, k + 1)
    num = sum(math.comb(K, j) * math.comb(N - K, n - j) for j in rng if 0 <= j <= K and 0 <= n - j <= N - K)
    return Fraction(num, total)
