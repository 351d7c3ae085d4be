"""Seeded Monte Carlo for plans: per-family samplers, plan runs and OC estimates.

Replication ``r`` draws its observations from the Philox substream
``(seed, r)``, so a report depends only on ``(plan, theta, reps, seed)``,
whatever the batch size or number of workers.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import special, stats

from .dist import poisson_tail_cut
from .models import Family, ModelSpec
from .oc.report import OCReport
from .plans import TestPlan, decide, stage_estimates
from .rng import DEFAULT_SEED, uniforms

__all__ = [
    "SimReport",
    "SimOutcomes",
    "sample_observations",
    "finite_population_path",
    "simulate_outcomes",
    "simulate_plan",
    "oc_simulate",
]

_LANE_X = 0
_LANE_Y = 1
_LANE_COUNT = 2
DEFAULT_BATCH = 4096


@dataclass(frozen=True)
class SimReport:
    """Monte Carlo summary of a plan at one parameter value.

    Attributes:
        reps: Number of replications.
        accept_freq: Fraction of replications accepting each hypothesis.
        asn_hat: Mean samples used (test time for life testing).
        se: Standard errors of ``accept_freq``, ``sqrt(p(1 - p) / reps)``.
        asn_se: Standard error of ``asn_hat``.
        stop_freq: Fraction of replications stopping at each stage.
        max_samples: Largest number of samples used by any replication.
        seed: Master seed.
    """

    reps: int
    accept_freq: Tuple[float, ...]
    asn_hat: float
    se: Tuple[float, ...]
    asn_se: float
    stop_freq: Tuple[float, ...]
    max_samples: float
    seed: int

    def to_json(self) -> str:
        """Canonical JSON with ``repr``-exact floats."""
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class SimOutcomes:
    """Per-replication results, indexed by replication number."""

    accepted: np.ndarray
    stage: np.ndarray
    samples_used: np.ndarray


# ----------------------------------------------------------------- samplers


def _path_length(plan: TestPlan) -> int:
    return int(plan.sizes[-1])


def finite_population_path(N: int, K: int, n: int, seed: int = DEFAULT_SEED, rep: int = 0) -> np.ndarray:
    """Sequential draws without replacement from ``K`` ones among ``N`` units.

    Args:
        N: Population size.
        K: Number of ones (defectives) in the population.
        n: Path length.
        seed: Master seed.
        rep: Replication index selecting the substream.

    Returns:
        ``int8`` array of length ``n``.
    """
    if not (0 <= K <= N and 0 <= n <= N):
        raise ValueError("need 0 <= K <= N and 0 <= n <= N")
    return _fp_paths(N, K, uniforms(seed, [rep], n, _LANE_X))[0]


def _fp_paths(N: int, K: int, u: np.ndarray) -> np.ndarray:
    reps, n = u.shape
    out = np.empty((reps, n), dtype=np.int8)
    ones = np.zeros(reps, dtype=np.int64)
    for i in range(n):
        x = u[:, i] * (N - i) < (K - ones)
        out[:, i] = x
        ones += x
    return out


def _poisson_inverse(u: np.ndarray, mu: float) -> np.ndarray:
    """Poisson inverse CDF by table lookup: smallest ``k`` with ``F(k) >= u``."""
    if mu == 0:
        return np.zeros_like(u)
    top = poisson_tail_cut(mu, 1e-17)
    cdf = stats.poisson.cdf(np.arange(top + 1), mu)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, u, side="left").astype(float)


def _normal(u: np.ndarray) -> np.ndarray:
    return special.ndtri(u)


def _life_test_times(t_end: float, theta: float, seed: int, reps: np.ndarray) -> np.ndarray:
    """Failure times on the accumulated-time axis, padded with ``inf``.

    The failure count on ``[0, t_end]`` is Poisson, and given the count the
    times are ordered uniforms.
    """
    mu = theta * t_end
    c = uniforms(seed, reps, 1, _LANE_COUNT)[:, 0]
    counts = _poisson_inverse(c, mu).astype(np.int64)
    width = int(counts.max(initial=0))
    u = uniforms(seed, reps, width, _LANE_X)
    times = u * t_end
    times[np.arange(width)[None, :] >= counts[:, None]] = np.inf
    return np.sort(times, axis=1)


def sample_observations(
    model: ModelSpec, theta: float, n: int, seed: int, reps, *, t_end: Optional[float] = None
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Observation paths for a batch of replications by inverse-CDF sampling.

    Args:
        model: Distribution family.
        theta: Parameter value (the tested parameter of ``model``).
        n: Path length (first sample); also used for the second sample of
            variance-ratio models.
        seed: Master seed.
        reps: Replication indices.
        t_end: Total test time for life testing.

    Returns:
        ``(x, y)`` with ``y`` only for variance-ratio models.

    Raises:
        ValueError: ``theta`` is outside the parameter space.
    """
    model.check_parameter(theta)
    reps = np.asarray(reps, dtype=np.int64).reshape(-1)
    fam = model.family
    if fam is Family.LIFE_TEST_POISSON:
        if t_end is None:
            raise ValueError("life testing needs t_end")
        return _life_test_times(t_end, theta, seed, reps), None
    u = uniforms(seed, reps, n, _LANE_X)
    if fam is Family.BERNOULLI:
        return (u < theta).astype(np.int8), None
    if fam is Family.FINITE_POPULATION:
        N = model.population
        return _fp_paths(N, int(round(theta * N)), u), None
    if fam is Family.POISSON:
        return _poisson_inverse(u, theta), None
    if fam is Family.NORMAL_MEAN:
        return theta + model.sigma * _normal(u), None
    if fam is Family.NORMAL_STD_KNOWN_MEAN:
        return model.mu + theta * _normal(u), None
    if fam is Family.NORMAL_STD_UNKNOWN_MEAN:
        return theta * _normal(u), None
    if fam in (Family.EXPONENTIAL, Family.GAMMA_SCALE):
        k = model.shape
        return (theta / k) * special.gammaincinv(k, u), None
    if fam is Family.NORMAL_MEAN_OVER_STD:
        # Scale invariance: unit sigma, mean gamma + theta.
        return model.mu + theta + _normal(u), None
    if fam is Family.VARIANCE_RATIO:
        v = uniforms(seed, reps, n, _LANE_Y)
        mx = model.mu if model.means_known else 0.0
        my = model.mu_y if model.means_known else 0.0
        return mx + math.sqrt(theta) * _normal(u), my + _normal(v)
    raise ValueError(f"no sampler for {fam.value}")


# ------------------------------------------------------------------ running


def _run_batch(plan: TestPlan, theta: float, seed: int, reps: np.ndarray):
    model = plan.model
    ny_max = int(plan.sizes_y[-1]) if plan.sizes_y is not None else 0
    n = max(_path_length(plan), ny_max)
    t_end = plan.sizes[-1] if model.continuous_time else None
    x, y = sample_observations(model, theta, n, seed, reps, t_end=t_end)
    d = np.zeros(reps.size, dtype=np.int64)
    stage = np.zeros(reps.size, dtype=np.int64)
    for ell, size in enumerate(plan.sizes):
        ny = plan.sizes_y[ell] if plan.sizes_y is not None else None
        live = d == 0
        if not live.any():
            break
        est = stage_estimates(model, x[live], size, None if y is None else y[live], ny)
        dd = decide(plan.lower[ell], plan.upper[ell], est)
        idx = np.nonzero(live)[0]
        d[idx] = dd
        stage[idx[dd != 0]] = ell + 1
    if np.any(d == 0):
        raise RuntimeError("terminal stage produced no decision")
    sizes = np.asarray(plan.sizes, dtype=float)
    return d - 1, stage, sizes[stage - 1]


def simulate_outcomes(
    plan: TestPlan,
    theta: float,
    reps: int,
    seed: int = DEFAULT_SEED,
    *,
    batch: int = DEFAULT_BATCH,
    workers: int = 1,
) -> SimOutcomes:
    """Run ``reps`` replications and return each one's decision.

    Batches may execute concurrently (``workers > 1``); results are placed
    by replication index so the output does not depend on scheduling.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if batch < 1:
        raise ValueError("batch must be at least 1")
    accepted = np.empty(reps, dtype=np.int64)
    stage = np.empty(reps, dtype=np.int64)
    used = np.empty(reps, dtype=float)
    starts = list(range(0, reps, batch))

    def work(start: int) -> None:
        idx = np.arange(start, min(start + batch, reps))
        a, s, n = _run_batch(plan, theta, seed, idx)
        accepted[idx], stage[idx], used[idx] = a, s, n

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, starts))
    else:
        for start in starts:
            work(start)
    return SimOutcomes(accepted, stage, used)


def simulate_plan(
    plan: TestPlan,
    theta: float,
    reps: int,
    seed: int = DEFAULT_SEED,
    *,
    batch: int = DEFAULT_BATCH,
    workers: int = 1,
) -> SimReport:
    """Monte Carlo OC and ASN estimates of ``plan`` at ``theta``.

    Args:
        plan: Any plan.
        theta: Parameter value.
        reps: Number of replications.
        seed: 64-bit master seed.
        batch: Replications per vectorized batch.
        workers: Threads used to run batches.

    Example:
        >>> from mstage import ModelSpec, TestShape, build_plan
        >>> plan = build_plan(ModelSpec.bernoulli(), TestShape.one_sided(0.3, 0.7, 0.1, 0.1), zeta=1.0)
        >>> simulate_plan(plan, 0.5, 100, seed=1) == simulate_plan(plan, 0.5, 100, seed=1)
        True
    """
    out = simulate_outcomes(plan, theta, reps, seed, batch=batch, workers=workers)
    counts = np.bincount(out.accepted, minlength=plan.m)
    freq = tuple(float(c) / reps for c in counts)
    stops = np.bincount(out.stage - 1, minlength=plan.s)
    asn_hat = float(np.sum(out.samples_used)) / reps
    asn_se = float(np.std(out.samples_used)) / math.sqrt(reps)
    return SimReport(
        reps=int(reps),
        accept_freq=freq,
        asn_hat=asn_hat,
        se=tuple(math.sqrt(p * (1.0 - p) / reps) for p in freq),
        asn_se=asn_se,
        stop_freq=tuple(float(c) / reps for c in stops),
        max_samples=float(out.samples_used.max()),
        seed=int(seed),
    )


def oc_simulate(plan: TestPlan, theta: float, reps: int = 100_000, seed: int = DEFAULT_SEED, workers: int = 1) -> OCReport:
    """Simulated OC in the same report type as the exact engines."""
    r = simulate_plan(plan, theta, reps, seed, workers=workers)
    return OCReport(
        theta=float(theta),
        accept_prob=r.accept_freq,
        stop_prob=r.stop_freq,
        asn=r.asn_hat,
        trunc_error=0.0,
        method="simulation",
        se=r.se,
    )
