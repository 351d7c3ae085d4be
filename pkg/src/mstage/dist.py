"""Special functions: quantiles, exact discrete tails, and Chernoff rate functions.

Quantile conventions follow the test-design literature rather than a single
rule, and they differ on purpose:

* ``normal_quantile(d)`` is the *upper* critical value ``Z_d`` with ``Phi(Z_d) = 1 - d``.
* ``chi_square_quantile(df, a)`` is the *lower* ``100 a %`` percentile.
* ``t_quantile(df, a)`` is the *upper* critical value: ``Pr{T <= t} = 1 - a``.
* ``chi2_ratio_quantile(d1, d2, a)`` is the lower quantile of the raw ratio ``U/V``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np
from scipy import special

from .models import Family, ModelSpec

__all__ = [
    "poisson_tail_cut",
    "TailSide",
    "Binomial",
    "Poisson",
    "Hypergeometric",
    "normal_quantile",
    "chi_square_quantile",
    "t_quantile",
    "f_quantile",
    "chi2_ratio_quantile",
    "discrete_tail",
    "rate_function",
    "log_chernoff_bound",
    "hypergeom_chernoff_bound",
    "log_hypergeom_chernoff_bound",
]


class TailSide(str, enum.Enum):
    LOWER = "lower"  # Pr{Z <= z}
    UPPER = "upper"  # Pr{Z >= z}


def _check_prob(name: str, p: float) -> None:
    if not (0.0 < p < 1.0):
        raise ValueError(f"{name} must lie in (0, 1), got {p}")


def _check_df(df: float) -> None:
    if not df >= 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {df}")


# ---------------------------------------------------------------- quantiles


def normal_quantile(delta: float) -> float:
    """Upper critical value ``Z_delta`` of the standard normal, ``Phi(Z) = 1 - delta``."""
    _check_prob("delta", delta)
    return float(-special.ndtri(delta))


def chi_square_quantile(df: float, alpha: float) -> float:
    """Lower ``alpha`` percentile of the chi-square law with ``df`` degrees of freedom.

    Inverts the regularized incomplete gamma, then applies one Newton step on
    whichever tail is smaller so that extreme ``alpha`` keep full relative accuracy.
    """
    _check_df(df)
    _check_prob("alpha", alpha)
    a = 0.5 * df
    if alpha <= 0.5:
        x = special.gammaincinv(a, alpha)
        resid = special.gammainc(a, x) - alpha
    else:
        x = special.gammainccinv(a, 1.0 - alpha)
        resid = (1.0 - alpha) - special.gammaincc(a, x)
    dens = math.exp((a - 1.0) * math.log(x) - x - special.gammaln(a)) if x > 0 else 0.0
    if dens > 0 and math.isfinite(dens):
        x_new = x - resid / dens
        if x_new > 0:
            x = x_new
    return float(2.0 * x)


def t_quantile(df: float, alpha: float) -> float:
    """Upper critical value of Student's t: ``Pr{T_df <= t} = 1 - alpha``."""
    _check_df(df)
    _check_prob("alpha", alpha)
    return float(-special.stdtrit(df, alpha))


def f_quantile(d1: float, d2: float, alpha: float) -> float:
    """Lower ``alpha`` quantile of the F law ``(U/d1)/(V/d2)``."""
    _check_df(d1)
    _check_df(d2)
    _check_prob("alpha", alpha)
    if alpha <= 0.5:
        return float(special.fdtri(d1, d2, alpha))
    # Pr{F <= q} = alpha  <=>  Pr{1/F <= 1/q} = 1 - alpha with 1/F ~ F(d2, d1)
    return float(1.0 / special.fdtri(d2, d1, 1.0 - alpha))


def chi2_ratio_quantile(d1: float, d2: float, alpha: float) -> float:
    """Lower ``alpha`` quantile of ``U/V`` for independent chi-squares ``U ~ chi2_d1``, ``V ~ chi2_d2``.

    This is ``(d1/d2)`` times the standard F quantile.
    """
    return (d1 / d2) * f_quantile(d1, d2, alpha)


# ---------------------------------------------------------- discrete tails


@dataclass(frozen=True)
class Binomial:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 0 or not 0.0 <= self.p <= 1.0:
            raise ValueError(f"invalid binomial({self.n}, {self.p})")

    @property
    def support(self):
        return 0, self.n

    @property
    def mean(self) -> float:
        return self.n * self.p

    def logpmf(self, k):
        return binom_logpmf(k, self.n, self.p)


@dataclass(frozen=True)
class Poisson:
    mean: float

    def __post_init__(self):
        if not self.mean > 0:
            raise ValueError(f"Poisson mean must be positive, got {self.mean}")

    @property
    def support(self):
        return 0, math.inf

    def logpmf(self, k):
        return poisson_logpmf(k, self.mean)


@dataclass(frozen=True)
class Hypergeometric:
    """Successes in ``n`` draws without replacement from ``N`` units with ``K`` successes."""

    N: int
    K: int
    n: int

    def __post_init__(self):
        if not (0 <= self.K <= self.N and 0 < self.n <= self.N):
            raise ValueError(f"invalid hypergeometric(N={self.N}, K={self.K}, n={self.n})")

    @property
    def support(self):
        return max(0, self.n - (self.N - self.K)), min(self.n, self.K)

    @property
    def mean(self) -> float:
        return self.n * self.K / self.N

    def logpmf(self, k):
        return hypergeom_logpmf(k, self.N, self.K, self.n)


DiscreteFamily = Union[Binomial, Poisson, Hypergeometric]


def log_comb(a, b):
    """``ln C(a, b)``, ``-inf`` outside ``0 <= b <= a``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ok = (b >= 0) & (b <= a)
    with np.errstate(invalid="ignore"):
        val = special.gammaln(a + 1) - special.gammaln(b + 1) - special.gammaln(a - b + 1)
    return np.where(ok, val, -np.inf)


def binom_logpmf(k, n, p):
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = log_comb(n, k) + special.xlogy(k, p) + special.xlog1py(n - k, -p)
    return np.where((k >= 0) & (k <= n), val, -np.inf)


def poisson_logpmf(k, mu):
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = special.xlogy(k, mu) - mu - special.gammaln(k + 1)
    return np.where(k >= 0, val, -np.inf)


def hypergeom_logpmf(k, N, K, n):
    k = np.asarray(k, dtype=float)
    return log_comb(K, k) + log_comb(N - K, n - k) - log_comb(N, n)


def _log_sum(logs: np.ndarray) -> float:
    if logs.size == 0:
        return -math.inf
    return float(special.logsumexp(logs))


def _poisson_upper_cut(mu: float, k: int) -> int:
    return int(max(k, mu) + 40.0 * math.sqrt(mu) + 80)


def poisson_tail_cut(mu: float, tail: float) -> int:
    """Smallest ``k`` with ``Pr{Poisson(mu) > k} <= tail``.

    Uses the regularized incomplete gamma directly, which stays accurate far
    below the tail probabilities where ``scipy.stats.poisson.isf`` gives up.
    """
    if mu < 0 or not 0 < tail < 1:
        raise ValueError("need mu >= 0 and 0 < tail < 1")
    if mu == 0:
        return 0
    lo, hi = -1, max(1, int(math.ceil(mu)))
    while special.pdtrc(hi, mu) > tail:
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if special.pdtrc(mid, mu) > tail:
            lo = mid
        else:
            hi = mid
    return hi


def _direct_lower(family: DiscreteFamily, k: int) -> float:
    lo, _ = family.support
    ks = np.arange(lo, k + 1)
    return math.exp(_log_sum(family.logpmf(ks)))


def _direct_upper(family: DiscreteFamily, k: int) -> float:
    _, hi = family.support
    if math.isinf(hi):
        hi = _poisson_upper_cut(family.mean, k)
    ks = np.arange(k, hi + 1)
    return math.exp(_log_sum(family.logpmf(ks)))


def discrete_tail(family: DiscreteFamily, k: int, side: TailSide = TailSide.LOWER) -> float:
    """Exact tail probability ``Pr{Z <= k}`` or ``Pr{Z >= k}``.

    Terms are summed in log space over the smaller tail only; the other tail
    is its complement, so ``Lower(k) + Upper(k+1) == 1`` up to one rounding.
    """
    side = TailSide(side)
    k = math.floor(k) if side is TailSide.LOWER else math.ceil(k)
    lo, hi = family.support
    mean = family.mean
    if side is TailSide.LOWER:
        if k < lo:
            return 0.0
        if k >= hi:
            return 1.0
        if k < mean:
            return min(1.0, _direct_lower(family, k))
        return max(0.0, 1.0 - _direct_upper(family, k + 1))
    if k <= lo:
        return 1.0
    if k > hi:
        return 0.0
    if k > mean:
        return min(1.0, _direct_upper(family, k))
    return max(0.0, 1.0 - _direct_lower(family, k - 1))


# ------------------------------------------------------------- rate functions


def _bernoulli_rate(z: float, p: float) -> float:
    if z == 0.0:
        return math.log1p(-p) if p < 1 else -math.inf
    if z == 1.0:
        return math.log(p) if p > 0 else -math.inf
    return float(special.xlogy(z, p / z) + special.xlogy(1.0 - z, (1.0 - p) / (1.0 - z)))


def _poisson_rate(z: float, lam: float) -> float:
    if z == 0.0:
        return -lam
    return z - lam + z * math.log(lam / z)


def _gamma_rate(z: float, theta: float, shape: float) -> float:
    if z == 0.0:
        return -math.inf
    u = z / theta
    return shape * (math.log(u) + 1.0 - u)


def rate_function(model: ModelSpec, z: float, theta: float) -> float:
    """Per-sample log Chernoff bound ``ln C_n(z, theta) / n`` for a sample-mean estimator.

    Supported families: Bernoulli, Poisson (and life testing per unit time),
    normal mean with known sigma, exponential and gamma scale (``theta`` is the mean).
    The value is ``<= 0`` and vanishes only at ``z == theta``.
    """
    fam = model.family
    if fam in (Family.BERNOULLI, Family.FINITE_POPULATION):
        if not 0.0 <= z <= 1.0:
            raise ValueError(f"z={z} outside [0, 1]")
        return _bernoulli_rate(z, theta)
    if fam in (Family.POISSON, Family.LIFE_TEST_POISSON):
        if z < 0:
            raise ValueError(f"z={z} must be non-negative")
        return _poisson_rate(z, theta)
    if fam is Family.NORMAL_MEAN:
        return -((z - theta) ** 2) / (2.0 * model.sigma**2)
    if fam in (Family.EXPONENTIAL, Family.GAMMA_SCALE):
        if z < 0:
            raise ValueError(f"z={z} must be non-negative")
        return _gamma_rate(z, theta, model.shape)
    raise ValueError(f"no per-sample rate function for {fam.value}")


def log_chernoff_bound(model: ModelSpec, n: float, z: float, theta: float) -> float:
    """Log of the Chernoff bound on the tail of the ``n``-sample estimator beyond ``z``.

    For ``z`` below the estimator's mean this bounds ``Pr{phi_n <= z}``; above,
    ``Pr{phi_n >= z}``.  Mean-type families scale the per-sample rate by ``n``;
    finite populations use the hypergeometric bound; the variance families bound
    the mean square, which is a gamma variable, through the monotone map ``z -> z**2``.
    """
    fam = model.family
    if fam is Family.FINITE_POPULATION:
        k = round(z * n)
        return log_hypergeom_chernoff_bound(model.population, int(n), k, round(theta * model.population))
    if fam in (Family.NORMAL_STD_KNOWN_MEAN, Family.NORMAL_STD_UNKNOWN_MEAN):
        if z < 0:
            raise ValueError(f"z={z} must be non-negative")
        dof = n if fam is Family.NORMAL_STD_KNOWN_MEAN else n - 1
        if z == 0.0:
            return -math.inf
        u = n * z * z / (dof * theta * theta)
        return 0.5 * dof * (math.log(u) + 1.0 - u)
    return n * rate_function(model, z, theta)


# ------------------------------------------------- hypergeometric Chernoff bound

_EXACT_COMB_LIMIT = 2000


def _bound_terms(N: int, n: int, k: int, M: int):
    if k == n:
        return (M, n), (N - M, 0), (N, n), None
    L = ((N + 1) * k) // n
    return (M, k), (N - M, n - k), (L, k), (N - L, n - k)


def hypergeom_chernoff_bound(N: int, n: int, z: float, p: float) -> float:
    """Combinatorial bound on hypergeometric tails, dominating ``Pr{K/n <= z}`` for
    ``z <= p`` and ``Pr{K/n >= z}`` for ``z >= p``.

    ``z`` must lie on ``{k/n}`` and ``p*N`` must be an integer.  Exact integer
    arithmetic is used for ``N <= 2000`` so comparisons against exact tails are
    free of rounding artefacts.
    """
    k, M = _grid_args(N, n, z, p)
    if N <= _EXACT_COMB_LIMIT:
        (a1, b1), (a2, b2), (a3, b3), last = _bound_terms(N, n, k, M)
        num = math.comb(a1, b1) * math.comb(a2, b2) if b1 <= a1 and b2 <= a2 else 0
        if last is None:
            den = math.comb(a3, b3)
        else:
            den = math.comb(a3, b3) * math.comb(*last)
        return float(Fraction(num, den))
    return math.exp(log_hypergeom_chernoff_bound(N, n, k, M))


def _grid_args(N: int, n: int, z: float, p: float):
    if not 1 <= n <= N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    k = round(z * n)
    if abs(k - z * n) > 1e-9 or not 0 <= k <= n:
        raise ValueError(f"z={z} is not on the support grid k/{n}")
    M = round(p * N)
    if abs(M - p * N) > 1e-9 or not 0 <= M <= N:
        raise ValueError(f"p={p} is not on the grid i/{N}")
    return k, M


def log_hypergeom_chernoff_bound(N: int, n: int, k: int, M: int) -> float:
    """``ln`` of the finite-population bound for integer count ``k`` and ``M = pN`` successes."""
    (a1, b1), (a2, b2), (a3, b3), last = _bound_terms(N, n, k, M)
    val = log_comb(a1, b1) + log_comb(a2, b2) - log_comb(a3, b3)
    if last is not None:
        val = val - log_comb(*last)
    return float(val)
