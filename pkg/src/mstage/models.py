"""Model catalog: distribution families and their fixed nuisance parameters."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional


class Family(str, enum.Enum):
    BERNOULLI = "bernoulli"
    POISSON = "poisson"
    FINITE_POPULATION = "finite-population"
    NORMAL_MEAN = "normal-mean"
    NORMAL_STD_KNOWN_MEAN = "normal-std-known-mean"
    NORMAL_STD_UNKNOWN_MEAN = "normal-std-unknown-mean"
    EXPONENTIAL = "exponential"
    GAMMA_SCALE = "gamma-scale"
    LIFE_TEST_POISSON = "life-test"
    NORMAL_MEAN_OVER_STD = "normal-mean-over-std"
    VARIANCE_RATIO = "variance-ratio"


class BoundaryKind(str, enum.Enum):
    """Which family of per-stage thresholds a plan uses."""

    EXACT = "exact"
    QUANTILE = "quantile"
    CHERNOFF = "chernoff"


DISCRETE_FAMILIES = frozenset(
    {Family.BERNOULLI, Family.POISSON, Family.FINITE_POPULATION, Family.LIFE_TEST_POISSON}
)
GAMMA_SUM_FAMILIES = frozenset(
    {
        Family.EXPONENTIAL,
        Family.GAMMA_SCALE,
        Family.NORMAL_STD_KNOWN_MEAN,
        Family.NORMAL_STD_UNKNOWN_MEAN,
    }
)
# Families whose thresholds come from dedicated t / F constructions.
SPECIAL_FAMILIES = frozenset({Family.NORMAL_MEAN_OVER_STD, Family.VARIANCE_RATIO})


@dataclass(frozen=True)
class ModelSpec:
    """A distribution family plus whatever it needs besides the tested parameter.

    Use the classmethod constructors rather than filling fields by hand; they
    validate the nuisance parameters each family requires.

    Attributes:
        family: The distribution family.
        population: Population size ``N`` for finite-population sampling.
        sigma: Known standard deviation for the normal-mean family.
        mu: Known mean for the known-mean variance family, or the reference
            value ``gamma`` for the mean-over-std family (tests ``(mu - gamma)/sigma``).
        shape: Gamma shape ``k`` (1 for the exponential family).
        means_known: Whether both means are known for the variance-ratio family.
        mu_y: Known mean of the second population for the variance-ratio
            family; ``mu`` holds the first.
    """

    family: Family
    population: Optional[int] = None
    sigma: Optional[float] = None
    mu: Optional[float] = None
    shape: Optional[float] = None
    means_known: bool = True
    mu_y: Optional[float] = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam is Family.FINITE_POPULATION:
            if self.population is None or int(self.population) != self.population or self.population < 1:
                raise ValueError("finite population requires an integer population size N >= 1")
            object.__setattr__(self, "population", int(self.population))
        if fam is Family.NORMAL_MEAN and not (self.sigma is not None and self.sigma > 0):
            raise ValueError("normal-mean family requires sigma > 0")
        if fam is Family.NORMAL_STD_KNOWN_MEAN and self.mu is None:
            raise ValueError("known-mean variance family requires mu")
        if fam is Family.GAMMA_SCALE and not (self.shape is not None and self.shape > 0):
            raise ValueError("gamma-scale family requires shape k > 0")
        if fam is Family.EXPONENTIAL:
            object.__setattr__(self, "shape", 1.0)
        if fam is Family.NORMAL_MEAN_OVER_STD and self.mu is None:
            object.__setattr__(self, "mu", 0.0)
        if fam is Family.VARIANCE_RATIO and self.means_known:
            if self.mu is None:
                object.__setattr__(self, "mu", 0.0)
            if self.mu_y is None:
                object.__setattr__(self, "mu_y", 0.0)

    @classmethod
    def bernoulli(cls) -> "ModelSpec":
        return cls(Family.BERNOULLI)

    @classmethod
    def poisson(cls) -> "ModelSpec":
        return cls(Family.POISSON)

    @classmethod
    def finite_population(cls, N: int) -> "ModelSpec":
        return cls(Family.FINITE_POPULATION, population=N)

    @classmethod
    def normal_mean(cls, sigma: float) -> "ModelSpec":
        return cls(Family.NORMAL_MEAN, sigma=sigma)

    @classmethod
    def normal_std(cls, mu: Optional[float] = None) -> "ModelSpec":
        """Variance family; pass ``mu`` when the mean is known."""
        if mu is None:
            return cls(Family.NORMAL_STD_UNKNOWN_MEAN)
        return cls(Family.NORMAL_STD_KNOWN_MEAN, mu=mu)

    @classmethod
    def exponential(cls) -> "ModelSpec":
        return cls(Family.EXPONENTIAL)

    @classmethod
    def gamma_scale(cls, shape: float) -> "ModelSpec":
        return cls(Family.GAMMA_SCALE, shape=shape)

    @classmethod
    def life_test(cls) -> "ModelSpec":
        return cls(Family.LIFE_TEST_POISSON)

    @classmethod
    def normal_mean_over_std(cls, gamma: float = 0.0) -> "ModelSpec":
        return cls(Family.NORMAL_MEAN_OVER_STD, mu=gamma)

    @classmethod
    def variance_ratio(
        cls, means_known: bool = True, mu_x: Optional[float] = None, mu_y: Optional[float] = None
    ) -> "ModelSpec":
        """Ratio ``sigma_X**2 / sigma_Y**2``; known means default to zero."""
        return cls(Family.VARIANCE_RATIO, mu=mu_x, mu_y=mu_y, means_known=means_known)

    @property
    def is_discrete(self) -> bool:
        return self.family in DISCRETE_FAMILIES

    @property
    def continuous_time(self) -> bool:
        return self.family is Family.LIFE_TEST_POISSON

    @property
    def min_size(self) -> int:
        if self.family in (
            Family.NORMAL_STD_UNKNOWN_MEAN,
            Family.NORMAL_MEAN_OVER_STD,
            Family.VARIANCE_RATIO,
        ):
            return 2
        if self.family is Family.LIFE_TEST_POISSON:
            return 0  # test times are positive reals
        return 1

    def check_parameter(self, theta: float) -> None:
        """Raise ``ValueError`` if ``theta`` is outside the parameter space."""
        fam = self.family
        if not math.isfinite(theta):
            raise ValueError(f"parameter must be finite, got {theta}")
        if fam is Family.BERNOULLI and not 0.0 <= theta <= 1.0:
            raise ValueError(f"proportion must lie in [0, 1], got {theta}")
        if fam is Family.FINITE_POPULATION:
            if not 0.0 <= theta <= 1.0:
                raise ValueError(f"proportion must lie in [0, 1], got {theta}")
            units = theta * self.population
            if abs(units - round(units)) > 1e-9:
                raise ValueError(f"proportion {theta} is not on the grid i/{self.population}")
        if fam in (
            Family.POISSON,
            Family.LIFE_TEST_POISSON,
            Family.EXPONENTIAL,
            Family.GAMMA_SCALE,
            Family.NORMAL_STD_KNOWN_MEAN,
            Family.NORMAL_STD_UNKNOWN_MEAN,
            Family.VARIANCE_RATIO,
        ) and theta <= 0:
            raise ValueError(f"parameter must be positive, got {theta}")

    def to_dict(self) -> dict:
        out = {"family": self.family.value}
        for key in ("population", "sigma", "mu", "mu_y", "shape"):
            val = getattr(self, key)
            if val is not None and not (key == "shape" and self.family is Family.EXPONENTIAL):
                out[key] = val
        if self.family is Family.VARIANCE_RATIO:
            out["means_known"] = self.means_known
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        return cls(
            Family(data["family"]),
            population=data.get("population"),
            sigma=data.get("sigma"),
            mu=data.get("mu"),
            shape=data.get("shape"),
            means_known=data.get("means_known", True),
            mu_y=data.get("mu_y"),
        )
