"""Operating-characteristic report type."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple


class ExactUnavailableError(RuntimeError):
    """No exact OC engine exists for this model; use simulation."""


@dataclass(frozen=True)
class OCReport:
    """Acceptance and stopping probabilities of a plan at one parameter value.

    Attributes:
        theta: Parameter value.
        accept_prob: ``Pr{Accept H_i | theta}`` for each hypothesis.
        stop_prob: ``Pr{stop at stage l | theta}`` for each stage.
        asn: Average sample number (test time for life testing).
        trunc_error: Upper bound on the absolute error of every probability
            caused by domain truncation.
        method: ``"exact-discrete"``, ``"exact-gamma"`` or ``"simulation"``.
        se: Per-hypothesis standard errors (simulation only).
    """

    theta: float
    accept_prob: Tuple[float, ...]
    stop_prob: Tuple[float, ...]
    asn: float
    trunc_error: float
    method: str
    se: Tuple[float, ...] = ()

    def reject_prob(self, i: int) -> float:
        return math.fsum(p for j, p in enumerate(self.accept_prob) if j != i)
