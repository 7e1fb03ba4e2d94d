"""
Exploitation/exploration score types.

Both coordinates are stored so that smaller is better: mu is the predicted
objective (minimization) and sigma is the exploration score negated. A point
with high predictive uncertainty, or far from every evaluated point, therefore
has a very negative sigma.
"""

import math
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from batchscope.core.exceptions import MetricError


class ExploreExploitScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    mu: float
    sigma: float

    @field_validator("mu", "sigma")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("scores must be finite")
        return value

    @classmethod
    def from_raw(cls, mu: float, sigma_raw: float) -> "ExploreExploitScore":
        return cls(mu=float(mu), sigma=-float(sigma_raw))

    @property
    def sigma_raw(self) -> float:
        return -self.sigma


class ParetoFront2D(BaseModel):
    """Indices of non-dominated scores, ordered by ascending mu."""

    model_config = ConfigDict(frozen=True)

    indices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, index: int) -> bool:
        return index in self.indices


class ReferencePoint2D(BaseModel):
    model_config = ConfigDict(frozen=True)

    r_mu: float
    r_sigma: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r_mu, self.r_sigma])

    def check_covers(self, arr: np.ndarray) -> None:
        """Raise unless the reference is weakly worse than every row of arr."""
        if arr.size == 0:
            return
        worst = arr.max(axis=0)
        if worst[0] > self.r_mu or worst[1] > self.r_sigma:
            raise MetricError(
                "REFERENCE_POINT_INVALID",
                "reference point must be weakly worse than every scored point",
                reference=[self.r_mu, self.r_sigma],
                worst=[float(worst[0]), float(worst[1])],
            )


def scores_to_array(scores: Sequence[ExploreExploitScore]) -> np.ndarray:
    if isinstance(scores, np.ndarray):
        arr = np.asarray(scores, dtype=np.float64).reshape(-1, 2)
    else:
        arr = np.array([[s.mu, s.sigma] for s in scores], dtype=np.float64).reshape(-1, 2)
    return arr


def scores_from_arrays(mu, sigma_raw) -> list[ExploreExploitScore]:
    return [ExploreExploitScore.from_raw(m, s) for m, s in zip(np.asarray(mu), np.asarray(sigma_raw))]
