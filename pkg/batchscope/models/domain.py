from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from batchscope.core.exceptions import BatchScopeError, MetricError
from batchscope.utils.validators import (
    as_matrix,
    as_vector,
    check_dimension,
    first_out_of_bounds,
)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.flags.writeable = False
    return arr


class _ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class Bounds(_ArrayModel):
    """Hyperrectangle [lower_j, upper_j] per dimension."""

    lower: np.ndarray
    upper: np.ndarray

    @field_validator("lower", "upper", mode="before")
    @classmethod
    def _coerce(cls, value):
        return _readonly(as_vector(value, "bounds"))

    @model_validator(mode="after")
    def _check(self):
        if self.lower.shape != self.upper.shape:
            raise BatchScopeError(
                "BOUNDS_LENGTH_MISMATCH",
                f"lower has {self.lower.size} entries, upper has {self.upper.size}",
            )
        if self.lower.size == 0:
            raise BatchScopeError("BOUNDS_EMPTY", "bounds need at least one dimension")
        bad = np.flatnonzero(~(self.lower < self.upper))
        if bad.size:
            j = int(bad[0])
            raise BatchScopeError(
                "BOUNDS_NOT_STRICT",
                f"lower[{j}]={self.lower[j]} is not below upper[{j}]={self.upper[j]}",
                dimension=j,
            )
        return self

    @classmethod
    def uniform(cls, low: float, high: float, dim: int) -> "Bounds":
        return cls(lower=np.full(dim, low), upper=np.full(dim, high))

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def midpoint(self) -> np.ndarray:
        return (self.lower + self.upper) / 2.0

    def to_unit(self, points) -> np.ndarray:
        return (as_matrix(points) - self.lower) / self.width

    def as_pairs(self) -> list[list[float]]:
        return [[float(lo), float(hi)] for lo, hi in zip(self.lower, self.upper)]


class EvaluatedSet(_ArrayModel):
    """Evaluated points with their objective values; may be empty."""

    points: np.ndarray
    values: np.ndarray
    bounds: Optional[Bounds] = None

    @field_validator("points", mode="before")
    @classmethod
    def _coerce_points(cls, value):
        return _readonly(as_matrix(value))

    @field_validator("values", mode="before")
    @classmethod
    def _coerce_values(cls, value):
        return _readonly(as_vector(value))

    @model_validator(mode="after")
    def _check(self):
        if self.points.shape[0] != self.values.size:
            raise BatchScopeError(
                "ROW_COUNT_MISMATCH",
                f"{self.points.shape[0]} points but {self.values.size} values",
                points=self.points.shape[0],
                values=self.values.size,
            )
        if self.bounds is not None and self.points.shape[0]:
            check_dimension(self.points, self.bounds.dim)
            offending = first_out_of_bounds(self.points, self.bounds)
            if offending is not None:
                row, col = offending
                raise BatchScopeError(
                    "OUT_OF_BOUNDS",
                    f"point {row} coordinate {col} lies outside the bounds",
                    row=row,
                    column=col,
                )
        return self

    @classmethod
    def empty(cls, dim: int, bounds: Optional[Bounds] = None) -> "EvaluatedSet":
        return cls(points=np.empty((0, dim)), values=np.empty(0), bounds=bounds)

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def best_value(self) -> float:
        self.require_nonempty("best value")
        return float(self.values.min())

    def require_nonempty(self, what: str) -> None:
        if self.n == 0:
            raise MetricError("EMPTY_EVALUATED_SET", f"{what} needs at least one evaluated point")

    def extend(self, points, values) -> "EvaluatedSet":
        pts = as_matrix(points)
        check_dimension(pts, self.dim)
        return EvaluatedSet(
            points=np.vstack([self.points, pts]),
            values=np.concatenate([self.values, as_vector(values)]),
            bounds=self.bounds,
        )

    def deduplicated(self) -> "EvaluatedSet":
        """Merge identical rows, averaging their values. Rows come back sorted."""
        unique, inverse = np.unique(self.points, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        if unique.shape[0] == self.n:
            return self
        sums = np.bincount(inverse, weights=self.values, minlength=unique.shape[0])
        counts = np.bincount(inverse, minlength=unique.shape[0])
        return EvaluatedSet(points=unique, values=sums / counts, bounds=self.bounds)


class Batch(_ArrayModel):
    """Points selected for expensive evaluation, optionally tagged with candidate rows."""

    points: np.ndarray
    source_indices: Optional[tuple[int, ...]] = None

    @field_validator("points", mode="before")
    @classmethod
    def _coerce_points(cls, value):
        return _readonly(as_matrix(value, "batch"))

    @model_validator(mode="after")
    def _check(self):
        if self.points.shape[0] < 1:
            raise BatchScopeError("EMPTY_BATCH", "a batch needs at least one point")
        if self.source_indices is not None and len(self.source_indices) != self.points.shape[0]:
            raise BatchScopeError("BATCH_INDEX_MISMATCH", "one source index per batch row is required")
        return self

    @property
    def k(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])


class CandidateSet(_ArrayModel):
    points: np.ndarray

    @field_validator("points", mode="before")
    @classmethod
    def _coerce_points(cls, value):
        return _readonly(as_matrix(value, "candidates"))

    @model_validator(mode="after")
    def _check(self):
        if self.points.shape[0] < 1:
            raise BatchScopeError("EMPTY_CANDIDATE_SET", "a candidate set needs at least one point")
        return self

    @property
    def m(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def take(self, indices) -> Batch:
        idx = tuple(int(i) for i in indices)
        return Batch(points=self.points[list(idx)], source_indices=idx)
