from typing import Optional

import numpy as np
from pydantic import field_validator, model_validator

from batchscope.core.exceptions import InputDataError
from batchscope.models.domain import Bounds, EvaluatedSet, _ArrayModel, _readonly
from batchscope.utils.validators import as_matrix, as_vector


class LogIteration(_ArrayModel):
    """Points an external optimizer evaluated together; a negative label marks the initial design."""

    label: int
    points: np.ndarray
    values: np.ndarray

    @field_validator("points", mode="before")
    @classmethod
    def _coerce_points(cls, value):
        return _readonly(as_matrix(value))

    @field_validator("values", mode="before")
    @classmethod
    def _coerce_values(cls, value):
        return _readonly(as_vector(value))

    @property
    def is_initial(self) -> bool:
        return self.label < 0


class ExternalLog(_ArrayModel):
    iterations: tuple[LogIteration, ...]
    bounds: Optional[Bounds] = None

    @model_validator(mode="after")
    def _consistent_dim(self):
        if not self.iterations:
            raise InputDataError("EMPTY_LOG", "the log holds no evaluations")
        dims = {it.points.shape[1] for it in self.iterations}
        if len(dims) > 1:
            raise InputDataError("DIMENSION_MISMATCH", f"iterations disagree on dimension: {sorted(dims)}")
        if self.bounds is not None and self.bounds.dim != self.dim:
            raise InputDataError("DIMENSION_MISMATCH", f"bounds have dimension {self.bounds.dim}, log has {self.dim}",
                                 expected=self.dim, actual=self.bounds.dim)
        return self

    @property
    def dim(self) -> int:
        return int(self.iterations[0].points.shape[1])

    def initial_set(self) -> EvaluatedSet:
        """Rows of every initial-design iteration, in file order."""
        initial = [it for it in self.iterations if it.is_initial]
        if not initial:
            return EvaluatedSet.empty(self.dim, self.bounds)
        return EvaluatedSet(
            points=np.vstack([it.points for it in initial]),
            values=np.concatenate([it.values for it in initial]),
            bounds=self.bounds,
        )

    def batches(self) -> list[LogIteration]:
        return [it for it in self.iterations if not it.is_initial]

    def envelope(self) -> Bounds:
        """Smallest box holding every logged point; flat dimensions are widened by 0.5 each way."""
        points = np.vstack([it.points for it in self.iterations])
        lower, upper = points.min(axis=0), points.max(axis=0)
        flat = ~(lower < upper)
        return Bounds(lower=np.where(flat, lower - 0.5, lower), upper=np.where(flat, upper + 0.5, upper))

    def with_bounds(self, bounds: Bounds) -> "ExternalLog":
        return ExternalLog(iterations=self.iterations, bounds=bounds)
