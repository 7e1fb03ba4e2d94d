import logging
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from batchscope.core.exceptions import MetricError
from batchscope.models.domain import EvaluatedSet
from batchscope.models.partition import Partition
from batchscope.services.point_metrics import points_of
from batchscope.services.tree_surrogate import (
    DEFAULT_MAX_DEPTH,
    DEFAULT_MIN_LEAF,
    TreeModel,
    extract_partitions,
    fit_tree,
)
from batchscope.utils.validators import as_vector

logger = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-12


class BestValueSequence(BaseModel):
    """Best-known objective value after each iteration; non-increasing by construction."""

    model_config = ConfigDict(frozen=True)

    values: tuple[float, ...]

    @field_validator("values", mode="before")
    @classmethod
    def _running_minimum(cls, value):
        arr = as_vector(value, "best values")
        return tuple(float(v) for v in np.minimum.accumulate(arr)) if arr.size else ()

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


class PssaResult(NamedTuple):
    partitions: list[Partition]
    batch_assignment: np.ndarray
    per_partition_batch_counts: np.ndarray


def pssa_from_tree(tree: TreeModel, batch) -> PssaResult:
    partitions = extract_partitions(tree)
    assignment = tree.apply(points_of(batch))
    counts = np.bincount(assignment, minlength=len(partitions))
    return PssaResult(partitions=partitions, batch_assignment=assignment, per_partition_batch_counts=counts)


def pssa(
    data: EvaluatedSet,
    batch,
    max_depth: int = DEFAULT_MAX_DEPTH,
    min_leaf: int = DEFAULT_MIN_LEAF,
) -> PssaResult:
    """
    Partition the solution space with a regression tree fit on the evaluated
    data and locate every batch point in exactly one region.
    """
    return pssa_from_tree(fit_tree(data, max_depth=max_depth, min_leaf=min_leaf), batch)


def _sequence_array(sequence) -> np.ndarray:
    if isinstance(sequence, BestValueSequence):
        return sequence.as_array()
    return BestValueSequence(values=sequence).as_array()


def cr(sequence) -> float:
    """
    Average relative decrease of the best value per iteration.

    Raises:
        MetricError: fewer than 2 values (SEQUENCE_TOO_SHORT), or a
            denominator that is near zero or negative / a sign crossing
            (CR_UNDEFINED; use cr_shifted)
    """
    values = _sequence_array(sequence)
    if values.size < 2:
        raise MetricError("SEQUENCE_TOO_SHORT", f"CR needs at least 2 values, got {values.size}",
                          required=2, actual=int(values.size))
    previous, current = values[:-1], values[1:]
    if np.any(previous <= DENOMINATOR_FLOOR) or current[-1] < 0:
        raise MetricError(
            "CR_UNDEFINED",
            "relative decrease is undefined for values at or below zero; use cr_shifted",
            minimum=float(values.min()),
        )
    return float(np.mean((previous - current) / previous))


def cr_shifted(sequence, shift: float) -> float:
    """CR on values - min(values) + shift, a positive translate of the sequence."""
    if not shift > 0:
        raise MetricError("INVALID_SHIFT", f"shift must be positive, got {shift}", shift=shift)
    values = _sequence_array(sequence)
    return cr(BestValueSequence(values=values - values.min() + shift))


def optimization_stability(final_values) -> float:
    """Population standard deviation of the final values of several runs."""
    finals = as_vector(final_values, "final values")
    if finals.size < 2:
        raise MetricError("TOO_FEW_RUNS", f"stability needs at least 2 runs, got {finals.size}",
                          required=2, actual=int(finals.size))
    return float(np.std(finals))
