from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np

from batchscope.core.exceptions import BatchScopeError, dimension_mismatch

if TYPE_CHECKING:
    from batchscope.models.domain import Bounds


def as_matrix(values, name: str = "points") -> np.ndarray:
    """
    Coerce input to a 2-D float64 array.

    A 1-D input is read as a single row. Non-finite entries are rejected.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise BatchScopeError("BAD_SHAPE", f"{name} must be a matrix, got shape {arr.shape}", shape=list(arr.shape))
    if not np.all(np.isfinite(arr)):
        raise BatchScopeError("NON_FINITE", f"{name} contain non-finite entries")
    return arr


def as_vector(values, name: str = "values") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise BatchScopeError("NON_FINITE", f"{name} contain non-finite entries")
    return arr


def check_dimension(points: np.ndarray, expected: int, what: str = "points") -> None:
    if points.shape[1] != expected:
        raise dimension_mismatch(expected, points.shape[1], what)


def first_out_of_bounds(points, bounds: "Bounds") -> Optional[Tuple[int, int]]:
    """Return (row, column) of the first coordinate outside bounds, or None."""
    pts = as_matrix(points)
    check_dimension(pts, bounds.dim)
    outside = (pts < bounds.lower) | (pts > bounds.upper)
    if not outside.any():
        return None
    row, col = np.argwhere(outside)[0]
    return int(row), int(col)


def validate_in_bounds(points, bounds: "Bounds") -> bool:
    """True iff lower[j] <= x[j] <= upper[j] for every coordinate (bounds inclusive)."""
    return first_out_of_bounds(points, bounds) is None
