"""
Sampling core metrics: coverage (PCE), mean distance to evaluated points
(MDPE) and hypervolume contribution on the exploit/explore plane (CHEE).

Score arrays are (n, 2) with columns (mu, sigma) in the minimize-both
orientation described in batchscope.models.scores.
"""

import logging
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from batchscope.core.exceptions import MetricError
from batchscope.models.domain import Batch, Bounds, EvaluatedSet
from batchscope.models.scores import ExploreExploitScore, ParetoFront2D, ReferencePoint2D, scores_to_array
from batchscope.utils.geometry import pairwise_distance
from batchscope.utils.validators import as_matrix, as_vector, check_dimension

logger = logging.getLogger(__name__)

ScoreInput = Union[Sequence[ExploreExploitScore], np.ndarray]


class CoverageResult(NamedTuple):
    per_dim: np.ndarray
    average: float


class ContributionResult(NamedTuple):
    pre: float
    post: Optional[float]


def points_of(data) -> np.ndarray:
    if isinstance(data, EvaluatedSet):
        return np.asarray(data.points)
    if isinstance(data, Batch):
        return np.asarray(data.points)
    return as_matrix(data)


def pce(data, bounds: Bounds) -> CoverageResult:
    """Normalized per-dimension range covered by the points, and its mean."""
    points = points_of(data)
    if points.shape[0] == 0:
        raise MetricError("EMPTY_EVALUATED_SET", "PCE needs at least one point")
    check_dimension(points, bounds.dim)
    per_dim = np.ptp(points, axis=0) / bounds.width
    return CoverageResult(per_dim=per_dim, average=float(per_dim.mean()))


def mdpe(point, data) -> float:
    """Average Euclidean distance from point to every evaluated point."""
    points = points_of(data)
    if points.shape[0] == 0:
        raise MetricError("EMPTY_EVALUATED_SET", "MDPE needs at least one evaluated point")
    return float(pairwise_distance(as_vector(point, "point").reshape(1, -1), points).mean())


def mdpe_batch(batch, data) -> np.ndarray:
    points = points_of(data)
    if points.shape[0] == 0:
        raise MetricError("EMPTY_EVALUATED_SET", "MDPE needs at least one evaluated point")
    return pairwise_distance(points_of(batch), points).mean(axis=1)


def pareto_front(scores: ScoreInput) -> ParetoFront2D:
    """
    Non-dominated scores under <= on both coordinates (strict on one).

    Exact duplicates keep only their lowest index. Members come back sorted
    by ascending mu, so sigma strictly decreases along the front.
    """
    arr = scores_to_array(scores)
    if arr.shape[0] == 0:
        raise MetricError("EMPTY_SCORES", "Pareto front needs at least one score")
    return ParetoFront2D(indices=tuple(int(i) for i in _front_indices(arr, np.arange(arr.shape[0]))))


def _front_indices(arr: np.ndarray, rows: np.ndarray) -> np.ndarray:
    sub = arr[rows]
    order = np.lexsort((rows, sub[:, 1], sub[:, 0]))
    keep = []
    best_sigma = np.inf
    for pos in order:
        if sub[pos, 1] < best_sigma:
            keep.append(rows[pos])
            best_sigma = sub[pos, 1]
    return np.asarray(keep, dtype=int)


def non_dominated_layers(scores: ScoreInput) -> list[np.ndarray]:
    """Successive Pareto layers; every index appears in exactly one layer."""
    arr = scores_to_array(scores)
    remaining = np.arange(arr.shape[0])
    layers = []
    while remaining.size:
        layer = _front_indices(arr, remaining)
        layers.append(layer)
        remaining = np.setdiff1d(remaining, layer, assume_unique=True)
    return layers


def _sweep_area(front: np.ndarray, r: np.ndarray) -> float:
    # front sorted by mu ascending, sigma strictly decreasing, all inside the box
    area = 0.0
    ceiling = r[1]
    for mu, sigma in front:
        area += (r[0] - mu) * (ceiling - sigma)
        ceiling = sigma
    return float(area)


def hv_union_2d(front: ParetoFront2D, scores: ScoreInput, r: ReferencePoint2D) -> float:
    """
    Exact area of the union of rectangles [point, r] over the front members.

    Dominated or duplicate members are dropped before the sweep; they add no area.
    """
    arr = scores_to_array(scores)
    members = arr[list(front.indices)]
    r.check_covers(members)
    if members.shape[0] == 0:
        return 0.0
    members = members[_front_indices(members, np.arange(members.shape[0]))]
    return _sweep_area(members, r.as_array())


def _exclusive_contribution(arr: np.ndarray, index: int, r: np.ndarray) -> float:
    """
    Area lost from the front's union when index is removed; 0 off the front.

    Rows outside the reference box are ignored. For a 2-D front sorted by mu
    the lost area is the rectangle between the point and its two neighbours.
    """
    inside = np.all(arr <= r, axis=1)
    if not inside[index]:
        return 0.0
    front = _front_indices(arr, np.flatnonzero(inside))
    hits = np.flatnonzero(front == index)
    if hits.size == 0:
        return 0.0
    pos = int(hits[0])
    mu, sigma = arr[index]
    next_mu = arr[front[pos + 1], 0] if pos + 1 < front.size else r[0]
    prev_sigma = arr[front[pos - 1], 1] if pos > 0 else r[1]
    return float((next_mu - mu) * (prev_sigma - sigma))


def chee(
    index: int,
    scores: ScoreInput,
    r: ReferencePoint2D,
    observed: Optional[float] = None,
) -> ContributionResult:
    """
    Hypervolume contribution of one scored point to the estimated Pareto set.

    pre uses the surrogate scores. post, when an observed objective value is
    given, replaces that point's mu with it while the exploration coordinate
    stays as it was at selection time; a point pushed outside the reference
    box then contributes 0.
    """
    arr = scores_to_array(scores)
    if not 0 <= index < arr.shape[0]:
        raise MetricError("INDEX_OUT_OF_RANGE", f"score index {index} out of range [0, {arr.shape[0]})",
                          index=index, size=arr.shape[0])
    r.check_covers(arr)
    ref = r.as_array()
    pre = _exclusive_contribution(arr, index, ref)
    post = None
    if observed is not None:
        updated = arr.copy()
        updated[index, 0] = float(observed)
        post = _exclusive_contribution(updated, index, ref)
    return ContributionResult(pre=pre, post=post)


def default_reference(scores: ScoreInput) -> ReferencePoint2D:
    """
    Reference point 10% of the score range beyond the worst value per coordinate.

    A coordinate with zero range is pushed out by 1.0 instead.
    """
    arr = scores_to_array(scores)
    if arr.shape[0] == 0:
        raise MetricError("EMPTY_SCORES", "reference point needs at least one score")
    worst, best = arr.max(axis=0), arr.min(axis=0)
    spread = worst - best
    offset = np.where(spread > 0, 0.1 * spread, 1.0)
    ref = worst + offset
    return ReferencePoint2D(r_mu=float(ref[0]), r_sigma=float(ref[1]))
