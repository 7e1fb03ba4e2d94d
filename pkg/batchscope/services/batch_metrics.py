import logging
from typing import NamedTuple, Union

import numpy as np
from scipy.linalg import lu_factor
from scipy.spatial.distance import cdist, pdist
from scipy.special import logsumexp

from batchscope.core.exceptions import MetricError
from batchscope.models.scores import ReferencePoint2D, scores_to_array
from batchscope.services.point_metrics import ScoreInput, points_of
from batchscope.utils.geometry import min_distance

logger = logging.getLogger(__name__)

STD_FLOOR = 1e-9
DIS_JITTER = 1e-10


class EntropyEstimate(NamedTuple):
    value: float
    degenerate: bool


class DiversityEstimate(NamedTuple):
    det: float
    log_det: float
    bandwidth: float


def scott_bandwidth(points: np.ndarray) -> tuple[np.ndarray, bool]:
    """Per-dimension Scott bandwidth; flags dimensions whose spread hit the floor."""
    k, d = points.shape
    std = np.std(points, axis=0, ddof=1)
    degenerate = bool(np.any(std < STD_FLOOR))
    return np.maximum(std, STD_FLOOR) * k ** (-1.0 / (d + 4)), degenerate


def des(batch, leave_one_out: bool = False) -> EntropyEstimate:
    """
    Differential entropy of the batch from a Gaussian product KDE.

    H = -(1/k) * sum_i log p(x_i), with p evaluated in-sample (x_i included in
    its own density) unless leave_one_out is set.
    """
    points = points_of(batch)
    k, d = points.shape
    if k < 2:
        raise MetricError("BATCH_TOO_SMALL", f"DES needs at least 2 points, got {k}", required=2, actual=k)

    h, degenerate = scott_bandwidth(points)
    if degenerate:
        logger.warning("des: batch spread is degenerate in at least one dimension, bandwidth floored")

    scaled = points / h
    sq = cdist(scaled, scaled, metric="sqeuclidean")
    log_kernel = -0.5 * sq - np.log(h).sum() - 0.5 * d * np.log(2 * np.pi)
    if leave_one_out:
        np.fill_diagonal(log_kernel, -np.inf)
        log_density = logsumexp(log_kernel, axis=1) - np.log(k - 1)
    else:
        log_density = logsumexp(log_kernel, axis=1) - np.log(k)
    return EntropyEstimate(value=float(-log_density.mean()), degenerate=degenerate)


def median_bandwidth(points: np.ndarray) -> float:
    distances = pdist(points)
    median = float(np.median(distances)) if distances.size else 0.0
    return median if median > 0 else 1.0


def dis(batch, bandwidth: Union[str, float] = "median") -> DiversityEstimate:
    """
    Determinant of the RBF similarity matrix of the batch (plus 1e-10 jitter).

    The determinant comes from a pivoted LU factorization; log_det is
    reported alongside because det underflows quickly as k grows.
    """
    points = points_of(batch)
    if points.shape[0] < 1:
        raise MetricError("EMPTY_BATCH", "DIS needs at least one point")
    if bandwidth == "median":
        h = median_bandwidth(points)
    else:
        h = float(bandwidth)
        if not h > 0:
            raise MetricError("INVALID_BANDWIDTH", f"bandwidth must be positive, got {bandwidth}")

    kernel = np.exp(-cdist(points, points, metric="sqeuclidean") / (2.0 * h * h))
    kernel += DIS_JITTER * np.eye(points.shape[0])
    if not np.all(np.isfinite(kernel)):
        raise MetricError("NON_FINITE", "kernel matrix has non-finite entries")

    lu, piv = lu_factor(kernel, check_finite=False)
    diag = np.diag(lu)
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    sign = (-1.0) ** swaps * float(np.prod(np.sign(diag)))
    log_det = float(np.sum(np.log(np.abs(diag))))
    return DiversityEstimate(det=sign * float(np.exp(log_det)), log_det=log_det, bandwidth=h)


def abd(batch, data) -> float:
    """Average over batch points of the distance to the nearest evaluated point."""
    points = points_of(data)
    if points.shape[0] == 0:
        raise MetricError("EMPTY_EVALUATED_SET", "ABD needs at least one evaluated point")
    return float(min_distance(points_of(batch), points).mean())


def hve(scores: ScoreInput, r: ReferencePoint2D) -> float:
    """Sum (not union) of the rectangles each batch score spans up to r."""
    arr = scores_to_array(scores)
    r.check_covers(arr)
    return float(np.sum((r.r_mu - arr[:, 0]) * (r.r_sigma - arr[:, 1])))

