import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular
from scipy.spatial.distance import cdist, pdist

from batchscope.core.exceptions import ModelFitError
from batchscope.models.domain import EvaluatedSet
from batchscope.models.scores import ExploreExploitScore
from batchscope.utils.validators import as_matrix, check_dimension

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-12
JITTER_START = 1e-8
JITTER_CEILING = 1e-2


@dataclass(frozen=True)
class GpModel:
    """
    Zero-mean GP on centered targets with a squared-exponential kernel.

    Inputs are mapped to the unit cube of the training bounds (identity when
    the training set carries none); the constant mean is the target average.
    """

    train_unit: np.ndarray
    y_mean: float
    length_scale: float
    signal_var: float
    jitter: float
    chol: np.ndarray
    alpha: np.ndarray
    offset: np.ndarray
    scale: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.train_unit.shape[1])

    @property
    def signal_std(self) -> float:
        return float(np.sqrt(self.signal_var))

    def _kernel(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        sq = cdist(a, b, metric="sqeuclidean")
        return self.signal_var * np.exp(-sq / (2.0 * self.length_scale**2))

    def predict(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation at each row of points."""
        pts = as_matrix(points)
        check_dimension(pts, self.dim)
        unit = (pts - self.offset) / self.scale
        k_star = self._kernel(self.train_unit, unit)
        mean = self.y_mean + k_star.T @ self.alpha
        v = solve_triangular(self.chol, k_star, lower=True, check_finite=False)
        var = self.signal_var - np.einsum("ij,ij->j", v, v)
        return mean, np.sqrt(np.maximum(var, 0.0))

    def predict_mean(self, points) -> np.ndarray:
        return self.predict(points)[0]

    def predict_std(self, points) -> np.ndarray:
        return self.predict(points)[1]


def _median_length_scale(unit: np.ndarray) -> float:
    distances = pdist(unit)
    median = float(np.median(distances)) if distances.size else 1.0
    return median if median > 0 else 1.0


def fit_gp(
    data: EvaluatedSet,
    length_scale: Optional[float] = None,
    signal_var: Optional[float] = None,
) -> GpModel:
    """
    Fit the reference GP without hyperparameter optimization.

    Duplicate rows are merged (targets averaged) before fitting. The length-scale
    defaults to the median pairwise distance of the unit-scaled inputs, the
    signal variance to the sample variance of y (floored), and jitter starts at
    1e-8 * s^2, growing tenfold up to 1e-2 * s^2 if the Cholesky fails.

    Raises:
        ModelFitError: fewer than 2 distinct points, or factorization failure
    """
    merged = data.deduplicated()
    if merged.n < 2:
        raise ModelFitError(
            "INSUFFICIENT_DATA",
            f"GP fit needs at least 2 distinct points, got {merged.n}",
            required=2,
            actual=merged.n,
        )

    if merged.bounds is not None:
        offset, scale = merged.bounds.lower.copy(), merged.bounds.width.copy()
    else:
        offset, scale = np.zeros(merged.dim), np.ones(merged.dim)
    unit = (merged.points - offset) / scale

    ell = float(length_scale) if length_scale is not None else _median_length_scale(unit)
    if signal_var is not None:
        s2 = float(signal_var)
    else:
        s2 = max(float(np.var(merged.values, ddof=1)), VARIANCE_FLOOR)
    y_mean = float(merged.values.mean())
    centered = merged.values - y_mean

    gram = s2 * np.exp(-cdist(unit, unit, metric="sqeuclidean") / (2.0 * ell**2))
    jitter = JITTER_START * s2
    while True:
        try:
            chol, _ = cho_factor(gram + jitter * np.eye(merged.n), lower=True, check_finite=False)
            break
        except LinAlgError:
            if jitter >= JITTER_CEILING * s2:
                raise ModelFitError(
                    "FACTORIZATION_FAILED",
                    "kernel matrix is not positive definite even with maximal jitter",
                    jitter=jitter,
                )
            jitter *= 10.0
            logger.warning("gp fit: escalating jitter to %.3g", jitter)

    chol = np.tril(chol)
    alpha = cho_solve((chol, True), centered, check_finite=False)
    return GpModel(
        train_unit=unit,
        y_mean=y_mean,
        length_scale=ell,
        signal_var=s2,
        jitter=jitter,
        chol=chol,
        alpha=alpha,
        offset=offset,
        scale=scale,
    )


def gp_predict(model: GpModel, points) -> list[ExploreExploitScore]:
    """Posterior mean as mu, posterior std as the raw exploration score (stored negated)."""
    mean, std = model.predict(points)
    return [ExploreExploitScore.from_raw(m, s) for m, s in zip(mean, std)]
