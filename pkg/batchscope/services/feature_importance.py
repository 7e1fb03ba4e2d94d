import logging
from typing import Callable, Literal, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from batchscope.core.exceptions import BatchScopeError, MetricError
from batchscope.models.domain import EvaluatedSet
from batchscope.services.exploration import distance_exploration
from batchscope.services.gp_surrogate import GpModel
from batchscope.services.tree_surrogate import DEFAULT_MAX_DEPTH, DEFAULT_MIN_LEAF, TreeModel, fit_tree
from batchscope.utils.rng import derive_seed, make_rng
from batchscope.utils.validators import as_matrix, as_vector

logger = logging.getLogger(__name__)

PredictFn = Callable[[np.ndarray], np.ndarray]
Method = Literal["permutation", "shapley", "impurity"]
Target = Literal["objective", "exploitation", "exploration", "surrogate"]

DEFAULT_REPEATS = 10
DEFAULT_SHAPLEY_SAMPLES = 128
DEFAULT_BACKGROUND_CAP = 256


class ImportanceVector(BaseModel):
    model_config = ConfigDict(frozen=True)

    scores: tuple[float, ...]
    method: Method
    target: Target

    @field_validator("scores", mode="before")
    @classmethod
    def _finite(cls, value):
        return tuple(float(v) for v in as_vector(value, "importance scores"))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.scores, dtype=np.float64)


class ShapleyEstimate(NamedTuple):
    phi: np.ndarray
    standard_errors: np.ndarray
    samples: int


class FisResult(NamedTuple):
    signed: ImportanceVector
    absolute: ImportanceVector


def _call(predict_fn: PredictFn, points: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(predict_fn(points), dtype=np.float64).reshape(-1)
    except BatchScopeError:
        raise
    except Exception as exc:
        raise MetricError("PREDICT_FAILED", f"prediction function failed: {exc}") from exc
    if out.size != points.shape[0]:
        raise MetricError("PREDICT_FAILED", f"prediction returned {out.size} values for {points.shape[0]} rows")
    return out


def permutation_importance(
    predict_fn: PredictFn,
    X,
    y_ref,
    repeats: int = DEFAULT_REPEATS,
    seed: int = 0,
    target: Target = "objective",
) -> ImportanceVector:
    """
    Mean increase in squared error when one column of X is shuffled.

    Each feature draws its shuffles from its own seed-derived stream, so the
    result does not depend on the order features are processed in.
    """
    X = as_matrix(X, "X")
    y_ref = as_vector(y_ref, "y_ref")
    n, d = X.shape
    if n < 5:
        raise MetricError("INSUFFICIENT_DATA", f"permutation importance needs at least 5 rows, got {n}",
                          required=5, actual=n)
    if repeats < 1:
        raise MetricError("INVALID_REPEATS", f"repeats must be positive, got {repeats}")

    baseline = float(np.mean((_call(predict_fn, X) - y_ref) ** 2))
    scores = np.zeros(d)
    for j in range(d):
        rng = make_rng(seed, j)
        increases = np.empty(repeats)
        for r in range(repeats):
            shuffled = X.copy()
            shuffled[:, j] = X[rng.permutation(n), j]
            increases[r] = float(np.mean((_call(predict_fn, shuffled) - y_ref) ** 2)) - baseline
        scores[j] = increases.mean()
    return ImportanceVector(scores=scores, method="permutation", target=target)


def shapley_sampling(
    predict_fn: PredictFn,
    x,
    background,
    samples: int = DEFAULT_SHAPLEY_SAMPLES,
    seed: int = 0,
) -> ShapleyEstimate:
    """
    Monte-Carlo Shapley values by permutation sampling with marginal replacement.

    Every sample walks a random feature order from a background row to x,
    switching one feature at a time and crediting each switch's change in
    prediction to that feature. Background rows are visited in a shuffled
    cycle, so each row is used equally often when samples is a multiple of
    the background size.
    """
    x = as_vector(x, "x")
    background = as_matrix(background, "background")
    d = x.size
    if background.shape[0] < 1:
        raise MetricError("EMPTY_BACKGROUND", "Shapley sampling needs at least one background row")
    if background.shape[1] != d:
        raise MetricError("DIMENSION_MISMATCH", "background dimension differs from x",
                          expected=d, actual=background.shape[1])
    if samples < 1:
        raise MetricError("INVALID_SAMPLES", f"samples must be positive, got {samples}")

    rng = make_rng(seed)
    cycle = rng.permutation(background.shape[0])
    rows = background[cycle[np.arange(samples) % cycle.size]]
    orders = np.array([rng.permutation(d) for _ in range(samples)])
    rank = np.argsort(orders, axis=1)

    # path[s, t] is rows[s] with the first t features of orders[s] switched to x
    switched = rank[:, None, :] < np.arange(d + 1)[None, :, None]
    path = np.where(switched, x[None, None, :], rows[:, None, :])
    values = _call(predict_fn, path.reshape(-1, d)).reshape(samples, d + 1)

    deltas = np.zeros((samples, d))
    deltas[np.arange(samples)[:, None], orders] = np.diff(values, axis=1)
    phi = deltas.mean(axis=0)
    if samples > 1:
        stderr = deltas.std(axis=0, ddof=1) / np.sqrt(samples)
    else:
        stderr = np.full(d, np.inf)
    return ShapleyEstimate(phi=phi, standard_errors=stderr, samples=samples)


def shapley_matrix(
    predict_fn: PredictFn,
    X: np.ndarray,
    background: np.ndarray,
    samples: int,
    seed: int,
) -> np.ndarray:
    """Point-wise Shapley values for every row of X, one derived stream per row."""
    return np.vstack([
        shapley_sampling(predict_fn, row, background, samples, derive_seed(seed, i)).phi
        for i, row in enumerate(X)
    ])


def cap_background(points: np.ndarray, cap: int, seed: int) -> np.ndarray:
    """Uniform seeded subsample of at most cap rows, original order kept."""
    if points.shape[0] <= cap:
        return points
    rng = make_rng(seed)
    return points[np.sort(rng.choice(points.shape[0], size=cap, replace=False))]


def _global_importance(
    predict_fn: PredictFn,
    X: np.ndarray,
    y_ref: np.ndarray,
    method: str,
    seed: int,
    target: Target,
    repeats: int,
    samples: int,
    background_cap: int,
) -> ImportanceVector:
    if method == "permutation":
        scores = permutation_importance(predict_fn, X, y_ref, repeats=repeats, seed=seed, target=target)
        return ImportanceVector(scores=np.abs(scores.as_array()), method="permutation", target=target)
    if method == "shapley":
        background = cap_background(X, background_cap, derive_seed(seed, 0))
        phi = shapley_matrix(predict_fn, background, background, samples, derive_seed(seed, 1))
        return ImportanceVector(scores=np.abs(phi).mean(axis=0), method="shapley", target=target)
    raise MetricError("UNKNOWN_METHOD", f"unknown feature-importance method {method!r}", method=method)


def fiee(
    model: GpModel,
    data: EvaluatedSet,
    method: str = "permutation",
    seed: int = 0,
    exploration: Literal["surrogate", "distance"] = "surrogate",
    repeats: int = DEFAULT_REPEATS,
    samples: int = DEFAULT_SHAPLEY_SAMPLES,
    background_cap: int = DEFAULT_BACKGROUND_CAP,
) -> tuple[ImportanceVector, ImportanceVector]:
    """
    Feature importance for exploration (eta) and exploitation (lambda).

    lambda explains the GP mean; eta explains the GP standard deviation, or the
    distance to the nearest evaluated point when exploration="distance". Both are reported as magnitudes, against each target's
    own predictions on the evaluated points.
    """
    data.require_nonempty("FIEE")
    X = np.asarray(data.points)

    if exploration == "surrogate":
        explore_fn: PredictFn = model.predict_std
    else:
        def explore_fn(points: np.ndarray) -> np.ndarray:
            return distance_exploration(data, points)

    eta = _global_importance(explore_fn, X, explore_fn(X), method, derive_seed(seed, 0),
                             "exploration", repeats, samples, background_cap)
    lam = _global_importance(model.predict_mean, X, model.predict_mean(X), method, derive_seed(seed, 1),
                             "exploitation", repeats, samples, background_cap)
    return eta, lam


def fibb(
    data: EvaluatedSet,
    method: str = "permutation",
    seed: int = 0,
    tree: Optional[TreeModel] = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
    min_leaf: int = DEFAULT_MIN_LEAF,
    repeats: int = DEFAULT_REPEATS,
    samples: int = DEFAULT_SHAPLEY_SAMPLES,
    background_cap: int = DEFAULT_BACKGROUND_CAP,
) -> ImportanceVector:
    """
    Feature importance for the black-box objective through a reference
    regression tree fit on the evaluated data. Permutation importance is scored
    against the observed values; "impurity" uses the tree's variance reduction.
    """
    tree = tree if tree is not None else fit_tree(data, max_depth=max_depth, min_leaf=min_leaf)
    if method == "impurity":
        return ImportanceVector(scores=tree.impurity_importance(), method="impurity", target="objective")
    return _global_importance(tree.predict, np.asarray(data.points), np.asarray(data.values), method, seed,
                              "objective", repeats, samples, background_cap)


def fis(
    predict_fn: PredictFn,
    X,
    seed: int = 0,
    background=None,
    samples: int = DEFAULT_SHAPLEY_SAMPLES,
    background_cap: int = DEFAULT_BACKGROUND_CAP,
) -> FisResult:
    """
    Surrogate feature importance: the mean of point-wise Shapley values over X.

    The signed mean can cancel to zero for attributions symmetric about the
    background mean, so the mean absolute value is always returned with it.
    """
    X = as_matrix(X, "X")
    bg = as_matrix(background, "background") if background is not None else X
    bg = cap_background(bg, background_cap, derive_seed(seed, 0))
    phi = shapley_matrix(predict_fn, X, bg, samples, derive_seed(seed, 1))
    return FisResult(
        signed=ImportanceVector(scores=phi.mean(axis=0), method="shapley", target="surrogate"),
        absolute=ImportanceVector(scores=np.abs(phi).mean(axis=0), method="shapley", target="surrogate"),
    )


def model_predictor(model) -> PredictFn:
    """Prediction function of a fitted GP (its mean) or regression tree."""
    if isinstance(model, GpModel):
        return model.predict_mean
    if isinstance(model, TreeModel):
        return model.predict
    raise MetricError("UNSUPPORTED_MODEL", f"cannot explain a {type(model).__name__}")
