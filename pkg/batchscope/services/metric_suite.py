"""
Per-iteration metric recording shared by the experiment loop and the
post-hoc analyzer.

A metric whose preconditions fail (too few evaluated points for a tree or a
permutation test, no prior evaluations, undefined CR) is recorded as null and
logged as a warning; any other error propagates.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np

from batchscope.core.exceptions import MetricError, ModelFitError
from batchscope.models.domain import Batch, Bounds, EvaluatedSet
from batchscope.models.scores import ReferencePoint2D
from batchscope.models.trace import TraceMetrics
from batchscope.services.batch_metrics import abd, des, dis, hve
from batchscope.services.exploration import distance_exploration
from batchscope.services.feature_importance import cap_background, fibb, fiee, fis
from batchscope.services.gp_surrogate import GpModel
from batchscope.services.point_metrics import chee, default_reference, mdpe_batch, pce
from batchscope.services.process_metrics import cr, pssa_from_tree
from batchscope.services.tree_surrogate import fit_tree
from batchscope.utils.rng import Stream, derive_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricOptions:
    fi_method: str = "permutation"
    exploration: str = "surrogate"
    tree_max_depth: int = 4
    tree_min_leaf: int = 5
    permutation_repeats: int = 10
    shapley_samples: int = 128
    shapley_background_cap: int = 256
    fis_points: Optional[int] = None
    dis_bandwidth: Union[str, float] = "median"
    des_leave_one_out: bool = False

    @classmethod
    def from_config(cls, config: Any) -> "MetricOptions":
        """Pick the metric knobs off any object carrying them (RunConfig, Settings, argparse namespace)."""
        return cls(**{name: getattr(config, name) for name in cls.__dataclass_fields__ if hasattr(config, name)})


def guarded(name: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (MetricError, ModelFitError) as exc:
        logger.warning("%s recorded as null: %s", name, exc.message)
        return None


def _scalar(name: str, value) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    if not math.isfinite(value):
        logger.warning("%s recorded as null: non-finite value %r", name, value)
        return None
    return value


def _vector(name: str, values) -> Optional[list[float]]:
    if values is None:
        return None
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        logger.warning("%s recorded as null: non-finite entries", name)
        return None
    return [float(v) for v in arr]


def exploration_scores(model: Optional[GpModel], data: EvaluatedSet, points: np.ndarray, exploration: str) -> np.ndarray:
    """Raw exploration score (larger is more exploratory) at each row of points."""
    if exploration == "surrogate" and model is not None:
        return model.predict_std(points)
    return distance_exploration(data, points)


class MetricRecorder:
    """
    Collects one iteration's metrics in two steps: everything knowable before
    the batch is evaluated, then the metrics that need the observed values.
    """

    def __init__(self, options: MetricOptions, seed: int, iteration: int):
        self.options = options
        self.seed = seed
        self.iteration = iteration
        self.values: dict[str, Any] = {name: None for name in TraceMetrics.model_fields}
        self._scores: Optional[np.ndarray] = None
        self._rows: list[int] = []
        self._reference: Optional[ReferencePoint2D] = None

    def _seed(self, stream: Stream) -> int:
        return derive_seed(self.seed, self.iteration, stream)

    def pre_evaluation(
        self,
        data: EvaluatedSet,
        batch: Batch,
        bounds: Bounds,
        model: Optional[GpModel] = None,
        population: Optional[np.ndarray] = None,
    ) -> "MetricRecorder":
        """
        Args:
            data: evaluated set before this batch
            batch: the selected points
            bounds: search space for coverage
            model: fitted GP; surrogate-scored metrics stay null without it
            population: scored point set for the hypervolume contribution; the
                batch rows are located in it by batch.source_indices. Defaults
                to the batch itself.
        """
        opts = self.options
        v = self.values
        points = np.asarray(batch.points)

        coverage = guarded("pce", pce, np.vstack([data.points, points]), bounds)
        if coverage is not None:
            v["pce_avg"] = _scalar("pce_avg", coverage.average)
            v["pce_per_dim"] = _vector("pce_per_dim", coverage.per_dim)
        v["mdpe"] = _vector("mdpe", guarded("mdpe", mdpe_batch, batch, data))

        entropy = guarded("des", des, batch, leave_one_out=opts.des_leave_one_out)
        v["des"] = _scalar("des", entropy.value) if entropy is not None else None
        diversity = guarded("dis", dis, batch, bandwidth=opts.dis_bandwidth)
        if diversity is not None:
            v["dis_logdet"] = _scalar("dis_logdet", diversity.log_det)
            v["dis_det"] = _scalar("dis_det", diversity.det)
        v["abd"] = _scalar("abd", guarded("abd", abd, batch, data))

        tree = guarded("reference tree", fit_tree, data, max_depth=opts.tree_max_depth, min_leaf=opts.tree_min_leaf)
        if tree is not None:
            regions = pssa_from_tree(tree, batch)
            v["pssa"] = [
                {"rule": part.rule_string(), "n_eval": part.count, "mean_y": part.mean, "n_batch": int(count)}
                for part, count in zip(regions.partitions, regions.per_partition_batch_counts)
            ]
            importance = guarded("fibb", fibb, data, method=opts.fi_method, seed=self._seed(Stream.FIBB), tree=tree,
                                 repeats=opts.permutation_repeats, samples=opts.shapley_samples,
                                 background_cap=opts.shapley_background_cap)
            v["fibb"] = _vector("fibb", importance.as_array()) if importance is not None else None

        if data.n > 0:
            self._score(data, batch, model, population)
        else:
            logger.warning("exploration scores recorded as null: no prior evaluations")

        if model is not None:
            self._explain(data, model)
        return self

    def _score(self, data: EvaluatedSet, batch: Batch, model: Optional[GpModel], population: Optional[np.ndarray]):
        opts = self.options
        v = self.values
        batch_points = np.asarray(batch.points)
        if model is None:
            v["batch_sigma_raw"] = _vector("batch_sigma_raw", distance_exploration(data, batch_points))
            return

        if population is not None:
            if batch.source_indices is None:
                raise MetricError("MISSING_SOURCE_INDICES", "batch rows cannot be located in the scored population")
            rows = list(batch.source_indices)
            scored = np.asarray(population)
        else:
            rows = list(range(batch.k))
            scored = batch_points
        mu = model.predict_mean(scored)
        sigma_raw = exploration_scores(model, data, scored, opts.exploration)
        scores = np.column_stack([mu, -sigma_raw])
        reference = default_reference(scores)

        self._scores, self._rows, self._reference = scores, rows, reference
        v["batch_mu"] = _vector("batch_mu", mu[rows])
        v["batch_sigma_raw"] = _vector("batch_sigma_raw", sigma_raw[rows])
        v["ref_point"] = [reference.r_mu, reference.r_sigma]
        contributions = [guarded("chee_pre", chee, row, scores, reference) for row in rows]
        if all(c is not None for c in contributions):
            v["chee_pre"] = _vector("chee_pre", [c.pre for c in contributions])
        v["hve"] = _scalar("hve", guarded("hve", hve, scores[rows], reference))

    def _explain(self, data: EvaluatedSet, model: GpModel) -> None:
        opts = self.options
        v = self.values
        pair = guarded("fiee", fiee, model, data, method=opts.fi_method, seed=self._seed(Stream.FIEE),
                       exploration=opts.exploration, repeats=opts.permutation_repeats,
                       samples=opts.shapley_samples, background_cap=opts.shapley_background_cap)
        if pair is not None:
            v["fiee_eta"] = _vector("fiee_eta", pair[0].as_array())
            v["fiee_lambda"] = _vector("fiee_lambda", pair[1].as_array())

        fis_seed = self._seed(Stream.FIS)
        explained = np.asarray(data.points)
        if opts.fis_points is not None:
            explained = cap_background(explained, opts.fis_points, derive_seed(fis_seed, 0))
        result = guarded("fis", fis, model.predict_mean, explained, seed=derive_seed(fis_seed, 1),
                         background=data.points, samples=opts.shapley_samples,
                         background_cap=opts.shapley_background_cap)
        if result is not None:
            v["fis_signed"] = _vector("fis_signed", result.signed.as_array())
            v["fis_abs"] = _vector("fis_abs", result.absolute.as_array())

    def post_evaluation(self, batch_y: Sequence[float], best_history: Sequence[float]) -> "MetricRecorder":
        """
        Args:
            batch_y: observed objective values of the batch, in batch order
            best_history: best-known value before the first batch and after
                every batch so far, this one included
        """
        if self._scores is not None:
            observed = np.asarray(batch_y, dtype=np.float64)
            contributions = [
                guarded("chee_post", chee, row, self._scores, self._reference, observed=float(y))
                for row, y in zip(self._rows, observed)
            ]
            if all(c is not None for c in contributions):
                self.values["chee_post"] = _vector("chee_post", [c.post for c in contributions])
        self.values["cr"] = _scalar("cr", guarded("cr", cr, list(best_history)))
        return self

    def to_metrics(self) -> TraceMetrics:
        return TraceMetrics(**self.values)
