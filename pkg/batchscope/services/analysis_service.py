import logging
from dataclasses import replace
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, Field, PositiveFloat, PositiveInt

from batchscope.config import settings
from batchscope.core.exceptions import InputDataError
from batchscope.models.domain import Batch, Bounds, EvaluatedSet
from batchscope.models.external_log import ExternalLog
from batchscope.models.trace import IterationTrace, RunHeader
from batchscope.services.gp_surrogate import fit_gp
from batchscope.services.metric_suite import MetricOptions, MetricRecorder, guarded
from batchscope.storage.csv_ingest import ingest_csv
from batchscope.storage.trace_store import TraceStore
from batchscope.utils.validators import first_out_of_bounds

logger = logging.getLogger(__name__)


class AnalyzeOptions(BaseModel):
    out: str = Field(default_factory=lambda: settings.output_dir)
    run_id: Optional[str] = Field(None, description="Defaults to the CSV file stem")
    seed: int = Field(0, ge=0)
    bounds: Optional[list[tuple[float, float]]] = None
    fit_surrogate: bool = False
    fi_method: str = "permutation"
    exploration: str = "distance"
    tree_max_depth: PositiveInt = 4
    tree_min_leaf: PositiveInt = 5
    shapley_samples: PositiveInt = Field(default_factory=lambda: settings.shapley_samples)
    shapley_background_cap: PositiveInt = Field(default_factory=lambda: settings.shapley_background_cap)
    permutation_repeats: PositiveInt = Field(default_factory=lambda: settings.permutation_repeats)
    fis_points: Optional[PositiveInt] = Field(default_factory=lambda: settings.fis_points,
                                              description="Cap on points explained by FIS; None explains all")
    dis_bandwidth: Union[str, PositiveFloat] = Field(default_factory=lambda: settings.dis_bandwidth)
    des_leave_one_out: bool = Field(default_factory=lambda: settings.des_leave_one_out)

    model_config = {"extra": "forbid"}


def _resolve_bounds(log: ExternalLog, options: AnalyzeOptions) -> Bounds:
    if options.bounds is None:
        bounds = log.envelope()
        logger.warning("no bounds given; using the observed envelope %s", bounds.as_pairs())
        return bounds
    bounds = Bounds(lower=[lo for lo, _ in options.bounds], upper=[hi for _, hi in options.bounds])
    if bounds.dim != log.dim:
        raise InputDataError("DIMENSION_MISMATCH", f"bounds have dimension {bounds.dim}, the log has {log.dim}",
                             expected=log.dim, actual=bounds.dim)
    for iteration in log.iterations:
        offending = first_out_of_bounds(iteration.points, bounds)
        if offending is not None:
            row, col = offending
            raise InputDataError("OUT_OF_BOUNDS", f"iteration {iteration.label} row {row} coordinate {col} "
                                 "lies outside the bounds", iteration=iteration.label, row=row, column=col)
    return bounds


def analyze_log(csv_path: Union[str, Path], options: AnalyzeOptions) -> Path:
    """
    Compute the metric suite on an external optimizer's log.

    Iteration t's points are the batch and every earlier iteration (plus rows
    labelled as initial design) is the evaluated set. Exploration is the
    distance to the evaluated set unless a GP is fitted with fit_surrogate, in
    which case the surrogate-scored metrics are filled in as well. The log is
    fully parsed before anything is written.

    Returns:
        Path of the written trace
    """
    csv_path = Path(csv_path)
    log = ingest_csv(csv_path)
    bounds = _resolve_bounds(log, options)
    log = log.with_bounds(bounds)

    run_id = options.run_id or csv_path.stem
    path = Path(options.out) / f"run_{run_id}.jsonl"
    metric_options = MetricOptions.from_config(options)
    if not options.fit_surrogate:
        metric_options = replace(metric_options, exploration="distance")

    data = log.initial_set()
    records = [RunHeader(
        run_id=run_id,
        seed=options.seed,
        metadata={
            "mode": "posthoc",
            "source": csv_path.name,
            "dim": log.dim,
            "bounds": bounds.as_pairs(),
            "fit_surrogate": options.fit_surrogate,
            "exploration": metric_options.exploration,
            "fi_method": options.fi_method,
            "reference_model": {"kind": "regression_tree", "max_depth": options.tree_max_depth,
                                "min_leaf": options.tree_min_leaf},
        },
        init_points=np.asarray(data.points).tolist(),
        init_values=np.asarray(data.values).tolist(),
    )]
    best_history = [data.best_value] if data.n else []

    for step in log.batches():
        batch = Batch(points=step.points)
        model = guarded("surrogate", fit_gp, data) if options.fit_surrogate and data.n else None
        recorder = MetricRecorder(metric_options, options.seed, step.label)
        recorder.pre_evaluation(data, batch, bounds, model=model)
        data = data.extend(step.points, step.values) if data.n else EvaluatedSet(
            points=step.points, values=step.values, bounds=bounds)
        best_history.append(data.best_value)
        recorder.post_evaluation(step.values, best_history)
        records.append(IterationTrace(
            run_id=run_id,
            seed=options.seed,
            iter=step.label,
            batch=np.asarray(step.points).tolist(),
            batch_y=np.asarray(step.values).tolist(),
            best_y=data.best_value,
            metrics=recorder.to_metrics(),
        ))

    store = TraceStore(path).create()
    for record in records:
        store.append(record)
    logger.info("analyzed %s: %d iterations, trace %s", csv_path.name, len(records) - 1, path)
    return path
