import csv
import json
import logging
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
from pydantic import BaseModel

from batchscope.core.exceptions import ConfigError, InputDataError, MetricError
from batchscope.models.trace import IterationTrace, TraceRecord, split_records
from batchscope.services.process_metrics import cr, optimization_stability
from batchscope.storage.csv_ingest import write_log_csv
from batchscope.storage.trace_store import list_traces, read_trace

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# metric series written as metric_<name>.csv, with the reduction applied to array metrics
SCALAR_SERIES = ("pce_avg", "des", "dis_logdet", "abd", "hve", "cr")
REDUCED_SERIES: dict[str, Callable[[list[float]], float]] = {
    "mdpe": lambda values: float(np.mean(values)),
    "chee_pre": lambda values: float(np.sum(values)),
    "chee_post": lambda values: float(np.sum(values)),
}
FEATURE_TABLES = ("fiee_eta", "fiee_lambda", "fibb", "fis_abs")
CONSISTENT_KEYS = ("problem", "dim", "strategy")


class RunSeries(BaseModel):
    """One run reduced to what the report needs."""

    run_id: str
    metadata: dict
    best_history: list[float]
    iterations: list[IterationTrace]

    @property
    def final_best(self) -> float:
        return self.best_history[-1]


class RunAggregate(BaseModel):
    problem: Optional[str] = None
    strategy: Optional[str] = None
    n_runs: int
    run_ids: list[str]
    iterations: list[int]
    best_y_mean: list[float]
    best_y_min: list[float]
    best_y_max: list[float]
    cr_per_run: dict[str, Optional[float]]
    cr_mean: Optional[float]
    os: float


def to_series(records: list[TraceRecord]) -> RunSeries:
    """
    Raises:
        InputDataError: MISSING_HEADER or EMPTY_TRACE
    """
    header, iterations = split_records(records)
    if header is None:
        if not iterations:
            raise InputDataError("EMPTY_TRACE", "trace holds no records")
        raise InputDataError("MISSING_HEADER", f"trace of {iterations[0].run_id} has no header line",
                             run_id=iterations[0].run_id)
    history = [min(header.init_values)] if header.init_values else []
    history.extend(record.best_y for record in iterations)
    if not history:
        raise InputDataError("EMPTY_TRACE", f"trace of {header.run_id} holds no evaluations", run_id=header.run_id)
    return RunSeries(run_id=header.run_id, metadata=header.metadata, best_history=history, iterations=iterations)


def _run_cr(series: RunSeries) -> Optional[float]:
    try:
        return cr(series.best_history)
    except MetricError as exc:
        logger.warning("cr of %s recorded as null: %s", series.run_id, exc.message)
        return None


def aggregate_runs(traces: list[list[TraceRecord]]) -> RunAggregate:
    """
    Multi-run summary: per-iteration best_y mean/min/max over runs, CR per run
    with its mean, and OS over the final best values.

    Runs of unequal length are aligned on their common prefix.

    Raises:
        InputDataError: TOO_FEW_RUNS or METADATA_MISMATCH
    """
    if len(traces) < 2:
        raise InputDataError("TOO_FEW_RUNS", f"aggregation needs at least 2 runs, got {len(traces)}",
                             required=2, actual=len(traces))
    runs = [to_series(records) for records in traces]
    reference = runs[0].metadata
    for run in runs[1:]:
        for key in CONSISTENT_KEYS:
            if run.metadata.get(key) != reference.get(key):
                raise InputDataError(
                    "METADATA_MISMATCH",
                    f"{run.run_id} has {key}={run.metadata.get(key)!r}, "
                    f"{runs[0].run_id} has {reference.get(key)!r}",
                    key=key,
                )

    length = min(len(run.best_history) for run in runs)
    if any(len(run.best_history) != length for run in runs):
        logger.warning("runs differ in length; aggregating the first %d best values", length)
    matrix = np.array([run.best_history[:length] for run in runs])
    # the initial-design best, when present, is labelled -1
    offset = 1 if len(runs[0].best_history) > len(runs[0].iterations) else 0

    cr_values = {run.run_id: _run_cr(run) for run in runs}
    defined = [value for value in cr_values.values() if value is not None]
    return RunAggregate(
        problem=reference.get("problem"),
        strategy=reference.get("strategy"),
        n_runs=len(runs),
        run_ids=[run.run_id for run in runs],
        iterations=[i - offset for i in range(length)],
        best_y_mean=matrix.mean(axis=0).tolist(),
        best_y_min=matrix.min(axis=0).tolist(),
        best_y_max=matrix.max(axis=0).tolist(),
        cr_per_run=cr_values,
        cr_mean=float(np.mean(defined)) if defined else None,
        os=optimization_stability([run.final_best for run in runs]),
    )


def _series_value(record: IterationTrace, name: str) -> Optional[float]:
    if name == "best_y":
        return record.best_y
    value = getattr(record.metrics, name)
    if value is None:
        return None
    if name in REDUCED_SERIES:
        return REDUCED_SERIES[name](value)
    return float(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _cell(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def write_metric_series(runs: list[RunSeries], out: Path) -> list[Path]:
    """metric_<name>.csv: one row per iteration, one column per run; empty cells are nulls."""
    iters = sorted({record.iter for run in runs for record in run.iterations})
    written = []
    for name in ("best_y",) + SCALAR_SERIES + tuple(REDUCED_SERIES):
        by_run = [{record.iter: _series_value(record, name) for record in run.iterations} for run in runs]
        rows = [[it] + [_cell(values.get(it)) for values in by_run] for it in iters]
        path = out / f"metric_{name}.csv"
        _write_csv(path, ["iter"] + [run.run_id for run in runs], rows)
        written.append(path)
    return written


def top_features(scores: np.ndarray, top_k: int) -> list[tuple[int, float]]:
    """(feature index, score) of the top_k largest |score|; ties go to the lower index."""
    order = sorted(range(scores.size), key=lambda j: (-abs(float(scores[j])), j))
    return [(j, float(scores[j])) for j in order[:top_k]]


def write_feature_tables(runs: list[RunSeries], out: Path, top_k: int) -> list[Path]:
    """features_<name>.csv: top_k features by final-iteration |score|, averaged over runs."""
    written = []
    for name in FEATURE_TABLES:
        finals = [
            getattr(run.iterations[-1].metrics, name)
            for run in runs
            if run.iterations and getattr(run.iterations[-1].metrics, name) is not None
        ]
        if not finals:
            logger.warning("no final-iteration %s values; table skipped", name)
            continue
        mean = np.mean(np.array(finals, dtype=np.float64), axis=0)
        rows = [[rank, f"x{j + 1}", repr(score)] for rank, (j, score) in enumerate(top_features(mean, top_k), start=1)]
        path = out / f"features_{name}.csv"
        _write_csv(path, ["rank", "feature", "score"], rows)
        written.append(path)
    return written


def report(
    trace_dir: PathLike,
    top_k: int = 10,
    out: Optional[PathLike] = None,
    traces: Optional[list[PathLike]] = None,
) -> list[Path]:
    """
    Build plot-ready report files from every run_*.jsonl trace in trace_dir.

    Writes metric_<name>.csv series, features_<name>.csv top-k tables and
    summary.json into out (default: trace_dir). summary.json carries the
    multi-run aggregate, OS included, when there are at least 2 runs. An
    explicit list of trace files replaces the directory scan.

    Raises:
        ConfigError: INVALID_TOP_K
        InputDataError: EMPTY_TRACE_DIR, or any trace format error
    """
    if top_k < 1:
        raise ConfigError("INVALID_TOP_K", f"top_k must be positive, got {top_k}", top_k=top_k)
    trace_dir = Path(trace_dir)
    paths = [Path(p) for p in traces] if traces is not None else list_traces(trace_dir)
    if not paths:
        raise InputDataError("EMPTY_TRACE_DIR", f"no run_*.jsonl traces in {trace_dir}", path=str(trace_dir))

    parsed = [read_trace(path) for path in paths]
    runs = [to_series(records) for records in parsed]
    out = Path(out) if out is not None else trace_dir
    out.mkdir(parents=True, exist_ok=True)

    written = write_metric_series(runs, out) + write_feature_tables(runs, out, top_k)
    summary: dict = {"n_runs": len(runs), "run_ids": [run.run_id for run in runs], "top_k": top_k}
    if len(runs) >= 2:
        summary.update(aggregate_runs(parsed).model_dump())
    else:
        summary["best_history"] = runs[0].best_history
        summary["cr"] = _run_cr(runs[0])
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    written.append(summary_path)
    logger.info("report on %d run(s) written to %s (%d files)", len(runs), out, len(written))
    return written


def export(trace_path: PathLike, csv_path: PathLike) -> Path:
    """
    Write a trace's evaluated data as iter,x1..xd,y. The initial design is
    labelled -1, batches keep their iteration number.
    """
    header, iterations = split_records(read_trace(trace_path))
    groups = []
    if header is not None and header.init_values:
        groups.append((-1, np.asarray(header.init_points), np.asarray(header.init_values)))
    groups.extend((record.iter, record.batch_array(), record.values_array()) for record in iterations)
    if not groups:
        raise InputDataError("EMPTY_TRACE", f"{trace_path} holds no evaluations", path=str(trace_path))
    csv_path = Path(csv_path)
    write_log_csv(csv_path, groups)
    logger.info("exported %d iteration group(s) to %s", len(groups), csv_path)
    return csv_path
