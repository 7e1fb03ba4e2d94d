import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from batchscope.core.exceptions import BatchScopeError, RunAbortedError
from batchscope.models.domain import EvaluatedSet
from batchscope.models.run_config import RunConfig
from batchscope.models.trace import IterationTrace, RunHeader
from batchscope.services.benchmarks import Problem, make_problem, sample_candidates
from batchscope.services.gp_surrogate import fit_gp
from batchscope.services.metric_suite import MetricOptions, MetricRecorder, guarded
from batchscope.services.sampling import StrategyConfig, select_batch
from batchscope.storage.trace_store import TraceStore
from batchscope.utils.rng import Stream, derive_seed

logger = logging.getLogger(__name__)


def trace_path(config: RunConfig, seed: int) -> Path:
    return Path(config.out) / f"run_{config.run_id(seed)}.jsonl"


class ExperimentService:
    """Runs the instrumented batch optimization loop, one trace file per seed."""

    def run(self, config: RunConfig) -> list[Path]:
        seeds = config.run_seeds()
        logger.info(
            "running %d run(s) of %s d=%d with %s, k=%d, T=%d, budget %d per run",
            len(seeds), config.problem, config.dim, config.strategy,
            config.batch_size, config.iterations, config.budget,
        )
        if config.workers > 1 and len(seeds) > 1:
            with ProcessPoolExecutor(max_workers=min(config.workers, len(seeds))) as pool:
                return list(pool.map(run_single, [config] * len(seeds), seeds))
        return [run_single(config, seed) for seed in seeds]


def run_single(config: RunConfig, seed: int) -> Path:
    """
    One seeded run. The trace is appended line by line, so a failure leaves
    every completed iteration on disk.

    Raises:
        RunAbortedError: any failure inside the loop, naming the iteration and
            the trace path
    """
    path = trace_path(config, seed)
    store = TraceStore(path).create()
    run_id = config.run_id(seed)
    problem = make_problem(config.problem, config.dim)
    iteration: Optional[int] = None
    try:
        data = _initial_design(config, problem, seed)
        store.append(RunHeader(
            run_id=run_id,
            seed=seed,
            metadata=config.metadata(),
            init_points=data.points.tolist(),
            init_values=data.values.tolist(),
        ))
        best_history = [data.best_value]
        for iteration in range(config.iterations):
            record, data = _iteration(config, problem, data, seed, iteration, run_id, best_history)
            store.append(record)
            logger.info("%s iter %d: best_y=%.6g", run_id, iteration, record.best_y)
    except BatchScopeError as exc:
        raise RunAbortedError(
            "RUN_ABORTED",
            f"{run_id} stopped at iteration {iteration}: {exc.message}",
            run_id=run_id, iteration=iteration, cause=exc.code, cause_detail=exc.detail, trace=str(path),
        ) from exc
    except Exception as exc:
        raise RunAbortedError(
            "RUN_ABORTED",
            f"{run_id} stopped at iteration {iteration}: {exc}",
            run_id=run_id, iteration=iteration, cause=type(exc).__name__, trace=str(path),
        ) from exc

    if problem.evaluations_used != config.budget:
        raise RunAbortedError(
            "BUDGET_MISMATCH",
            f"{run_id} used {problem.evaluations_used} evaluations, expected {config.budget}",
            run_id=run_id, expected=config.budget, actual=problem.evaluations_used, trace=str(path),
        )
    logger.info("%s finished: %d evaluations, trace %s", run_id, problem.evaluations_used, path)
    return path


def _initial_design(config: RunConfig, problem: Problem, seed: int) -> EvaluatedSet:
    design = sample_candidates(problem.bounds, config.init_size, derive_seed(seed, Stream.INIT))
    points = np.asarray(design.points)
    return EvaluatedSet(points=points, values=problem.evaluate(points), bounds=problem.bounds)


def _iteration(
    config: RunConfig,
    problem: Problem,
    data: EvaluatedSet,
    seed: int,
    iteration: int,
    run_id: str,
    best_history: list[float],
) -> tuple[IterationTrace, EvaluatedSet]:
    candidates = sample_candidates(
        problem.bounds,
        config.candidates,
        derive_seed(seed, iteration, Stream.CANDIDATES),
        space_filling=config.space_filling,
    )
    model = guarded("surrogate", fit_gp, data)
    strategy = StrategyConfig(name=config.strategy, batch_size=config.batch_size, ucb_beta=config.ucb_beta)
    batch = select_batch(strategy, data, candidates, derive_seed(seed, iteration, Stream.SELECTION), model=model)

    recorder = MetricRecorder(MetricOptions.from_config(config), seed, iteration)
    recorder.pre_evaluation(data, batch, problem.bounds, model=model, population=np.asarray(candidates.points))

    batch_y = problem.evaluate(batch.points)
    data = data.extend(batch.points, batch_y)
    best_history.append(data.best_value)
    recorder.post_evaluation(batch_y, best_history)

    record = IterationTrace(
        run_id=run_id,
        seed=seed,
        iter=iteration,
        batch=np.asarray(batch.points).tolist(),
        batch_y=np.asarray(batch_y).tolist(),
        best_y=data.best_value,
        metrics=recorder.to_metrics(),
    )
    return record, data


experiment_service = ExperimentService()
