"""
Candidate-set batch strategies.

These are simple stand-ins for Monte-Carlo batch acquisition functions: every
strategy picks k distinct rows of a finite candidate set, breaking ties by the
lowest candidate index. The Pareto strategy is a plain non-dominated-sorting
heuristic on (predicted value, distance to data); it is not a reproduction of
any published Pareto-based optimizer.
"""

import logging
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveFloat, PositiveInt

from batchscope.core.exceptions import MetricError
from batchscope.models.domain import Batch, CandidateSet, EvaluatedSet
from batchscope.models.scores import scores_to_array
from batchscope.services.exploration import distance_exploration
from batchscope.services.gp_surrogate import GpModel, fit_gp
from batchscope.services.point_metrics import non_dominated_layers
from batchscope.utils.geometry import pairwise_distance, unique_row_indices
from batchscope.utils.rng import make_rng
from batchscope.utils.validators import check_dimension

logger = logging.getLogger(__name__)

StrategyName = Literal["random", "ucb", "maximin", "pareto"]


class StrategyConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: StrategyName
    batch_size: PositiveInt
    ucb_beta: PositiveFloat = 2.0


def _selectable(candidates: CandidateSet, k: int) -> np.ndarray:
    """Indices of distinct candidate rows; raises when fewer than k exist."""
    if k < 1:
        raise MetricError("INVALID_BATCH_SIZE", f"batch size must be positive, got {k}", k=k)
    if k > candidates.m:
        raise MetricError(
            "BATCH_LARGER_THAN_CANDIDATES",
            f"batch size {k} exceeds candidate count {candidates.m}",
            k=k,
            m=candidates.m,
        )
    distinct = unique_row_indices(np.asarray(candidates.points))
    if distinct.size < k:
        raise MetricError(
            "DEGENERATE_CANDIDATE_SET",
            f"only {distinct.size} distinct candidates for a batch of {k}",
            distinct=int(distinct.size),
            k=k,
        )
    return distinct


def select_random(candidates: CandidateSet, k: int, seed: int) -> Batch:
    """k distinct candidates uniformly without replacement, returned in index order."""
    pool = _selectable(candidates, k)
    rng = make_rng(seed)
    chosen = np.sort(rng.choice(pool, size=k, replace=False))
    return candidates.take(chosen)


def select_maximin(data: EvaluatedSet, candidates: CandidateSet, k: int) -> Batch:
    """
    Greedy farthest-point selection.

    Each pick maximizes the distance to the nearest point among the evaluated
    set and the picks made so far.
    """
    data.require_nonempty("maximin selection")
    check_dimension(np.asarray(candidates.points), data.dim, "candidates")
    pool = _selectable(candidates, k)
    points = np.asarray(candidates.points)[pool]
    nearest = distance_exploration(data, points)
    chosen = []
    for _ in range(k):
        pos = int(np.argmax(nearest))
        chosen.append(int(pool[pos]))
        nearest = np.minimum(nearest, pairwise_distance(points, points[pos]).ravel())
        nearest[pos] = -np.inf
    return candidates.take(chosen)


def select_greedy_ucb(
    model: GpModel,
    data: EvaluatedSet,
    candidates: CandidateSet,
    k: int,
    beta: float = 2.0,
) -> Batch:
    """
    Greedy lower confidence bound with constant-liar fantasies.

    Picks argmin of mu(x) - beta * std(x); after each pick the point is added
    to the data with the current best observed value and the GP is refit.
    Refit errors propagate.
    """
    data.require_nonempty("ucb selection")
    pool = _selectable(candidates, k)
    points = np.asarray(candidates.points)[pool]
    available = np.ones(pool.size, dtype=bool)
    liar = data.best_value
    current_model, current_data = model, data
    chosen = []
    for step in range(k):
        mean, std = current_model.predict(points)
        score = np.where(available, mean - beta * std, np.inf)
        pos = int(np.argmin(score))
        chosen.append(int(pool[pos]))
        available[pos] = False
        if step + 1 < k:
            current_data = current_data.extend(points[pos], [liar])
            current_model = fit_gp(current_data)
    return candidates.take(chosen)


def _greedy_spread(points: np.ndarray, members: np.ndarray, picked: list[int], slots: int,
                   anchor_order: np.ndarray) -> list[int]:
    """
    Fill slots from members by greedy maximin distance to the picked rows.

    With nothing picked yet the first member of anchor_order is taken.
    """
    taken = []
    remaining = list(members)
    while len(taken) < slots and remaining:
        current = picked + taken
        if not current:
            choice = next(int(i) for i in anchor_order if i in remaining)
        else:
            dist = pairwise_distance(points[remaining], points[current]).min(axis=1)
            choice = int(remaining[int(np.argmax(dist))])
        taken.append(choice)
        remaining.remove(choice)
    return taken


def pareto_select(points: np.ndarray, scores, k: int) -> list[int]:
    """
    Pick k rows by non-dominated layers on the given scores.

    Whole layers are taken while they fit; the layer that does not fit is
    thinned by greedy maximin distance, anchored at its lowest-mu member when
    nothing has been picked yet. Returns row indices in selection order.
    """
    arr = scores_to_array(scores)
    picked: list[int] = []
    for layer in non_dominated_layers(arr):
        slots = k - len(picked)
        if slots <= 0:
            break
        if layer.size <= slots:
            picked.extend(int(i) for i in layer)
        else:
            # layer comes sorted by ascending mu
            picked.extend(_greedy_spread(points, layer, picked, slots, layer))
    return picked


def select_pareto(model: GpModel, data: EvaluatedSet, candidates: CandidateSet, k: int) -> Batch:
    """
    Score candidates on (GP mean, negated distance to data) and select k
    by non-dominated layers with maximin thinning.
    """
    data.require_nonempty("pareto selection")
    pool = _selectable(candidates, k)
    points = np.asarray(candidates.points)[pool]
    mu = model.predict_mean(points)
    sigma = -distance_exploration(data, points)
    chosen = pareto_select(points, np.column_stack([mu, sigma]), k)
    return candidates.take(sorted(int(pool[i]) for i in chosen))


def select_batch(
    config: StrategyConfig,
    data: EvaluatedSet,
    candidates: CandidateSet,
    seed: int,
    model: Optional[GpModel] = None,
) -> Batch:
    """Dispatch to the configured strategy, fitting the GP when one is needed."""
    if config.name == "random":
        return select_random(candidates, config.batch_size, seed)
    if config.name == "maximin":
        return select_maximin(data, candidates, config.batch_size)
    model = model if model is not None else fit_gp(data)
    if config.name == "ucb":
        return select_greedy_ucb(model, data, candidates, config.batch_size, config.ucb_beta)
    return select_pareto(model, data, candidates, config.batch_size)
