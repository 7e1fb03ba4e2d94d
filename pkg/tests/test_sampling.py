import numpy as np
import pytest

from batchscope.core.exceptions import MetricError
from batchscope.models.domain import CandidateSet, EvaluatedSet
from batchscope.services.exploration import distance_exploration
from batchscope.services.gp_surrogate import fit_gp
from batchscope.services.point_metrics import non_dominated_layers
from batchscope.services.sampling import (
    StrategyConfig,
    pareto_select,
    select_batch,
    select_greedy_ucb,
    select_maximin,
    select_pareto,
    select_random,
)

CORNERS_AND_CENTER = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]]


@pytest.fixture
def centered_data(unit_square):
    return EvaluatedSet(points=[[0.5, 0.5]], values=[0.0], bounds=unit_square)


@pytest.fixture
def fitted(rng, unit_square):
    points = rng.uniform(size=(12, 2))
    data = EvaluatedSet(points=points, values=np.sum((points - 0.3) ** 2, axis=1), bounds=unit_square)
    candidates = CandidateSet(points=rng.uniform(size=(60, 2)))
    return data, candidates, fit_gp(data)


def test_random_with_k_equal_m_takes_everything(rng):
    candidates = CandidateSet(points=rng.uniform(size=(6, 2)))
    batch = select_random(candidates, 6, seed=1)
    assert batch.source_indices == tuple(range(6))


def test_random_is_deterministic(rng):
    candidates = CandidateSet(points=rng.uniform(size=(50, 3)))
    assert select_random(candidates, 1, seed=9).source_indices == select_random(candidates, 1, seed=9).source_indices


def test_batch_larger_than_candidates(rng):
    with pytest.raises(MetricError) as info:
        select_random(CandidateSet(points=rng.uniform(size=(3, 2))), 4, seed=0)
    assert info.value.code == "BATCH_LARGER_THAN_CANDIDATES"


def test_ucb_without_exploration_picks_lowest_mean(fitted):
    data, candidates, model = fitted
    batch = select_greedy_ucb(model, data, candidates, 1, beta=0.0)
    assert batch.source_indices[0] == int(np.argmin(model.predict_mean(candidates.points)))


def test_ucb_with_huge_beta_picks_most_uncertain(fitted):
    data, candidates, model = fitted
    batch = select_greedy_ucb(model, data, candidates, 1, beta=1e6)
    assert batch.source_indices[0] == int(np.argmax(model.predict_std(candidates.points)))


def test_ucb_batch_is_distinct(fitted):
    data, candidates, model = fitted
    batch = select_greedy_ucb(model, data, candidates, 8)
    assert batch.k == 8
    assert len(set(batch.source_indices)) == 8


def test_maximin_picks_a_corner(centered_data):
    candidates = CandidateSet(points=CORNERS_AND_CENTER)
    assert select_maximin(centered_data, candidates, 1).source_indices[0] in {0, 1, 2, 3}
    pair = select_maximin(centered_data, candidates, 2).source_indices
    assert set(pair) <= {0, 1, 2, 3} and len(set(pair)) == 2


def test_maximin_never_prefers_an_evaluated_point(centered_data):
    candidates = CandidateSet(points=CORNERS_AND_CENTER)
    assert 4 not in select_maximin(centered_data, candidates, 4).source_indices


def test_identical_candidates_are_degenerate(fitted):
    data, _, model = fitted
    candidates = CandidateSet(points=np.full((5, 2), 0.4))
    with pytest.raises(MetricError) as info:
        select_pareto(model, data, candidates, 2)
    assert info.value.code == "DEGENERATE_CANDIDATE_SET"


def test_pareto_select_thins_a_layer_by_spread():
    points = np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
    scores = np.array([[1.0, -1.0], [2.0, -2.0], [3.0, -3.0]])
    assert sorted(pareto_select(points, scores, 2)) == [0, 2]


def _pairwise_non_dominated(scores: np.ndarray) -> bool:
    for i in range(scores.shape[0]):
        for j in range(scores.shape[0]):
            if i != j and np.all(scores[i] <= scores[j]) and np.any(scores[i] < scores[j]):
                return False
    return True


def test_pareto_select_picks_are_mutually_non_dominated(rng):
    mu = np.sort(rng.uniform(size=8))
    front = np.column_stack([mu, 1.0 - mu])
    dominated = front[:4] + 0.5
    scores = np.vstack([front, dominated])
    points = rng.uniform(size=(scores.shape[0], 2))
    chosen = pareto_select(points, scores, 5)
    assert len(chosen) == 5
    assert all(i < 8 for i in chosen)
    assert _pairwise_non_dominated(scores[chosen])


def test_select_pareto_stays_on_the_first_front(fitted):
    data, candidates, model = fitted
    points = np.asarray(candidates.points)
    scores = np.column_stack([model.predict_mean(points), -distance_exploration(data, points)])
    first = set(non_dominated_layers(scores)[0].tolist())
    for k in (2, 10):
        batch = select_pareto(model, data, candidates, k)
        rows = {int(np.flatnonzero(np.all(points == p, axis=1))[0]) for p in np.asarray(batch.points)}
        if k <= len(first):
            assert rows <= first
            assert _pairwise_non_dominated(scores[sorted(rows)])
        else:
            assert first <= rows


def test_pareto_select_skips_dominated_points():
    points = np.array([[0.0, 0.0], [0.1, 0.1], [5.0, 5.0]])
    scores = np.array([[1.0, 1.0], [2.0, 2.0], [0.5, 3.0]])
    assert sorted(pareto_select(points, scores, 2)) == [0, 2]


@pytest.mark.parametrize("name", ["random", "ucb", "maximin", "pareto"])
def test_select_batch_dispatch(fitted, name):
    data, candidates, model = fitted
    config = StrategyConfig(name=name, batch_size=4)
    batch = select_batch(config, data, candidates, seed=3, model=model)
    assert batch.k == 4
    assert len(set(batch.source_indices)) == 4
    again = select_batch(config, data, candidates, seed=3, model=model)
    assert again.source_indices == batch.source_indices
