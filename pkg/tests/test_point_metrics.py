import numpy as np
import pytest

from batchscope.core.exceptions import BatchScopeError, MetricError
from batchscope.models.domain import Bounds, EvaluatedSet
from batchscope.models.scores import ParetoFront2D, ReferencePoint2D
from batchscope.services.batch_metrics import hve
from batchscope.services.point_metrics import (
    chee,
    default_reference,
    hv_union_2d,
    mdpe,
    mdpe_batch,
    non_dominated_layers,
    pareto_front,
    pce,
)


def test_pce_full_coverage(unit_square):
    result = pce([[0.0, 0.0], [1.0, 1.0]], unit_square)
    np.testing.assert_allclose(result.per_dim, [1.0, 1.0])
    assert result.average == 1.0


def test_pce_single_point(unit_square):
    assert pce([[0.3, 0.4]], unit_square).average == 0.0


def test_pce_hand_fixture(unit_square):
    result = pce([[0.0, 0.0], [0.5, 1.0]], unit_square)
    np.testing.assert_allclose(result.per_dim, [0.5, 1.0], atol=1e-12)
    assert result.average == pytest.approx(0.75, abs=1e-12)


def test_pce_dimension_mismatch():
    with pytest.raises(BatchScopeError) as info:
        pce([[0.0, 0.0]], Bounds.uniform(0.0, 1.0, 3))
    assert info.value.code == "DIMENSION_MISMATCH"


def test_pce_rejects_empty(unit_square):
    with pytest.raises(MetricError):
        pce(EvaluatedSet.empty(2, unit_square), unit_square)


def test_mdpe_examples():
    assert mdpe([1.0, 2.0], [[1.0, 2.0]]) == 0.0
    assert mdpe([3.0, 4.0], [[0.0, 0.0]]) == pytest.approx(5.0)
    assert mdpe([1.0, 0.0], [[0.0, 0.0], [2.0, 0.0]]) == pytest.approx(1.0, abs=1e-12)


def test_mdpe_needs_evaluations():
    with pytest.raises(MetricError) as info:
        mdpe_batch([[0.0, 0.0]], EvaluatedSet.empty(2))
    assert info.value.code == "EMPTY_EVALUATED_SET"


def test_mdpe_scale_equivariance(rng):
    batch, data = rng.normal(size=(4, 3)), rng.normal(size=(9, 3))
    np.testing.assert_allclose(mdpe_batch(3.0 * batch, 3.0 * data), 3.0 * mdpe_batch(batch, data), rtol=1e-12)


def test_pareto_front_examples():
    assert pareto_front(np.array([[1.0, 1.0]])).indices == (0,)
    assert set(pareto_front(np.array([[1.0, 2.0], [2.0, 1.0], [2.0, 2.0]])).indices) == {0, 1}
    assert pareto_front(np.array([[3.0, 3.0]] * 4)).indices == (0,)


def test_layers_partition_every_index(rng):
    scores = rng.normal(size=(30, 2))
    layers = non_dominated_layers(scores)
    assert sorted(np.concatenate(layers).tolist()) == list(range(30))
    assert set(layers[0].tolist()) == set(pareto_front(scores).indices)


def test_hv_union_examples():
    single = np.array([[1.0, 1.0]])
    assert hv_union_2d(ParetoFront2D(indices=(0,)), single, ReferencePoint2D(r_mu=2.0, r_sigma=2.0)) == 1.0
    pair = np.array([[1.0, 2.0], [2.0, 1.0]])
    r = ReferencePoint2D(r_mu=3.0, r_sigma=3.0)
    assert hv_union_2d(ParetoFront2D(indices=(0, 1)), pair, r) == pytest.approx(3.0, abs=1e-12)
    at_reference = np.array([[3.0, 3.0]])
    assert hv_union_2d(ParetoFront2D(indices=(0,)), at_reference, r) == 0.0


def test_hv_union_matches_monte_carlo(rng):
    for _ in range(10):
        scores = rng.uniform(size=(8, 2))
        front = pareto_front(scores)
        r = default_reference(scores)
        exact = hv_union_2d(front, scores, r)

        members = scores[list(front.indices)]
        low = members.min(axis=0)
        samples = rng.uniform(low, r.as_array(), size=(1_000_000, 2))
        dominated = np.zeros(samples.shape[0], dtype=bool)
        for point in members:
            dominated |= np.all(samples >= point, axis=1)
        box = np.prod(r.as_array() - low)
        assert exact == pytest.approx(box * dominated.mean(), abs=1e-2)


def test_chee_equals_recomputed_difference(rng):
    for _ in range(10):
        scores = rng.uniform(size=(12, 2))
        r = default_reference(scores)
        front = pareto_front(scores)
        total = hv_union_2d(front, scores, r)
        for i in range(scores.shape[0]):
            without = ParetoFront2D(indices=tuple(j for j in front.indices if j != i))
            removed = hv_union_2d(without, scores, r)
            assert chee(i, scores, r).pre == pytest.approx(total - removed, abs=1e-12)


def test_chee_examples():
    r = ReferencePoint2D(r_mu=2.0, r_sigma=2.0)
    assert chee(0, np.array([[1.0, 1.0]]), r).pre == pytest.approx(1.0)
    scores = np.array([[1.0, 1.0], [1.5, 1.5]])
    assert chee(1, scores, r).pre == 0.0


def test_chee_post_outside_reference_box_is_zero():
    scores = np.array([[1.0, 1.0], [0.5, 1.5]])
    r = ReferencePoint2D(r_mu=2.0, r_sigma=2.0)
    result = chee(1, scores, r, observed=2.5)
    assert result.pre > 0
    assert result.post == 0.0


def test_chee_post_uses_observed_value():
    scores = np.array([[1.0, 1.0]])
    r = ReferencePoint2D(r_mu=2.0, r_sigma=2.0)
    assert chee(0, scores, r, observed=0.0).post == pytest.approx(2.0)


def test_chee_index_out_of_range():
    with pytest.raises(MetricError) as info:
        chee(3, np.array([[1.0, 1.0]]), ReferencePoint2D(r_mu=2.0, r_sigma=2.0))
    assert info.value.code == "INDEX_OUT_OF_RANGE"


def test_default_reference_examples():
    r = default_reference(np.array([[5.0, 5.0], [5.0, 5.0]]))
    assert (r.r_mu, r.r_sigma) == (6.0, 6.0)
    r = default_reference(np.array([[0.0, 0.0], [10.0, 2.0]]))
    assert r.r_mu == pytest.approx(11.0)
    assert r.r_sigma == pytest.approx(2.2)


def test_hv_union_ignores_dominated_members():
    scores = np.array([[1.0, 1.0], [2.0, 2.0]])
    r = ReferencePoint2D(r_mu=3.0, r_sigma=3.0)
    area = hv_union_2d(ParetoFront2D(indices=(0, 1)), scores, r)
    assert area == pytest.approx(4.0, abs=1e-12)
    assert area >= max(np.prod(r.as_array() - point) for point in scores)


def test_hv_union_bounded_by_hve(rng):
    for _ in range(10):
        scores = rng.uniform(size=(15, 2))
        front = pareto_front(scores)
        r = default_reference(scores)
        members = scores[list(front.indices)]
        rectangles = np.prod(r.as_array() - members, axis=1)
        total = hv_union_2d(front, scores, r)
        assert total <= hve(members, r) + 1e-12
        assert total >= rectangles.max() - 1e-12


def test_exclusive_contributions_sum_below_union(rng):
    for _ in range(10):
        scores = rng.uniform(size=(15, 2))
        front = pareto_front(scores)
        r = default_reference(scores)
        contributions = sum(chee(i, scores, r).pre for i in front.indices)
        assert contributions <= hv_union_2d(front, scores, r) + 1e-12


def test_pce_and_mdpe_ignore_row_order(rng, unit_square):
    points = rng.uniform(size=(10, 2))
    shuffled = points[rng.permutation(10)]
    batch = rng.uniform(size=(3, 2))
    np.testing.assert_allclose(pce(points, unit_square).per_dim, pce(shuffled, unit_square).per_dim)
    np.testing.assert_allclose(mdpe_batch(batch, points), mdpe_batch(batch, shuffled), rtol=1e-12)
