import numpy as np
import pytest

from batchscope.core.exceptions import BatchScopeError, MetricError
from batchscope.models.domain import Batch, Bounds, CandidateSet, EvaluatedSet
from batchscope.models.scores import ExploreExploitScore, ReferencePoint2D, scores_from_arrays, scores_to_array
from batchscope.utils.geometry import min_distance, pairwise_distance, unique_row_indices
from batchscope.utils.rng import check_seed, derive_seed, make_rng
from batchscope.utils.validators import validate_in_bounds


def test_validate_in_bounds_inclusive(unit_square):
    assert validate_in_bounds([[0.5, 0.5]], unit_square)
    assert validate_in_bounds([[1.0, 0.0]], unit_square)
    assert not validate_in_bounds([[1.1, 0.5]], unit_square)


def test_validate_in_bounds_dimension_mismatch(unit_square):
    with pytest.raises(BatchScopeError) as info:
        validate_in_bounds([[0.5, 0.5, 0.5]], unit_square)
    assert info.value.code == "DIMENSION_MISMATCH"
    assert info.value.detail == {"expected": 2, "actual": 3}


def test_bounds_must_be_strict():
    with pytest.raises(BatchScopeError) as info:
        Bounds(lower=[0.0, 1.0], upper=[1.0, 1.0])
    assert info.value.code == "BOUNDS_NOT_STRICT"
    assert info.value.detail["dimension"] == 1


def test_evaluated_set_rejects_points_outside_bounds(unit_square):
    with pytest.raises(BatchScopeError) as info:
        EvaluatedSet(points=[[0.2, 0.2], [0.3, 1.5]], values=[1.0, 2.0], bounds=unit_square)
    assert info.value.code == "OUT_OF_BOUNDS"
    assert info.value.detail == {"row": 1, "column": 1}


def test_evaluated_set_row_count_mismatch():
    with pytest.raises(BatchScopeError) as info:
        EvaluatedSet(points=[[0.0], [1.0]], values=[1.0])
    assert info.value.code == "ROW_COUNT_MISMATCH"


def test_evaluated_set_empty_has_no_best_value():
    data = EvaluatedSet.empty(3)
    assert data.n == 0 and data.dim == 3
    with pytest.raises(MetricError) as info:
        data.best_value
    assert info.value.code == "EMPTY_EVALUATED_SET"


def test_evaluated_set_arrays_are_read_only():
    data = EvaluatedSet(points=[[0.0, 1.0]], values=[2.0])
    with pytest.raises(ValueError):
        data.points[0, 0] = 5.0


def test_deduplicated_averages_values():
    data = EvaluatedSet(points=[[1.0], [0.0], [1.0]], values=[2.0, 5.0, 4.0])
    merged = data.deduplicated()
    assert merged.n == 2
    np.testing.assert_allclose(merged.points.ravel(), [0.0, 1.0])
    np.testing.assert_allclose(merged.values, [5.0, 3.0])


def test_candidate_take_keeps_source_indices():
    candidates = CandidateSet(points=[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    batch = candidates.take([2, 0])
    assert batch.source_indices == (2, 0)
    np.testing.assert_array_equal(batch.points, [[2.0, 2.0], [0.0, 0.0]])


def test_batch_needs_a_point():
    with pytest.raises(BatchScopeError):
        Batch(points=np.empty((0, 2)))


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ([[0, 0]], [[3, 4]], [[5.0]]),
        ([[1, 2]], [[1, 2]], [[0.0]]),
        ([[0, 0], [1, 0]], [[0, 1]], [[1.0], [np.sqrt(2.0)]]),
    ],
)
def test_pairwise_distance_examples(a, b, expected):
    np.testing.assert_allclose(pairwise_distance(a, b), expected, atol=1e-12)


def test_pairwise_distance_symmetry_and_scaling(rng):
    a, b = rng.normal(size=(5, 3)), rng.normal(size=(4, 3))
    np.testing.assert_allclose(pairwise_distance(a, b).T, pairwise_distance(b, a), atol=1e-12)
    np.testing.assert_allclose(pairwise_distance(2.5 * a, 2.5 * b), 2.5 * pairwise_distance(a, b), rtol=1e-12)


def test_min_distance_examples():
    np.testing.assert_allclose(min_distance([[3, 4]], [[0, 0]]), [5.0])
    np.testing.assert_allclose(min_distance([[1, 1]], [[0, 0], [2, 0]]), [np.sqrt(2.0)])


def test_unique_row_indices_keeps_first_occurrence():
    points = np.array([[1.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 0.0]])
    np.testing.assert_array_equal(unique_row_indices(points), [0, 1])


def test_score_orientation_round_trip():
    score = ExploreExploitScore.from_raw(1.5, 0.25)
    assert score.sigma == -0.25
    assert score.sigma_raw == 0.25
    arr = scores_to_array(scores_from_arrays([1.0, 2.0], [0.5, 0.1]))
    np.testing.assert_allclose(arr, [[1.0, -0.5], [2.0, -0.1]])


def test_reference_point_must_cover_scores():
    with pytest.raises(MetricError) as info:
        ReferencePoint2D(r_mu=1.0, r_sigma=1.0).check_covers(np.array([[2.0, 0.0]]))
    assert info.value.code == "REFERENCE_POINT_INVALID"


def test_derived_seeds_are_deterministic_and_distinct():
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
    assert derive_seed(7, 1, 2) != derive_seed(7, 2, 1)
    np.testing.assert_array_equal(make_rng(7, 3).random(4), make_rng(7, 3).random(4))


@pytest.mark.parametrize("seed", [-1, 2**64, 1.5, True])
def test_invalid_seed(seed):
    with pytest.raises(BatchScopeError) as info:
        check_seed(seed)
    assert info.value.code == "INVALID_SEED"
