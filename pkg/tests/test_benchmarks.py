import numpy as np
import pytest

from batchscope.core.exceptions import BatchScopeError, ConfigError
from batchscope.services.benchmarks import FAMILIES, evaluate, make_problem, sample_candidates
from batchscope.utils.validators import validate_in_bounds


def test_levy_and_rastrigin_bounds():
    levy = make_problem("levy", 6)
    np.testing.assert_array_equal(levy.bounds.lower, np.full(6, -10.0))
    np.testing.assert_array_equal(levy.bounds.upper, np.full(6, 10.0))
    rastrigin = make_problem("rastrigin", 10)
    np.testing.assert_array_equal(rastrigin.bounds.lower, np.full(10, -5.12))
    np.testing.assert_array_equal(rastrigin.bounds.upper, np.full(10, 5.12))


def test_branin_is_two_dimensional_only():
    with pytest.raises(ConfigError) as info:
        make_problem("branin", 3)
    assert info.value.code == "ILLEGAL_DIMENSION"


def test_unknown_problem():
    with pytest.raises(ConfigError) as info:
        make_problem("sphere", 2)
    assert info.value.code == "UNKNOWN_PROBLEM"


def test_known_minima():
    assert evaluate(make_problem("rastrigin", 4), np.zeros((1, 4)))[0] == pytest.approx(0.0, abs=1e-12)
    assert evaluate(make_problem("levy", 6), np.ones((1, 6)))[0] == pytest.approx(0.0, abs=1e-12)
    assert evaluate(make_problem("branin", 2), [[np.pi, 2.275]])[0] == pytest.approx(0.397887, abs=1e-5)
    assert evaluate(make_problem("rosenbrock", 3), np.ones((1, 3)))[0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("name, dim", [("branin", 2), ("rosenbrock", 3), ("rastrigin", 5), ("levy", 4)])
def test_minimizer_attains_minimum(name, dim):
    family = FAMILIES[name]
    problem = make_problem(name, dim)
    value = problem.evaluate(family.minimizer(dim))[0]
    assert value == pytest.approx(family.minimum, abs=1e-5)


def test_evaluation_counter_counts_rows():
    problem = make_problem("levy", 2)
    problem.evaluate(np.zeros((3, 2)))
    problem.evaluate(np.ones((1, 2)))
    assert problem.evaluations_used == 4


def test_out_of_bounds_names_row_and_column():
    problem = make_problem("rastrigin", 2)
    with pytest.raises(BatchScopeError) as info:
        problem.evaluate([[0.0, 0.0], [0.0, 6.0]])
    assert info.value.code == "OUT_OF_BOUNDS"
    assert info.value.detail == {"row": 1, "column": 1}
    assert problem.evaluations_used == 0


def test_candidates_are_deterministic_and_in_bounds(unit_square):
    first = sample_candidates(unit_square, 100, seed=7)
    second = sample_candidates(unit_square, 100, seed=7)
    assert first.m == 100
    np.testing.assert_array_equal(first.points, second.points)
    assert validate_in_bounds(first.points, unit_square)


def test_space_filling_candidates_cover_every_stratum(unit_square):
    candidates = sample_candidates(unit_square, 50, seed=3, space_filling=True)
    for j in range(2):
        strata = np.floor(candidates.points[:, j] * 50).astype(int)
        assert sorted(strata) == list(range(50))


def test_protocol_candidate_count():
    problem = make_problem("rastrigin", 10)
    assert sample_candidates(problem.bounds, 1000, seed=0).m == 1000


def test_uniform_candidates_centre_on_the_box():
    bounds = make_problem("levy", 6).bounds
    m = 2000
    candidates = sample_candidates(bounds, m, seed=31)
    midpoint = (bounds.lower + bounds.upper) / 2.0
    standard_error = bounds.width / np.sqrt(12.0 * m)
    assert np.all(np.abs(candidates.points.mean(axis=0) - midpoint) <= 3.0 * standard_error)
