import numpy as np
import pytest

from batchscope.core.exceptions import ModelFitError
from batchscope.models.domain import Bounds, EvaluatedSet
from batchscope.services.gp_surrogate import fit_gp, gp_predict


def _posterior_oracle(x_train, y, x_query, ell, s2, jitter):
    def kernel(a, b):
        return s2 * np.exp(-((a[:, None] - b[None, :]) ** 2) / (2 * ell**2))

    y_mean = y.mean()
    gram = kernel(x_train, x_train) + jitter * np.eye(x_train.size)
    k_star = kernel(x_train, x_query)
    mean = y_mean + k_star.T @ np.linalg.solve(gram, y - y_mean)
    var = s2 - np.sum(k_star * np.linalg.solve(gram, k_star), axis=0)
    return mean, var


def test_two_point_posterior_matches_closed_form():
    data = EvaluatedSet(points=[[0.0], [1.0]], values=[1.0, 2.0])
    model = fit_gp(data, length_scale=1.0, signal_var=1.0)
    mean, std = model.predict([[0.5]])
    oracle_mean, oracle_var = _posterior_oracle(np.array([0.0, 1.0]), np.array([1.0, 2.0]), np.array([0.5]),
                                                1.0, 1.0, model.jitter)
    assert mean[0] == pytest.approx(oracle_mean[0], abs=1e-9)
    assert std[0] ** 2 == pytest.approx(oracle_var[0], abs=1e-9)
    assert mean[0] == pytest.approx(1.5, abs=1e-9)


def test_near_interpolation_at_training_inputs():
    data = EvaluatedSet(points=[[0.2], [0.9]], values=[3.0, -1.0])
    model = fit_gp(data)
    mean, std = model.predict(data.points)
    np.testing.assert_allclose(mean, data.values, rtol=1e-3)
    assert np.all(std <= 1e-3 * model.signal_std)


def test_prior_reversion_far_from_data():
    data = EvaluatedSet(points=[[0.0], [1.0]], values=[0.0, 1.0])
    model = fit_gp(data, length_scale=1.0)
    _, std = model.predict([[20.0]])
    assert std[0] == pytest.approx(model.signal_std, rel=1e-2)


def test_constant_targets_floor_the_variance():
    data = EvaluatedSet(points=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], values=[4.0, 4.0, 4.0])
    model = fit_gp(data)
    assert model.signal_var == pytest.approx(1e-12)
    np.testing.assert_allclose(model.predict_mean([[0.3, 0.7], [0.5, 0.5]]), 4.0, atol=1e-9)


def test_duplicate_rows_are_merged():
    data = EvaluatedSet(points=[[0.0], [0.0], [1.0]], values=[1.0, 3.0, 0.0])
    model = fit_gp(data)
    assert model.train_unit.shape == (2, 1)
    assert model.predict_mean([[0.0]])[0] == pytest.approx(2.0, rel=1e-3)


def test_needs_two_distinct_points():
    with pytest.raises(ModelFitError) as info:
        fit_gp(EvaluatedSet(points=[[0.5], [0.5]], values=[1.0, 1.0]))
    assert info.value.code == "INSUFFICIENT_DATA"


def test_inputs_scaled_by_bounds(unit_square):
    points = np.array([[0.1, 0.2], [0.7, 0.4], [0.3, 0.9]])
    scaled_data = EvaluatedSet(points=points * 10.0, values=[1.0, 2.0, 0.5],
                               bounds=Bounds.uniform(0.0, 10.0, 2))
    plain = fit_gp(EvaluatedSet(points=points, values=[1.0, 2.0, 0.5], bounds=unit_square))
    scaled = fit_gp(scaled_data)
    query = np.array([[0.5, 0.5]])
    np.testing.assert_allclose(scaled.predict_mean(query * 10.0), plain.predict_mean(query), rtol=1e-9)


def test_gp_predict_stores_negated_std():
    data = EvaluatedSet(points=[[0.0], [1.0]], values=[0.0, 1.0])
    model = fit_gp(data)
    scores = gp_predict(model, [[0.5]])
    mean, std = model.predict([[0.5]])
    assert scores[0].mu == pytest.approx(mean[0])
    assert scores[0].sigma == pytest.approx(-std[0])


def test_posterior_variance_never_exceeds_signal_variance(rng, unit_square):
    points = rng.uniform(size=(15, 2))
    data = EvaluatedSet(points=points, values=np.sin(4.0 * points).sum(axis=1), bounds=unit_square)
    model = fit_gp(data)
    queries = np.vstack([rng.uniform(-0.5, 1.5, size=(200, 2)), points])
    _, std = model.predict(queries)
    assert np.all(std**2 <= model.signal_var + 1e-9)
