import numpy as np
import pytest

from batchscope.models.run_config import RunConfig
from batchscope.models.trace import split_records
from batchscope.services import experiment_service
from batchscope.services.benchmarks import make_problem
from batchscope.storage.trace_store import read_trace

SEEDS = range(10)
# cheaper importance estimates
LIGHT_METRICS = {"shapley_samples": 8, "permutation_repeats": 2, "fis_points": 16}

pytestmark = pytest.mark.slow


def _iterations(path):
    header, iterations = split_records(read_trace(path))
    assert header is not None
    return header, iterations


def test_levy_protocol_spends_the_exact_budget(tmp_path, monkeypatch):
    problems = []

    def tracking(name, dim):
        problem = make_problem(name, dim)
        problems.append(problem)
        return problem

    monkeypatch.setattr(experiment_service, "make_problem", tracking)
    config = RunConfig(problem="levy", dim=6, batch_size=4, candidates=1000, out=str(tmp_path), **LIGHT_METRICS)
    assert config.init_size == 14
    assert config.budget == 134

    for seed in SEEDS:
        header, iterations = _iterations(experiment_service.run_single(config, seed))
        assert len(header.init_values) == 14
        assert [record.iter for record in iterations] == list(range(30))
        assert all(record.k == 4 and record.dim == 6 for record in iterations)
    assert [problem.evaluations_used for problem in problems] == [134] * len(SEEDS)


def _median_mean_abd(tmp_path, strategy, **extra):
    config = RunConfig(problem="rastrigin", dim=10, batch_size=8, candidates=1000, strategy=strategy,
                       out=str(tmp_path / strategy), **LIGHT_METRICS, **extra)
    means = []
    for seed in SEEDS:
        header, iterations = _iterations(experiment_service.run_single(config, seed))
        assert len(header.init_values) == 22
        assert all(record.k == 8 for record in iterations)
        means.append(np.mean([record.metrics.abd for record in iterations]))
    return float(np.median(means))


def test_maximin_batches_sit_farther_from_data_than_ucb(tmp_path):
    maximin = _median_mean_abd(tmp_path, "maximin")
    ucb = _median_mean_abd(tmp_path, "ucb", ucb_beta=0.5)
    assert maximin > ucb


def test_ucb_gets_close_to_the_branin_minimum(tmp_path):
    config = RunConfig(problem="branin", dim=2, strategy="ucb", out=str(tmp_path), **LIGHT_METRICS)
    assert (config.batch_size, config.iterations) == (4, 30)
    finals = []
    for seed in SEEDS:
        _, iterations = _iterations(experiment_service.run_single(config, seed))
        finals.append(iterations[-1].best_y)
    assert np.median(finals) <= 1.4
