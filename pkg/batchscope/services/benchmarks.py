import logging
import threading
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from batchscope.core.exceptions import BatchScopeError, ConfigError
from batchscope.models.domain import Bounds, CandidateSet
from batchscope.utils.rng import make_rng
from batchscope.utils.validators import as_matrix, check_dimension, first_out_of_bounds

logger = logging.getLogger(__name__)


def branin(x: np.ndarray) -> np.ndarray:
    # minimum 0.397887 at (-pi, 12.275), (pi, 2.275), (9.42478, 2.475)
    a, b, c = 1.0, 5.1 / (4 * np.pi**2), 5.0 / np.pi
    r, s, t = 6.0, 10.0, 1.0 / (8 * np.pi)
    x1, x2 = x[:, 0], x[:, 1]
    return a * (x2 - b * x1**2 + c * x1 - r) ** 2 + s * (1 - t) * np.cos(x1) + s


def rosenbrock(x: np.ndarray) -> np.ndarray:
    return np.sum(100.0 * (x[:, 1:] - x[:, :-1] ** 2) ** 2 + (x[:, :-1] - 1.0) ** 2, axis=1)


def rastrigin(x: np.ndarray) -> np.ndarray:
    return 10.0 * x.shape[1] + np.sum(x**2 - 10.0 * np.cos(2 * np.pi * x), axis=1)


def levy(x: np.ndarray) -> np.ndarray:
    w = 1.0 + (x - 1.0) / 4.0
    head = np.sin(np.pi * w[:, 0]) ** 2
    body = np.sum((w[:, :-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * w[:, :-1] + 1.0) ** 2), axis=1)
    tail = (w[:, -1] - 1.0) ** 2 * (1.0 + np.sin(2 * np.pi * w[:, -1]) ** 2)
    return head + body + tail


@dataclass(frozen=True)
class ProblemFamily:
    """A benchmark family: closed form, bounds and its known optimum."""

    name: str
    function: Callable[[np.ndarray], np.ndarray]
    bounds: Callable[[int], Bounds]
    min_dim: int
    fixed_dim: Optional[int]
    minimizer: Callable[[int], np.ndarray]
    minimum: float


FAMILIES: dict[str, ProblemFamily] = {
    "branin": ProblemFamily(
        name="branin",
        function=branin,
        bounds=lambda d: Bounds(lower=[-5.0, 0.0], upper=[10.0, 15.0]),
        min_dim=2,
        fixed_dim=2,
        minimizer=lambda d: np.array([np.pi, 2.275]),
        minimum=0.397887,
    ),
    "rosenbrock": ProblemFamily(
        name="rosenbrock",
        function=rosenbrock,
        bounds=lambda d: Bounds.uniform(-5.0, 10.0, d),
        min_dim=2,
        fixed_dim=None,
        minimizer=lambda d: np.ones(d),
        minimum=0.0,
    ),
    "rastrigin": ProblemFamily(
        name="rastrigin",
        function=rastrigin,
        bounds=lambda d: Bounds.uniform(-5.12, 5.12, d),
        min_dim=1,
        fixed_dim=None,
        minimizer=lambda d: np.zeros(d),
        minimum=0.0,
    ),
    "levy": ProblemFamily(
        name="levy",
        function=levy,
        bounds=lambda d: Bounds.uniform(-10.0, 10.0, d),
        min_dim=1,
        fixed_dim=None,
        minimizer=lambda d: np.ones(d),
        minimum=0.0,
    ),
}


class Problem:
    """
    An expensive black-box objective with an evaluation counter.

    The counter only grows, by exactly the number of rows passed to each
    evaluate call. One instance is meant for one sequential run.
    """

    def __init__(self, family: ProblemFamily, dim: int):
        self.family = family
        self.name = family.name
        self.dim = dim
        self.bounds = family.bounds(dim)
        self._evaluations_used = 0
        self._lock = threading.Lock()

    @property
    def evaluations_used(self) -> int:
        return self._evaluations_used

    def evaluate(self, points) -> np.ndarray:
        """
        Evaluate the objective at each row of points.

        Raises:
            BatchScopeError: OUT_OF_BOUNDS naming the offending row and coordinate,
                or DIMENSION_MISMATCH
        """
        pts = as_matrix(points)
        check_dimension(pts, self.dim)
        offending = first_out_of_bounds(pts, self.bounds)
        if offending is not None:
            row, col = offending
            raise BatchScopeError(
                "OUT_OF_BOUNDS",
                f"{self.name}: row {row} coordinate {col} = {pts[row, col]} outside "
                f"[{self.bounds.lower[col]}, {self.bounds.upper[col]}]",
                row=row,
                column=col,
            )
        values = self.family.function(pts)
        with self._lock:
            self._evaluations_used += pts.shape[0]
        return values


def make_problem(name: str, dim: int) -> Problem:
    """
    Build a benchmark problem with its standard literature bounds.

    Raises:
        ConfigError: UNKNOWN_PROBLEM or ILLEGAL_DIMENSION
    """
    family = FAMILIES.get(name.lower())
    if family is None:
        raise ConfigError(
            "UNKNOWN_PROBLEM",
            f"unknown problem {name!r}; choose one of {sorted(FAMILIES)}",
            problem=name,
        )
    if family.fixed_dim is not None and dim != family.fixed_dim:
        raise ConfigError(
            "ILLEGAL_DIMENSION",
            f"{family.name} is {family.fixed_dim}-dimensional only",
            problem=family.name,
            dim=dim,
        )
    if dim < family.min_dim:
        raise ConfigError(
            "ILLEGAL_DIMENSION",
            f"{family.name} needs at least {family.min_dim} dimension(s)",
            problem=family.name,
            dim=dim,
        )
    return Problem(family, dim)


def evaluate(problem: Problem, points) -> np.ndarray:
    return problem.evaluate(points)


def sample_candidates(bounds: Bounds, m: int, seed: int, space_filling: bool = False) -> CandidateSet:
    """
    Draw m points inside bounds.

    Uniform i.i.d. by default; space_filling switches to a scrambled Latin
    hypercube. Both are deterministic for a fixed seed.
    """
    if m < 1:
        raise ConfigError("INVALID_CANDIDATE_COUNT", f"candidate count must be positive, got {m}", m=m)
    rng = make_rng(seed)
    if space_filling:
        unit = qmc.LatinHypercube(d=bounds.dim, seed=rng).random(m)
        points = qmc.scale(unit, bounds.lower, bounds.upper)
    else:
        points = rng.uniform(bounds.lower, bounds.upper, size=(m, bounds.dim))
    return CandidateSet(points=points)
