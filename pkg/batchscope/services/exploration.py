import numpy as np

from batchscope.models.domain import EvaluatedSet
from batchscope.utils.geometry import min_distance


def distance_exploration(data: EvaluatedSet, points) -> np.ndarray:
    """
    Model-agnostic exploration score: distance from each query to its nearest
    evaluated point (raw orientation, larger is more exploratory).
    """
    data.require_nonempty("distance exploration")
    return min_distance(points, data.points)
