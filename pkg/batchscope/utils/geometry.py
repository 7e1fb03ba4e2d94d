import numpy as np
from scipy.spatial.distance import cdist

from batchscope.utils.validators import as_matrix, check_dimension


def pairwise_distance(a, b) -> np.ndarray:
    """Euclidean distance matrix: entry (i, j) is ||a_i - b_j||."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    check_dimension(b, a.shape[1], "b")
    return cdist(a, b, metric="euclidean")


def min_distance(queries, reference) -> np.ndarray:
    """For each query row, the distance to its nearest reference row."""
    return pairwise_distance(queries, reference).min(axis=1)


def unique_row_indices(points: np.ndarray) -> np.ndarray:
    """Indices of the first occurrence of every distinct row, in ascending order."""
    _, first = np.unique(points, axis=0, return_index=True)
    return np.sort(first)
