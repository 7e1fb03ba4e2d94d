import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from batchscope.core.exceptions import ModelFitError
from batchscope.models.domain import EvaluatedSet
from batchscope.models.partition import Partition, Rule
from batchscope.utils.validators import as_matrix, check_dimension

logger = logging.getLogger(__name__)

DEFAULT_MAX_DEPTH = 4
DEFAULT_MIN_LEAF = 5
MIN_VARIANCE_REDUCTION = 1e-12


@dataclass
class TreeNode:
    count: int
    mean: float
    variance: float
    rules: tuple[Rule, ...]
    feature: Optional[int] = None
    threshold: Optional[float] = None
    gain: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    leaf_id: Optional[int] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class TreeModel:
    """CART regression tree; rule x[feature] <= threshold sends a point left."""

    root: TreeNode
    dim: int
    n: int
    leaves: list[TreeNode] = field(default_factory=list)

    def apply(self, points) -> np.ndarray:
        """Leaf index (in partition order) reached by every row."""
        pts = as_matrix(points)
        check_dimension(pts, self.dim)
        out = np.empty(pts.shape[0], dtype=int)
        self._route(self.root, pts, np.arange(pts.shape[0]), out)
        return out

    def _route(self, node: TreeNode, pts: np.ndarray, rows: np.ndarray, out: np.ndarray) -> None:
        if node.is_leaf:
            out[rows] = node.leaf_id
            return
        goes_left = pts[rows, node.feature] <= node.threshold
        self._route(node.left, pts, rows[goes_left], out)
        self._route(node.right, pts, rows[~goes_left], out)

    def predict(self, points) -> np.ndarray:
        means = np.array([leaf.mean for leaf in self.leaves])
        return means[self.apply(points)]

    def impurity_importance(self) -> np.ndarray:
        """Total variance reduction per feature, normalized to sum 1 (zeros for one leaf)."""
        totals = np.zeros(self.dim)
        stack = [self.root]
        while stack:
            node = stack.pop()
            if not node.is_leaf:
                totals[node.feature] += node.gain
                stack.extend([node.left, node.right])
        total = totals.sum()
        return totals / total if total > 0 else totals


def _best_split(x: np.ndarray, y: np.ndarray, min_leaf: int) -> tuple[Optional[int], float, float]:
    """
    Greedy variance-reduction split over every feature.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values. Ties go to the lowest feature index, then the lowest threshold.
    Returns (feature, threshold, sse_reduction).
    """
    n = y.size
    centered = y - y.mean()
    parent_sse = float(np.dot(centered, centered))
    best_feature, best_threshold, best_gain = None, 0.0, 0.0
    left_counts = np.arange(1, n)
    right_counts = n - left_counts

    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        xs, ys = x[order, j], centered[order]
        csum = np.cumsum(ys)[:-1]
        csq = np.cumsum(ys * ys)[:-1]
        total = float(ys.sum())
        left_sse = csq - csum**2 / left_counts
        right_sse = (parent_sse - csq) - (total - csum) ** 2 / right_counts
        gain = parent_sse - (left_sse + right_sse)

        valid = (xs[:-1] < xs[1:]) & (left_counts >= min_leaf) & (right_counts >= min_leaf)
        if not valid.any():
            continue
        gain = np.where(valid, gain, -np.inf)
        pos = int(np.argmax(gain))
        if gain[pos] > best_gain:
            best_feature = j
            best_threshold = float((xs[pos] + xs[pos + 1]) / 2.0)
            best_gain = float(gain[pos])
    return best_feature, best_threshold, best_gain


def _grow(
    x: np.ndarray,
    y: np.ndarray,
    rules: tuple[Rule, ...],
    depth: int,
    max_depth: int,
    min_leaf: int,
) -> TreeNode:
    node = TreeNode(count=int(y.size), mean=float(y.mean()), variance=float(y.var()), rules=rules)
    indent = "    " * depth
    if depth >= max_depth:
        logger.debug("%sreached maximum depth %d", indent, max_depth)
        return node
    if y.size < 2 * min_leaf:
        logger.debug("%snode has %d records, too few to split", indent, y.size)
        return node

    feature, threshold, gain = _best_split(x, y, min_leaf)
    if feature is None or gain / y.size < MIN_VARIANCE_REDUCTION:
        logger.debug("%sno split reduces variance enough, stopping", indent)
        return node

    logger.debug("%ssplit on x%d <= %.4f (gain %.4g)", indent, feature + 1, threshold, gain)
    goes_left = x[:, feature] <= threshold
    node.feature, node.threshold, node.gain = feature, threshold, gain
    node.left = _grow(x[goes_left], y[goes_left], rules + (Rule(feature=feature, op="<=", threshold=threshold),),
                      depth + 1, max_depth, min_leaf)
    node.right = _grow(x[~goes_left], y[~goes_left], rules + (Rule(feature=feature, op=">", threshold=threshold),),
                       depth + 1, max_depth, min_leaf)
    return node


def _collect_leaves(root: TreeNode) -> list[TreeNode]:
    leaves, stack = [], [root]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            node.leaf_id = len(leaves)
            leaves.append(node)
        else:
            stack.extend([node.right, node.left])
    return leaves


def fit_tree(data: EvaluatedSet, max_depth: int = DEFAULT_MAX_DEPTH, min_leaf: int = DEFAULT_MIN_LEAF) -> TreeModel:
    """
    Grow a CART regression tree by greedy variance reduction.

    Raises:
        ModelFitError: fewer than 2 * min_leaf training points, or bad parameters
    """
    if max_depth < 1 or min_leaf < 1:
        raise ModelFitError("INVALID_TREE_PARAMS", "max_depth and min_leaf must be positive",
                            max_depth=max_depth, min_leaf=min_leaf)
    if data.n < 2 * min_leaf:
        raise ModelFitError(
            "INSUFFICIENT_DATA",
            f"tree fit needs at least {2 * min_leaf} points, got {data.n}",
            required=2 * min_leaf,
            actual=data.n,
        )
    root = _grow(np.asarray(data.points), np.asarray(data.values), (), 0, max_depth, min_leaf)
    return TreeModel(root=root, dim=data.dim, n=data.n, leaves=_collect_leaves(root))


def extract_partitions(model: TreeModel) -> list[Partition]:
    return [
        Partition(rules=leaf.rules, count=leaf.count, mean=leaf.mean, variance=leaf.variance)
        for leaf in model.leaves
    ]
