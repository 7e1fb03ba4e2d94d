from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from batchscope.utils.validators import as_matrix


class Rule(BaseModel):
    """x[feature] <= threshold or x[feature] > threshold (feature is 0-based)."""

    model_config = ConfigDict(frozen=True)

    feature: int
    op: Literal["<=", ">"]
    threshold: float

    def holds(self, points: np.ndarray) -> np.ndarray:
        column = points[:, self.feature]
        return column <= self.threshold if self.op == "<=" else column > self.threshold

    def __str__(self) -> str:
        return f"x{self.feature + 1} {self.op} {self.threshold:.4f}"


class Partition(BaseModel):
    """A leaf region: the conjunction of rules on its root path plus leaf statistics."""

    model_config = ConfigDict(frozen=True)

    rules: tuple[Rule, ...]
    count: int
    mean: float
    variance: float

    def contains(self, points) -> np.ndarray:
        pts = as_matrix(points)
        mask = np.ones(pts.shape[0], dtype=bool)
        for rule in self.rules:
            mask &= rule.holds(pts)
        return mask

    def rule_string(self) -> str:
        if not self.rules:
            return "ALL"
        return " AND ".join(str(rule) for rule in self.rules)
