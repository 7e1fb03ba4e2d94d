from typing import Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

# metric arrays with one entry per batch point / per feature
BATCH_KEYS = ("mdpe", "chee_pre", "chee_post", "batch_mu", "batch_sigma_raw")
FEATURE_KEYS = ("pce_per_dim", "fiee_eta", "fiee_lambda", "fibb", "fis_signed", "fis_abs")
SCALAR_KEYS = ("pce_avg", "des", "dis_logdet", "dis_det", "abd", "hve", "cr")


class PssaEntry(BaseModel):
    rule: str = Field(..., description="Conjunction of split conditions, or ALL for the root")
    n_eval: int = Field(..., ge=0, description="Evaluated points in the region")
    mean_y: float
    n_batch: int = Field(..., ge=0, description="Batch points falling in the region")

    model_config = {"extra": "forbid"}


class TraceMetrics(BaseModel):
    """
    Every metric of one iteration. All keys are always present; a metric that
    could not be computed is null.
    """

    pce_avg: Optional[float]
    pce_per_dim: Optional[list[float]]
    mdpe: Optional[list[float]]
    chee_pre: Optional[list[float]]
    chee_post: Optional[list[float]]
    des: Optional[float]
    dis_logdet: Optional[float]
    dis_det: Optional[float]
    abd: Optional[float]
    hve: Optional[float]
    ref_point: Optional[list[float]] = Field(..., description="(r_mu, r_sigma) in minimize-both orientation")
    cr: Optional[float]
    pssa: Optional[list[PssaEntry]]
    fiee_eta: Optional[list[float]]
    fiee_lambda: Optional[list[float]]
    fibb: Optional[list[float]]
    fis_signed: Optional[list[float]]
    fis_abs: Optional[list[float]]
    batch_mu: Optional[list[float]]
    batch_sigma_raw: Optional[list[float]]

    model_config = {"extra": "forbid"}

    @classmethod
    def empty(cls) -> "TraceMetrics":
        return cls(**{name: None for name in cls.model_fields})

    @model_validator(mode="after")
    def _reference_pair(self):
        if self.ref_point is not None and len(self.ref_point) != 2:
            raise ValueError(f"ref_point must have 2 entries, got {len(self.ref_point)}")
        return self


class RunHeader(BaseModel):
    """
    Line 0 of a trace: run identity, configuration and the initial design.

    Tagged kind="header" and carries no iter, batch or batch_y; readers tell it
    apart from iteration lines by that tag (see split_records).
    """

    kind: Literal["header"] = "header"
    run_id: str
    seed: int = Field(..., ge=0)
    metadata: dict[str, Any]
    init_points: list[list[float]]
    init_values: list[float]

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _shapes(self):
        if len(self.init_points) != len(self.init_values):
            raise ValueError(
                f"init_points has {len(self.init_points)} rows but init_values has {len(self.init_values)}"
            )
        widths = {len(row) for row in self.init_points}
        if len(widths) > 1:
            raise ValueError("init_points rows differ in length")
        return self


class IterationTrace(BaseModel):
    run_id: str
    seed: int = Field(..., ge=0)
    iter: int = Field(..., ge=0)
    batch: list[list[float]]
    batch_y: list[float]
    best_y: float
    metrics: TraceMetrics
    metadata: Optional[dict[str, Any]] = None

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _lengths(self):
        k = len(self.batch)
        if k == 0:
            raise ValueError("batch must contain at least one point")
        d = len(self.batch[0])
        if any(len(row) != d for row in self.batch):
            raise ValueError("batch rows differ in length")
        if len(self.batch_y) != k:
            raise ValueError(f"batch_y has {len(self.batch_y)} entries for a batch of {k}")
        for name in BATCH_KEYS:
            _check_length(self.metrics, name, k, "k")
        for name in FEATURE_KEYS:
            _check_length(self.metrics, name, d, "d")
        return self

    @property
    def k(self) -> int:
        return len(self.batch)

    @property
    def dim(self) -> int:
        return len(self.batch[0])

    def batch_array(self) -> np.ndarray:
        return np.asarray(self.batch, dtype=np.float64)

    def values_array(self) -> np.ndarray:
        return np.asarray(self.batch_y, dtype=np.float64)


TraceRecord = Union[RunHeader, IterationTrace]


def _check_length(metrics: TraceMetrics, name: str, expected: int, label: str) -> None:
    value = getattr(metrics, name)
    if value is not None and len(value) != expected:
        raise ValueError(f"metrics.{name} has {len(value)} entries, expected {label}={expected}")


def split_records(records: list[TraceRecord]) -> tuple[Optional[RunHeader], list[IterationTrace]]:
    """Separate the header (if any) from the iteration records."""
    header = None
    iterations = []
    for record in records:
        if isinstance(record, RunHeader):
            header = record
        else:
            iterations.append(record)
    return header, iterations
