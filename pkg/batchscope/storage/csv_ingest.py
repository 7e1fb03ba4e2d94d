import csv
import logging
import math
from itertools import groupby
from pathlib import Path
from typing import Optional, Union

import numpy as np

from batchscope.core.exceptions import BatchScopeError, InputDataError
from batchscope.models.domain import Bounds
from batchscope.models.external_log import ExternalLog, LogIteration

logger = logging.getLogger(__name__)

ITER_COLUMN = "iter"


def expected_header(dim: int, with_iter: bool) -> list[str]:
    head = [ITER_COLUMN] if with_iter else []
    return head + [f"x{j}" for j in range(1, dim + 1)] + ["y"]


def _parse_header(header: list[str], iteration_column: Optional[bool]) -> tuple[bool, int]:
    names = [name.strip() for name in header]
    with_iter = bool(names) and names[0] == ITER_COLUMN
    if iteration_column is not None and iteration_column != with_iter:
        wanted = "with" if iteration_column else "without"
        raise InputDataError("HEADER_MISMATCH", f"expected a header {wanted} an {ITER_COLUMN!r} column, got {names}",
                             header=names)
    dim = len(names) - 1 - int(with_iter)
    if dim < 1 or names != expected_header(dim, with_iter):
        raise InputDataError("HEADER_MISMATCH", f"expected x1..xd,y (optionally led by iter), got {names}",
                             header=names)
    return with_iter, dim


def _cell(raw: str, row: int, column: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise InputDataError("NON_NUMERIC_CELL", f"row {row}, column {column!r}: {raw!r} is not a number",
                             row=row, column=column) from None
    if not math.isfinite(value):
        raise InputDataError("NON_FINITE_CELL", f"row {row}, column {column!r}: {raw!r} is not finite",
                             row=row, column=column)
    return value


def _label(raw: str, row: int) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise InputDataError("NON_NUMERIC_CELL", f"row {row}, column {ITER_COLUMN!r}: {raw!r} is not an integer",
                             row=row, column=ITER_COLUMN) from None


def ingest_csv(
    path: Union[str, Path],
    iteration_column: Optional[bool] = None,
    bounds: Optional[Bounds] = None,
) -> ExternalLog:
    """
    Read an external optimizer log.

    With an ``iter`` column rows are grouped by its value, groups ordered by
    ascending label and rows kept in file order within a group; without it
    every row is its own iteration. ``iteration_column=None`` accepts either
    header. Row numbers in errors are file lines (the header is line 1).

    Raises:
        InputDataError: HEADER_MISMATCH, NON_NUMERIC_CELL, NON_FINITE_CELL,
            ROW_LENGTH_MISMATCH or EMPTY_LOG
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise BatchScopeError("CSV_IO_ERROR", f"cannot read {path}: {exc}", path=str(path)) from exc
    except (csv.Error, UnicodeDecodeError) as exc:
        raise InputDataError("MALFORMED_CSV", f"{path}: {exc}", path=str(path)) from exc

    if not rows:
        raise InputDataError("HEADER_MISMATCH", f"{path} is empty; expected x1..xd,y", path=str(path))
    header = rows[0]
    with_iter, dim = _parse_header(header, iteration_column)
    names = expected_header(dim, with_iter)

    parsed: list[tuple[int, list[float], float]] = []
    for line, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(names):
            raise InputDataError("ROW_LENGTH_MISMATCH", f"row {line} has {len(row)} cells, expected {len(names)}",
                                 row=line, expected=len(names), actual=len(row))
        label = _label(row[0], line) if with_iter else len(parsed)
        cells = row[1:] if with_iter else row
        values = [_cell(raw, line, name) for raw, name in zip(cells, names[int(with_iter):])]
        parsed.append((label, values[:-1], values[-1]))

    if not parsed:
        raise InputDataError("EMPTY_LOG", f"{path} has a header but no rows", path=str(path))

    ordered = sorted(parsed, key=lambda entry: entry[0])
    iterations = []
    for label, group in groupby(ordered, key=lambda entry: entry[0]):
        entries = list(group)
        iterations.append(LogIteration(
            label=label,
            points=np.array([entry[1] for entry in entries]),
            values=np.array([entry[2] for entry in entries]),
        ))
    logger.info("ingested %s: %d rows in %d iterations, d=%d", path.name, len(parsed), len(iterations), dim)
    return ExternalLog(iterations=tuple(iterations), bounds=bounds)


def write_log_csv(path: Union[str, Path], iterations: list[tuple[int, np.ndarray, np.ndarray]]) -> None:
    """Write (label, points, values) groups as iter,x1..xd,y rows with round-trip float text."""
    path = Path(path)
    dim = int(np.asarray(iterations[0][1]).shape[1])
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(expected_header(dim, True))
            for label, points, values in iterations:
                for point, value in zip(np.asarray(points), np.asarray(values)):
                    writer.writerow([label] + [repr(float(v)) for v in point] + [repr(float(value))])
    except OSError as exc:
        raise BatchScopeError("CSV_IO_ERROR", f"cannot write {path}: {exc}", path=str(path)) from exc
