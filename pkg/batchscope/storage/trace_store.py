import json
import logging
from pathlib import Path
from typing import Iterable, Union

from pydantic import ValidationError

from batchscope.core.exceptions import BatchScopeError, TraceFormatError
from batchscope.models.trace import IterationTrace, RunHeader, TraceRecord

logger = logging.getLogger(__name__)

TRACE_PATTERN = "run_*.jsonl"

PathLike = Union[str, Path]


def encode_record(record: TraceRecord) -> str:
    """
    One JSON Lines entry. Floats are written by repr so they round-trip
    exactly; non-finite values are rejected.
    """
    payload = record.model_dump()
    if isinstance(record, IterationTrace) and record.metadata is None:
        payload.pop("metadata")
    try:
        return json.dumps(payload, allow_nan=False)
    except ValueError as exc:
        raise BatchScopeError("NON_FINITE_VALUE", f"record contains a non-finite number: {exc}",
                              run_id=record.run_id) from exc


def decode_record(line: str, line_number: int) -> TraceRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceFormatError("MALFORMED_JSON", f"line {line_number}: {exc.msg}", line=line_number) from exc
    if not isinstance(obj, dict):
        raise TraceFormatError("MALFORMED_JSON", f"line {line_number}: expected a JSON object", line=line_number)

    model = RunHeader if obj.get("kind") == "header" else IterationTrace
    try:
        return model.model_validate(obj)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or None
        if first["type"] == "missing":
            code, message = "MISSING_KEY", f"line {line_number}: missing key {key!r}"
        else:
            code, message = "SCHEMA_VIOLATION", f"line {line_number}: {key or 'record'}: {first['msg']}"
        raise TraceFormatError(code, message, line=line_number, key=key) from exc


class TraceStore:
    """Append-only JSON Lines trace file for one run; a single writer per file."""

    def __init__(self, path: PathLike):
        self.path = Path(path)
        self.records_written = 0

    def create(self) -> "TraceStore":
        """Create (or truncate) the file and its parent directory."""
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("", encoding="utf-8")
        except OSError as exc:
            raise BatchScopeError("TRACE_IO_ERROR", f"cannot create {self.path}: {exc}", path=str(self.path)) from exc
        logger.debug("trace file %s created", self.path)
        return self

    def append(self, record: TraceRecord) -> None:
        line = encode_record(record)
        try:
            with self.path.open("a", encoding="utf-8", newline="\n") as handle:
                handle.write(line + "\n")
        except OSError as exc:
            raise BatchScopeError("TRACE_IO_ERROR", f"cannot append to {self.path}: {exc}", path=str(self.path)) from exc
        self.records_written += 1


def write_trace(path: PathLike, records: Iterable[TraceRecord]) -> None:
    store = TraceStore(path).create()
    for record in records:
        store.append(record)


def read_trace(path: PathLike) -> list[TraceRecord]:
    """
    Parse a trace file in line order.

    Raises:
        TraceFormatError: on the first bad line, naming the line (1-based) and
            key; the records parsed before it are attached as ``records``
        TraceFormatError: MALFORMED_TRACE when the file is not UTF-8 text
        BatchScopeError: TRACE_IO_ERROR when the file cannot be read
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise BatchScopeError("TRACE_IO_ERROR", f"cannot read {path}: {exc}", path=str(path)) from exc
    except UnicodeDecodeError as exc:
        raise TraceFormatError("MALFORMED_TRACE", f"{path} is not UTF-8 text: {exc.reason}", path=str(path)) from exc

    records: list[TraceRecord] = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(decode_record(line, number))
        except TraceFormatError as exc:
            exc.detail["path"] = str(path)
            exc.detail["records_read"] = len(records)
            exc.records = records
            raise
    return records


def list_traces(directory: PathLike) -> list[Path]:
    return sorted(Path(directory).glob(TRACE_PATTERN))
