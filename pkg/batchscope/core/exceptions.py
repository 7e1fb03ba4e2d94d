import json
import logging
import sys
from typing import Any, Optional

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


class BatchScopeError(Exception):
    """
    Base error carrying a machine-readable code and a context dict.

    Codes are upper-snake strings such as "DIMENSION_MISMATCH" or
    "EMPTY_EVALUATED_SET"; detail holds whatever the caller needs to locate
    the problem (expected vs actual dimension, offending row, line number).
    """

    exit_code = EXIT_RUNTIME_ERROR

    def __init__(self, code: str, message: Optional[str] = None, **detail: Any):
        self.code = code
        self.detail = detail
        self.message = message or code
        super().__init__(self.message)

    def to_payload(self) -> dict:
        return {"error": self.code, "message": self.message, "detail": _jsonable(self.detail)}


class ConfigError(BatchScopeError):
    exit_code = EXIT_CONFIG_ERROR


class InputDataError(BatchScopeError):
    """Malformed user-supplied data (CSV logs, trace files)."""

    exit_code = EXIT_CONFIG_ERROR


class TraceFormatError(InputDataError):
    """A trace line failed to parse; records read before it are kept."""

    def __init__(self, code: str, message: Optional[str] = None, *, records: Optional[list] = None, **detail: Any):
        super().__init__(code, message, **detail)
        self.records = records or []


class MetricError(BatchScopeError):
    pass


class ModelFitError(BatchScopeError):
    pass


class RunAbortedError(BatchScopeError):
    """A run stopped mid-loop; the trace written so far stays on disk."""

    pass


def dimension_mismatch(expected: int, actual: int, what: str = "points") -> BatchScopeError:
    return BatchScopeError(
        "DIMENSION_MISMATCH",
        f"{what} have dimension {actual}, expected {expected}",
        expected=expected,
        actual=actual,
    )


def _jsonable(value: Any) -> Any:
    try:
        json.dumps(value)
        return value
    except TypeError:
        if isinstance(value, dict):
            return {str(k): _jsonable(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [_jsonable(v) for v in value]
        return str(value)


def handle_error(exc: BaseException) -> int:
    """
    Map an exception to a process exit code.

    - BatchScopeError subclasses: {"error": code, ...} on stderr, their exit code
    - anything else: logged with traceback, runtime exit code
    """
    if isinstance(exc, BatchScopeError):
        sys.stderr.write(json.dumps(exc.to_payload()) + "\n")
        return exc.exit_code

    logger.exception("unexpected error: %s", exc)
    sys.stderr.write(json.dumps({"error": "UNEXPECTED_ERROR", "message": str(exc)}) + "\n")
    return EXIT_RUNTIME_ERROR
