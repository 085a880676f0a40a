from __future__ import annotations

import traceback
from typing import Optional

INVALID_MATRIX = "INVALID_MATRIX"
SINGULAR_MATRIX = "SINGULAR_MATRIX"
ZERO_VECTOR = "ZERO_VECTOR"
EMPTY_INPUT = "EMPTY_INPUT"
DIM_MISMATCH = "DIM_MISMATCH"
NOT_NORMALIZED = "NOT_NORMALIZED"
MISSING_WARM_START = "MISSING_WARM_START"
DEGENERATE_REFERENCE = "DEGENERATE_REFERENCE"
INCONSISTENT_STATE = "INCONSISTENT_STATE"
TOO_MANY_ARMS = "TOO_MANY_ARMS"
POOL_EXHAUSTED = "POOL_EXHAUSTED"
UNSUPPORTED_OBJECTIVE = "UNSUPPORTED_OBJECTIVE"
INVALID_CONFIDENCE = "INVALID_CONFIDENCE"
WARM_START_TOO_SMALL = "WARM_START_TOO_SMALL"
OUT_OF_DOMAIN = "OUT_OF_DOMAIN"
BAD_MAGIC = "BAD_MAGIC"
NAN_FOUND = "NAN_FOUND"
CONFIG_ERROR = "CONFIG_ERROR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class MixselError(Exception):
    def __init__(self, code: str, detail: str, *, debug_detail: Optional[str] = None):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail
        self.debug_detail = debug_detail


def _exc_detail(exc: BaseException) -> str:
    detail = str(exc)
    return detail if detail.strip() else exc.__class__.__name__


def _debug_traceback(exc: BaseException) -> str:
    return "".join(traceback.format_exception(type(exc), exc, exc.__traceback__))


def map_exception(exc: BaseException, *, include_debug: bool = False, phase: str = "config") -> MixselError:
    """
    Map a Python exception to a MixselError with a deterministic code.

    While a configuration is parsed and validated (``phase="config"``),
    parsing and lookup failures are configuration problems. Once the run has
    started only a missing file keeps that meaning; any other exception is
    reported as an inconsistent state.
    """
    if isinstance(exc, MixselError):
        if include_debug and exc.debug_detail is None:
            return MixselError(exc.code, exc.detail, debug_detail=_debug_traceback(exc))
        return exc

    detail = _exc_detail(exc)
    debug_detail = _debug_traceback(exc) if include_debug else None

    if isinstance(exc, FileNotFoundError):
        return MixselError(CONFIG_ERROR, detail, debug_detail=debug_detail)
    if phase == "config" and isinstance(exc, (ValueError, TypeError, KeyError)):
        return MixselError(CONFIG_ERROR, detail, debug_detail=debug_detail)
    return MixselError(INCONSISTENT_STATE, detail, debug_detail=debug_detail)


def exit_code_for(err: MixselError, *, phase: str = "run") -> int:
    """Configuration-phase failures exit with 2, everything else with 3."""
    if err.code == CONFIG_ERROR or phase == "config":
        return EXIT_CONFIG
    return EXIT_RUNTIME


__all__ = [
    "BAD_MAGIC",
    "CONFIG_ERROR",
    "DEGENERATE_REFERENCE",
    "DIM_MISMATCH",
    "EMPTY_INPUT",
    "EXIT_CONFIG",
    "EXIT_OK",
    "EXIT_RUNTIME",
    "INCONSISTENT_STATE",
    "INVALID_CONFIDENCE",
    "INVALID_MATRIX",
    "MISSING_WARM_START",
    "MixselError",
    "NAN_FOUND",
    "NOT_NORMALIZED",
    "OUT_OF_DOMAIN",
    "POOL_EXHAUSTED",
    "SINGULAR_MATRIX",
    "TOO_MANY_ARMS",
    "UNSUPPORTED_OBJECTIVE",
    "WARM_START_TOO_SMALL",
    "ZERO_VECTOR",
    "exit_code_for",
    "map_exception",
]
