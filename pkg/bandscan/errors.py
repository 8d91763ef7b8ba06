"""
Error hierarchy for bandscan.

Every failure raised by the library is a ``BandscanError``. Each family carries
the process exit code used by the CLI and the HTTP status used by the API, so
both surfaces translate errors the same way.
"""
from typing import Any, Dict, Optional


class BandscanError(Exception):
    exit_code = 1
    status_code = 500
    family = "error"

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context: Dict[str, Any] = context

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"error": self.family, "detail": self.detail}
        payload.update(self.context)
        return payload


# ============= PARSE ERRORS =============

class ParseError(BandscanError):
    exit_code = 2
    status_code = 422
    family = "parse"


class RaggedRowError(ParseError):
    def __init__(self, row: int, expected: int, found: int):
        super().__init__(
            f"row {row} has {found} cells, expected {expected}",
            row=row, expected=expected, found=found,
        )


class NonNumericCellError(ParseError):
    def __init__(self, row: int, column: int, value: str):
        super().__init__(
            f"cell at row {row}, column {column} is not a finite number: {value!r}",
            row=row, column=column, value=value,
        )


class TooFewRowsError(ParseError):
    def __init__(self, found: int):
        super().__init__(f"need at least 2 usable rows, found {found}", found=found)


class MalformedReportError(ParseError):
    pass


# ============= CONFIG ERRORS =============

class ConfigError(BandscanError):
    exit_code = 3
    status_code = 422
    family = "config"


class InvalidSeriesError(ConfigError):
    pass


class InvalidPlanError(ConfigError):
    pass


class GridTooSmallError(ConfigError):
    pass


class TooManyTapersError(ConfigError):
    pass


class IndexOutOfRangeError(ConfigError):
    pass


class DegenerateDemeanError(ConfigError):
    pass


class InvalidWindowError(ConfigError):
    pass


class TestGridError(ConfigError):
    __test__ = False  # keep pytest from collecting this class


class InvalidPartitionError(ConfigError):
    pass


class UnderdeterminedFitError(ConfigError):
    pass


# ============= NUMERIC / STORAGE ERRORS =============

class NumericError(BandscanError):
    exit_code = 4
    status_code = 500
    family = "numeric"


class FactorizationError(NumericError):
    pass


class StorageError(BandscanError):
    exit_code = 5
    status_code = 500
    family = "io"


class StageError(BandscanError):
    """A library error re-raised with the pipeline stage it came from."""

    def __init__(self, stage: str, cause: BandscanError):
        super().__init__(f"[{stage}] {cause.detail}", stage=stage, **cause.context)
        self.stage = stage
        self.cause = cause
        self.exit_code = cause.exit_code
        self.status_code = cause.status_code
        self.family = cause.family


def exit_code_for(exc: Optional[BaseException]) -> int:
    if exc is None:
        return 0
    if isinstance(exc, BandscanError):
        return exc.exit_code
    if isinstance(exc, OSError):
        return StorageError.exit_code
    return 1
