"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: DataError -> 1, ConfigError -> 2,
NumericalError -> 3. Anything else escapes as a crash.
"""
from __future__ import annotations


class OlleError(Exception):
    """Base class for all pipeline errors."""


class DataError(OlleError):
    """Bad or insufficient input data (empty corpus, missing column, ...)."""


class ParseError(DataError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + where)


class ConfigError(OlleError):
    """Invalid configuration or analysis spec."""


class NumericalError(OlleError):
    """Numerical failure: no elbow, no knee, inverted range, degenerate fit."""


class RankDeficiencyError(NumericalError):
    """Design matrix is rank deficient; names the aliased columns."""

    def __init__(self, columns: list[str]):
        self.columns = list(columns)
        super().__init__(
            "design matrix is rank deficient; aliased columns: " + ", ".join(self.columns)
        )
