"""Online language literacy estimation from public post corpora."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DataError,
    NumericalError,
    OlleError,
    ParseError,
    RankDeficiencyError,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NumericalError",
    "OlleError",
    "ParseError",
    "RankDeficiencyError",
    "__version__",
]
