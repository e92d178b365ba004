"""Word-popularity curves and the detected LoFF rank band."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, TYPE_CHECKING

import numpy as np

from ..errors import DataError, NumericalError
from .frequency import FrequencyLexicon

if TYPE_CHECKING:  # pragma: no cover
    from ..corpus import UserSummary


@dataclass(eq=False)
class PopularityCurve:
    """Per-rank share of unique users who used the word at that rank.

    Ranks are 0-based and strictly increasing; popularity values live in
    [0, 1]. ``n_users`` records the population size the shares refer to
    (None for synthetic or re-loaded curves that did not carry it).
    """

    language: str
    ranks: np.ndarray
    popularity: np.ndarray
    n_users: int | None = None

    def __post_init__(self) -> None:
        self.ranks = np.asarray(self.ranks, dtype=float)
        self.popularity = np.asarray(self.popularity, dtype=float)
        if self.ranks.shape != self.popularity.shape or self.ranks.ndim != 1:
            raise DataError("curve ranks and popularity must be 1-d arrays of equal length")
        if len(self.ranks) >= 2 and not np.all(np.diff(self.ranks) > 0):
            raise DataError("curve ranks must be strictly increasing")
        if len(self.popularity) and (self.popularity.min() < 0 or self.popularity.max() > 1):
            raise DataError("popularity values must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.ranks)


@dataclass(frozen=True)
class LoffRange:
    """Detected elbow interval [k0, k1] in rank units (inclusive ends)."""

    language: str
    k0: int
    k1: int

    def __post_init__(self) -> None:
        if self.k0 >= self.k1:
            raise NumericalError(
                f"elbow inversion for {self.language}: k0={self.k0} >= k1={self.k1}"
            )
        if self.k0 <= 0:
            raise NumericalError(f"degenerate elbow start for {self.language}: k0={self.k0}")

    @property
    def k0_kw(self) -> float:
        """Start rank in thousands of words."""
        return self.k0 / 1000.0

    @property
    def k1_kw(self) -> float:
        """End rank in thousands of words."""
        return self.k1 / 1000.0

    def to_dict(self) -> dict:
        return {"language": self.language, "k0": self.k0, "k1": self.k1}

    @classmethod
    def from_dict(cls, obj: dict) -> "LoffRange":
        return cls(language=obj["language"], k0=int(obj["k0"]), k1=int(obj["k1"]))


def build_popularity_curve(
    summaries: Iterable["UserSummary"], lexicon: FrequencyLexicon
) -> PopularityCurve:
    """Count, per lexicon rank, the distinct users whose unigram set hits it.

    Every lexicon rank gets a point: observed ranks carry their user
    share, the rest are explicit zeros. Out-of-lexicon words are ignored.
    """
    counts = np.zeros(len(lexicon), dtype=np.int64)
    n_users = 0
    for summary in summaries:
        if summary.language != lexicon.language:
            raise DataError(
                f"summary language {summary.language!r} does not match "
                f"lexicon language {lexicon.language!r}"
            )
        n_users += 1
        seen = {lexicon.rank(w) for w in summary.unique_unigrams}
        seen.discard(None)
        for rank in seen:
            counts[rank] += 1
    if n_users == 0:
        raise DataError("cannot build a popularity curve from zero users")
    return PopularityCurve(
        language=lexicon.language,
        ranks=np.arange(len(lexicon), dtype=float),
        popularity=counts / n_users,
        n_users=n_users,
    )


def write_curve_csv(curve: PopularityCurve, path: str, header_lines: Iterable[str] = ()) -> None:
    """Write ``rank,popularity`` rows, preceded by ``#`` comment lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(f"# language={curve.language}")
        if curve.n_users is not None:
            fh.write(f" n_users={curve.n_users}")
        fh.write("\n")
        fh.write("rank,popularity\n")
        for rank, pop in zip(curve.ranks, curve.popularity):
            fh.write(f"{int(rank)},{pop:.10g}\n")


def read_curve_csv(path: str, language: str | None = None) -> PopularityCurve:
    """Read a curve written by :func:`write_curve_csv`."""
    ranks: list[float] = []
    pops: list[float] = []
    n_users = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if token.startswith("language=") and language is None:
                        language = token.split("=", 1)[1]
                    elif token.startswith("n_users="):
                        n_users = int(token.split("=", 1)[1])
                continue
            if line.startswith("rank,"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise DataError(f"malformed curve row at {path}:{lineno}: {line!r}")
            ranks.append(float(parts[0]))
            pops.append(float(parts[1]))
    if language is None:
        raise DataError(f"curve file {path} does not declare a language")
    if not ranks:
        raise DataError(f"curve file {path} has no data rows")
    return PopularityCurve(
        language=language,
        ranks=np.asarray(ranks),
        popularity=np.asarray(pops),
        n_users=n_users,
    )
