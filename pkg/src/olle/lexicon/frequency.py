"""Reference word-frequency lexicons: parsing, rank lookup, band membership."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from ..errors import DataError, ParseError

if TYPE_CHECKING:  # pragma: no cover
    from .curves import LoffRange

MAX_ENTRIES = 200_000


@dataclass(eq=False)
class FrequencyLexicon:
    """Ranked word list for one language.

    Entries are ordered by corpus frequency descending, ties broken by
    input file order; ranks are 0-based.
    """

    language: str
    entries: list[tuple[str, int]]
    _ranks: dict[str, int] = field(init=False, repr=False)
    _max_word_len: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._ranks = {word: i for i, (word, _) in enumerate(self.entries)}
        self._max_word_len = max((len(w) for w, _ in self.entries), default=0)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word in self._ranks

    def rank(self, word: str) -> int | None:
        """0-based rank of ``word``, or None when out of lexicon."""
        return self._ranks.get(word)

    def word_at(self, rank: int) -> str:
        return self.entries[rank][0]

    @property
    def max_word_len(self) -> int:
        return self._max_word_len


def parse_lexicon(path: str, language: str, max_entries: int = MAX_ENTRIES) -> FrequencyLexicon:
    """Parse a frequency dump: one ``word<space>count`` per line.

    Keeps the ``max_entries`` most frequent words; ties preserve file
    order. Duplicate words and malformed lines are rejected with the
    offending line number.
    """
    rows: list[tuple[str, int, int]] = []
    seen: set[str] = set()
    try:
        with open(path, "rb") as fh:
            for lineno, raw in enumerate(fh, start=1):
                try:
                    line = raw.decode("utf-8")
                except UnicodeDecodeError as exc:
                    raise ParseError(f"undecodable line: {exc}", path=path, line=lineno) from exc
                line = line.rstrip("\r\n")
                if not line:
                    raise ParseError("empty line", path=path, line=lineno)
                parts = line.split(" ")
                if len(parts) != 2:
                    raise ParseError(
                        f"expected 'word<space>frequency', got {line!r}", path=path, line=lineno
                    )
                word, count_text = parts
                try:
                    count = int(count_text)
                except ValueError as exc:
                    raise ParseError(
                        f"frequency is not an integer: {count_text!r}", path=path, line=lineno
                    ) from exc
                if count <= 0:
                    raise ParseError(f"frequency must be positive: {count}", path=path, line=lineno)
                if word in seen:
                    raise ParseError(f"duplicate word {word!r}", path=path, line=lineno)
                seen.add(word)
                rows.append((word, count, lineno))
    except OSError as exc:
        raise DataError(f"cannot read lexicon {path}: {exc}") from exc
    if not rows:
        raise DataError(f"empty lexicon file: {path}")
    rows.sort(key=lambda row: -row[1])  # stable: ties keep file order
    entries = [(word, count) for word, count, _ in rows[:max_entries]]
    return FrequencyLexicon(language=language, entries=entries)


def loff_membership(word: str, lexicon: FrequencyLexicon, loff_range: "LoffRange") -> bool:
    """True iff the word has a lexicon rank inside [k0, k1] (inclusive)."""
    rank = lexicon.rank(word)
    if rank is None:
        return False
    return loff_range.k0 <= rank <= loff_range.k1
