"""Post corpus ingestion: validate, filter, tokenize, summarize per user.

The unit of downstream analysis is the user, not the post: a user's
summary records how many accepted posts they wrote and the set of
distinct unigrams they used, each counted once regardless of frequency.
Ingestion streams JSONL or TSV, can be sharded by file, and merges
shard results by set union and count addition, so shard layout never
changes the output.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

from .errors import ConfigError, DataError
from .lexicon.frequency import FrequencyLexicon

STUDY_LANGUAGES = ("ar", "de", "en", "es", "fr", "it", "ms", "nl", "pt", "ru", "tr", "zh")
GENDERS = ("female", "male", "other", "unknown")

# Word runs: letters/digits/marks, underscore excluded. Apostrophes and
# hyphens are candidate joiners handled after the match.
_WORD_RE = re.compile(r"[^\W_]+(?:['’\-][^\W_]+)*")
_JOINER_RE = re.compile(r"['’\-]")
_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*://")
_CJK_RE = re.compile(r"[㐀-䶿一-鿿]+")

REJECT_EMPTY = "empty"
REJECT_TOO_SHORT = "too_short"
REJECT_TOO_LONG = "too_long"
REJECT_URL = "contains_url"
REJECT_REASONS = (REJECT_EMPTY, REJECT_TOO_SHORT, REJECT_TOO_LONG, REJECT_URL)
SKIP_DECODE = "decode_error"
SKIP_BAD_RECORD = "bad_record"
SKIP_BAD_LANGUAGE = "bad_language"


@dataclass(frozen=True)
class PostRecord:
    """One public post. ``region`` is optional; gender defaults to unknown."""

    user_id: str
    country: str
    region: str | None
    gender: str
    language: str
    text: str

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise DataError(f"unknown gender value: {self.gender!r}")


@dataclass(frozen=True)
class FilterConfig:
    """Post-level filter thresholds.

    ``min_age_gate`` documents that the input corpus is assumed to be
    adult-only; nothing here can verify age, the flag only records the
    assumption in reports.
    """

    min_chars: int = 2
    max_chars: int = 1000
    drop_urls: bool = True
    min_age_gate: bool = True

    def __post_init__(self):
        if not self.min_chars < self.max_chars:
            raise ConfigError("filter requires min_chars < max_chars")


@dataclass(frozen=True)
class FilterDecision:
    accepted: bool
    reason: str | None = None


@dataclass(eq=False)
class UserSummary:
    """Per-user aggregate: accepted post count and distinct-unigram set."""

    user_id: str
    country: str
    region: str | None
    gender: str
    language: str
    post_count: int
    unique_unigrams: set[str] = field(default_factory=set)


def _contains_url(text: str) -> bool:
    for token in text.split():
        if _SCHEME_RE.match(token) or token.lower().startswith("www."):
            return True
    return False


def filter_post(record: PostRecord, cfg: FilterConfig) -> FilterDecision:
    """Accept or reject one post, with the first failing rule as reason."""
    text = record.text
    if not text.strip():
        return FilterDecision(False, REJECT_EMPTY)
    n_chars = len(text)
    if n_chars < cfg.min_chars:
        return FilterDecision(False, REJECT_TOO_SHORT)
    if n_chars > cfg.max_chars:
        return FilterDecision(False, REJECT_TOO_LONG)
    if cfg.drop_urls and _contains_url(text):
        return FilterDecision(False, REJECT_URL)
    return FilterDecision(True)


def _segment_cjk(run: str, lexicon: FrequencyLexicon) -> list[str]:
    # Greedy longest-match against the lexicon; unmatched characters
    # become single-character tokens.
    out = []
    i = 0
    n = len(run)
    max_len = max(lexicon.max_word_len, 1)
    while i < n:
        for length in range(min(max_len, n - i), 1, -1):
            if run[i : i + length] in lexicon:
                out.append(run[i : i + length])
                i += length
                break
        else:
            out.append(run[i])
            i += 1
    return out


def tokenize(
    text: str, language: str, lexicon: FrequencyLexicon | None = None
) -> list[str]:
    """Lowercased unigram tokens of one post.

    Word runs follow Unicode word characters; punctuation-only content
    (emoji, bare symbols) yields nothing, while alphanumeric-bearing
    tokens like hashtags keep their word part. Internal apostrophes and
    hyphens stay joined only when the joined form is a lexicon entry.
    For zh the lexicon drives greedy longest-match segmentation, with a
    per-character fallback when no lexicon is supplied.
    """
    lowered = text.lower()
    tokens: list[str] = []
    for match in _WORD_RE.finditer(lowered):
        word = match.group(0)
        if language == "zh":
            pos = 0
            for cjk in _CJK_RE.finditer(word):
                if cjk.start() > pos:
                    tokens.extend(_split_joined(word[pos : cjk.start()], lexicon))
                run = cjk.group(0)
                if lexicon is None:
                    tokens.extend(run)
                else:
                    tokens.extend(_segment_cjk(run, lexicon))
                pos = cjk.end()
            if pos < len(word):
                tokens.extend(_split_joined(word[pos:], lexicon))
        else:
            tokens.extend(_split_joined(word, lexicon))
    return tokens


def _split_joined(word: str, lexicon: FrequencyLexicon | None) -> list[str]:
    word = word.strip("'’-")
    if not word:
        return []
    if not _JOINER_RE.search(word):
        return [word]
    if lexicon is not None and word in lexicon:
        return [word]
    return [part for part in _JOINER_RE.split(word) if part]


def summarize_user(
    posts: list[PostRecord], lexicon: FrequencyLexicon | None = None
) -> UserSummary:
    """Collapse one user's accepted posts into a UserSummary.

    All posts must share user_id and language; tokens pool into one set
    so each unigram counts once per user.
    """
    if not posts:
        raise DataError("cannot summarize an empty post list")
    first = posts[0]
    for post in posts[1:]:
        if post.user_id != first.user_id:
            raise DataError(
                f"mixed user_ids in one summary: {first.user_id!r} vs {post.user_id!r}"
            )
        if post.language != first.language:
            raise DataError(
                f"mixed languages for user {first.user_id!r}: "
                f"{first.language!r} vs {post.language!r}"
            )
    unigrams: set[str] = set()
    for post in posts:
        unigrams.update(tokenize(post.text, post.language, lexicon))
    return UserSummary(
        user_id=first.user_id,
        country=first.country,
        region=first.region,
        gender=first.gender,
        language=first.language,
        post_count=len(posts),
        unique_unigrams=unigrams,
    )


def merge_summaries(parts: list[UserSummary]) -> UserSummary:
    """Combine shard-level summaries of the same user: counts add, sets union."""
    if not parts:
        raise DataError("cannot merge an empty summary list")
    first = parts[0]
    merged: set[str] = set()
    count = 0
    for part in parts:
        if (part.user_id, part.language) != (first.user_id, first.language):
            raise DataError("merge requires identical (user_id, language) keys")
        merged |= part.unique_unigrams
        count += part.post_count
    return UserSummary(
        user_id=first.user_id,
        country=first.country,
        region=first.region,
        gender=first.gender,
        language=first.language,
        post_count=count,
        unique_unigrams=merged,
    )


# ---------------------------------------------------------------------------
# File ingestion
# ---------------------------------------------------------------------------

_JSONL_FIELDS = ("user_id", "country", "gender", "lang", "text")
_TSV_HEADER = ["user_id", "country", "region", "gender", "lang", "text"]


class IngestReport:
    """Mutable tally of ingestion outcomes, serialized into report JSON."""

    def __init__(self) -> None:
        self.accepted = 0
        self.rejected = {reason: 0 for reason in REJECT_REASONS}
        self.skipped = {SKIP_DECODE: 0, SKIP_BAD_RECORD: 0, SKIP_BAD_LANGUAGE: 0}
        self._lengths: list[int] = []

    def add_accept(self, n_chars: int) -> None:
        self.accepted += 1
        self._lengths.append(n_chars)

    def merge(self, other: "IngestReport") -> None:
        self.accepted += other.accepted
        for key, val in other.rejected.items():
            self.rejected[key] += val
        for key, val in other.skipped.items():
            self.skipped[key] += val
        self._lengths.extend(other._lengths)

    def to_dict(self, n_users: int | None = None) -> dict:
        lengths = sorted(self._lengths)
        if lengths:
            mid = lengths[len(lengths) // 2]
            if len(lengths) % 2 == 0:
                mid = (mid + lengths[len(lengths) // 2 - 1]) / 2.0
            p95 = lengths[min(len(lengths) - 1, math.ceil(0.95 * len(lengths)) - 1)]
            stats = {
                "median": float(mid),
                "mean": sum(lengths) / len(lengths),
                "p95": float(p95),
            }
        else:
            stats = {"median": None, "mean": None, "p95": None}
        out = {
            "accepted": self.accepted,
            "rejected": dict(self.rejected),
            "skipped": dict(self.skipped),
            "char_length": stats,
        }
        if n_users is not None:
            out["n_users"] = n_users
        return out


def _record_from_json(line: str, languages: tuple[str, ...]) -> PostRecord | str:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError:
        return SKIP_BAD_RECORD
    if not isinstance(obj, dict):
        return SKIP_BAD_RECORD
    for key in _JSONL_FIELDS:
        if key not in obj or not isinstance(obj[key], str):
            return SKIP_BAD_RECORD
    region = obj.get("region")
    if region is not None and not isinstance(region, str):
        return SKIP_BAD_RECORD
    gender = obj["gender"].strip().lower() or "unknown"
    if gender not in GENDERS:
        return SKIP_BAD_RECORD
    if obj["lang"] not in languages:
        return SKIP_BAD_LANGUAGE
    return PostRecord(
        user_id=obj["user_id"],
        country=obj["country"],
        region=region,
        gender=gender,
        language=obj["lang"],
        text=obj["text"],
    )


def _record_from_tsv(line: str, languages: tuple[str, ...]) -> PostRecord | str:
    parts = line.split("\t")
    if len(parts) != len(_TSV_HEADER):
        return SKIP_BAD_RECORD
    user_id, country, region, gender, lang, text = parts
    gender = gender.strip().lower() or "unknown"
    if gender not in GENDERS:
        return SKIP_BAD_RECORD
    if lang not in languages:
        return SKIP_BAD_LANGUAGE
    return PostRecord(
        user_id=user_id,
        country=country,
        region=region or None,
        gender=gender,
        language=lang,
        text=text,
    )


def iter_posts(
    path: str,
    cfg: FilterConfig,
    report: IngestReport,
    languages: tuple[str, ...] = STUDY_LANGUAGES,
):
    """Yield accepted PostRecords from a JSONL or TSV file, tallying the rest."""
    is_tsv = str(path).endswith((".tsv", ".tab"))
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise DataError(f"cannot open post file: {exc}") from exc
    with fh:
        first = True
        for raw in fh:
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError:
                report.skipped[SKIP_DECODE] += 1
                continue
            line = line.rstrip("\r\n")
            if is_tsv and first:
                first = False
                if line.split("\t") == _TSV_HEADER:
                    continue
            first = False
            if not line.strip():
                continue
            record = _record_from_tsv(line, languages) if is_tsv else _record_from_json(line, languages)
            if isinstance(record, str):
                report.skipped[record] += 1
                continue
            decision = filter_post(record, cfg)
            if decision.accepted:
                report.add_accept(len(record.text))
                yield record
            else:
                report.rejected[decision.reason] += 1


def ingest_posts(
    paths: list[str] | str,
    cfg: FilterConfig | None = None,
    lexicons: dict[str, FrequencyLexicon] | None = None,
    languages: tuple[str, ...] = STUDY_LANGUAGES,
) -> tuple[dict[tuple[str, str], UserSummary], IngestReport]:
    """Ingest one or more post files into per-(user, language) summaries.

    Files are processed independently and merged, so any sharding of the
    same records produces identical summaries.
    """
    if isinstance(paths, str):
        paths = [paths]
    cfg = cfg or FilterConfig()
    lexicons = lexicons or {}
    report = IngestReport()
    users: dict[tuple[str, str], UserSummary] = {}
    for path in paths:
        for record in iter_posts(path, cfg, report, languages):
            key = (record.user_id, record.language)
            summary = users.get(key)
            if summary is None:
                users[key] = summarize_user([record], lexicons.get(record.language))
            else:
                summary.post_count += 1
                summary.unique_unigrams.update(
                    tokenize(record.text, record.language, lexicons.get(record.language))
                )
    return users, report
