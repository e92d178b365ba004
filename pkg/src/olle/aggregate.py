"""Per-user LoFF statistics and privacy-thresholded group aggregates.

w_u is the number of distinct LoFF-range unigrams a user wrote divided
by their accepted post count, kept as an exact rational. Group moments
accumulate as exact Fractions (count, sum, sum of squares), so shard
merges are exactly associative and commutative; floats appear only in
the finalized aggregate.

Suppression is structural: an aggregate for a group under the size
floor is constructed with every statistic (including the user count)
set to None, so no serializer can leak it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigError, DataError
from .lexicon.curves import LoffRange
from .lexicon.frequency import FrequencyLexicon, loff_membership

GROUP_FIELDS = ("country", "language", "gender", "region")


@dataclass(frozen=True)
class UserLoffStat:
    """One user's relative LoFF count with their grouping keys."""

    user_id: str
    country: str
    region: str | None
    gender: str
    language: str
    post_count: int
    w_u: Fraction

    def __post_init__(self):
        if self.post_count < 1:
            raise DataError(f"user {self.user_id!r} has no accepted posts")
        if self.w_u < 0:
            raise DataError("w_u must be non-negative")


@dataclass(frozen=True)
class AggregationConfig:
    min_group_size: int = 1000
    heavy_poster_quantile: float = 0.75
    drop_intermediates: bool = True

    def __post_init__(self):
        if not 0.0 < self.heavy_poster_quantile < 1.0:
            raise ConfigError("heavy_poster_quantile must be in (0, 1)")
        if self.min_group_size < 1:
            raise ConfigError("min_group_size must be >= 1")


@dataclass(frozen=True)
class PopulationAggregate:
    """Finalized statistics for one group, or a bare suppression marker.

    For suppressed groups every statistic is None; only the key fields
    and the flag survive.
    """

    country: str
    language: str
    gender: str | None = None
    region: str | None = None
    n_users: int | None = None
    w_bar: float | None = None
    w_sd: float | None = None
    suppressed: bool = False


class ExactMoments:
    """Exact (n, sum, sum of squares) accumulator over rational w_u."""

    __slots__ = ("n", "s1", "s2")

    def __init__(self) -> None:
        self.n = 0
        self.s1 = Fraction(0)
        self.s2 = Fraction(0)

    def add(self, w: Fraction) -> None:
        self.n += 1
        self.s1 += w
        self.s2 += w * w

    def merge(self, other: "ExactMoments") -> "ExactMoments":
        out = ExactMoments()
        out.n = self.n + other.n
        out.s1 = self.s1 + other.s1
        out.s2 = self.s2 + other.s2
        return out

    def mean(self) -> float:
        if self.n == 0:
            raise DataError("empty group has no mean")
        return float(self.s1 / self.n)

    def sd(self) -> float | None:
        # n-1 denominator; undefined for singleton groups.
        if self.n < 2:
            return None
        var = (self.s2 - self.s1 * self.s1 / self.n) / (self.n - 1)
        return float(var) ** 0.5


def user_loff_stat(summary, lexicon: FrequencyLexicon, loff: LoffRange) -> UserLoffStat:
    """Relative LoFF count for one user: distinct LoFF words / posts."""
    if summary.post_count < 1:
        raise DataError(f"user {summary.user_id!r} has post_count 0")
    numerator = sum(
        1 for word in summary.unique_unigrams if loff_membership(word, lexicon, loff)
    )
    return UserLoffStat(
        user_id=summary.user_id,
        country=summary.country,
        region=summary.region,
        gender=summary.gender,
        language=summary.language,
        post_count=summary.post_count,
        w_u=Fraction(numerator, summary.post_count),
    )


def nearest_rank_quantile(values: list[int], q: float) -> int:
    """Nearest-rank quantile: the ceil(q*n)-th smallest value.

    The epsilon guards against float products like 0.07 * 100 landing
    just above the integer they should equal.
    """
    if not values:
        raise DataError("quantile of an empty collection")
    ordered = sorted(values)
    rank = min(len(ordered), max(1, math.ceil(q * len(ordered) - 1e-9)))
    return ordered[rank - 1]


def exclude_heavy_posters(
    stats: list[UserLoffStat], q: float = 0.75
) -> list[UserLoffStat]:
    """Drop users strictly above the per-(country, language) post-count quantile.

    Idempotent: the survivors' quantile threshold admits every survivor.
    """
    if not stats:
        raise DataError("exclude_heavy_posters requires a nonempty collection")
    counts: dict[tuple[str, str], list[int]] = {}
    for stat in stats:
        counts.setdefault((stat.country, stat.language), []).append(stat.post_count)
    cutoffs = {key: nearest_rank_quantile(vals, q) for key, vals in counts.items()}
    return [s for s in stats if s.post_count <= cutoffs[(s.country, s.language)]]


def _group_key(stat: UserLoffStat, group_by: tuple[str, ...]) -> tuple:
    return tuple(getattr(stat, field) for field in group_by)


def accumulate_groups(
    stats: list[UserLoffStat], group_by: tuple[str, ...]
) -> dict[tuple, ExactMoments]:
    """Map each group key to its exact moment accumulator."""
    for field in group_by:
        if field not in GROUP_FIELDS:
            raise ConfigError(f"unknown group field: {field!r}")
    groups: dict[tuple, ExactMoments] = {}
    for stat in stats:
        key = _group_key(stat, group_by)
        acc = groups.get(key)
        if acc is None:
            acc = groups[key] = ExactMoments()
        acc.add(stat.w_u)
    return groups


def merge_group_maps(
    maps: list[dict[tuple, ExactMoments]],
) -> dict[tuple, ExactMoments]:
    """Key-wise exact merge of shard-level accumulator maps."""
    out: dict[tuple, ExactMoments] = {}
    for part in maps:
        for key, acc in part.items():
            out[key] = out[key].merge(acc) if key in out else acc.merge(ExactMoments())
    return out


def finalize_groups(
    groups: dict[tuple, ExactMoments],
    group_by: tuple[str, ...],
    cfg: AggregationConfig,
) -> list[PopulationAggregate]:
    """Turn accumulators into aggregates, suppressing small groups outright."""
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(v) for v in k)):
        acc = groups[key]
        fields = dict(zip(group_by, key))
        if acc.n < cfg.min_group_size:
            out.append(PopulationAggregate(suppressed=True, **fields))
        else:
            out.append(
                PopulationAggregate(
                    n_users=acc.n, w_bar=acc.mean(), w_sd=acc.sd(), **fields
                )
            )
    return out


def aggregate_population(
    stats: list[UserLoffStat],
    group_by: tuple[str, ...] = ("country", "language"),
    cfg: AggregationConfig | None = None,
) -> list[PopulationAggregate]:
    """Group w_u by key and emit thresholded aggregates.

    Callers must have excluded heavy posters already; the size floor is
    evaluated on the post-exclusion user count.
    """
    cfg = cfg or AggregationConfig()
    return finalize_groups(accumulate_groups(stats, group_by), group_by, cfg)


def disaggregate_gender(
    stats: list[UserLoffStat], cfg: AggregationConfig | None = None
) -> list[PopulationAggregate]:
    """Per-(country, language, gender) aggregates over binary-labeled users.

    Users labeled other/unknown do not enter this analysis.
    """
    binary = [s for s in stats if s.gender in ("female", "male")]
    return aggregate_population(binary, ("country", "language", "gender"), cfg)


def disaggregate_region(
    stats: list[UserLoffStat], cfg: AggregationConfig | None = None
) -> list[PopulationAggregate]:
    """Per-(country, language, region) aggregates over region-labeled users."""
    labeled = [s for s in stats if s.region is not None]
    return aggregate_population(labeled, ("country", "language", "region"), cfg)


def gap_eligible(aggs: list[PopulationAggregate]) -> set[tuple[str, str]]:
    """(country, language) pairs where female and male are both unsuppressed."""
    seen: dict[tuple[str, str], set[str]] = {}
    for agg in aggs:
        if not agg.suppressed and agg.gender in ("female", "male"):
            seen.setdefault((agg.country, agg.language), set()).add(agg.gender)
    return {key for key, genders in seen.items() if genders == {"female", "male"}}


def disparity_eligible(aggs: list[PopulationAggregate]) -> set[tuple[str, str]]:
    """(country, language) pairs with at least two unsuppressed regions."""
    seen: dict[tuple[str, str], int] = {}
    for agg in aggs:
        if not agg.suppressed and agg.region is not None:
            key = (agg.country, agg.language)
            seen[key] = seen.get(key, 0) + 1
    return {key for key, count in seen.items() if count >= 2}


def write_aggregates_csv(
    aggs: list[PopulationAggregate],
    path: str,
    group_by: tuple[str, ...],
    header_lines: tuple[str, ...] = (),
) -> None:
    """CSV of aggregates; suppressed rows carry key fields and flag only."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(group_by) + ",n_users,w_bar,w_sd,suppressed\n")
        for agg in aggs:
            key = [str(getattr(agg, field)) for field in group_by]
            if agg.suppressed:
                fh.write(",".join(key) + ",,,true\n")
            else:
                sd = "" if agg.w_sd is None else f"{agg.w_sd:.12g}"
                fh.write(
                    ",".join(key) + f",{agg.n_users},{agg.w_bar:.12g},{sd},false\n"
                )
