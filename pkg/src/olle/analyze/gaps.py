"""Gender gaps, regional disparity, and the multilingual dominance check.

Gaps compare the ordered-quantile-normalized female and male group
means per country; z_gap standardizes the raw gaps across eligible
countries. Confidence intervals come from a within-country user
bootstrap whose per-group seed derives from (master seed, country,
gender), so results are independent of iteration order and sharding.
The bootstrap needs user-level values; when intermediates were dropped
the records are flagged and carry no interval.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from ..calibrate import orq_apply, orq_fit
from ..errors import DataError
from .correlation import CorrelationReport, spearman_bootstrap

SIG_FEMALE = "female_favoring"
SIG_MALE = "male_favoring"
SIG_NONE = "none"
DEFAULT_REPLICATES = 1000
CROSS_COUNTRY_Z = 1.959963984540054  # two-sided 95% normal limit


@dataclass(frozen=True)
class GenderGapRecord:
    country: str
    language: str
    raw_gap: float
    z_gap: float
    ci_low: float | None
    ci_high: float | None
    significance: str
    bootstrap_unavailable: bool


@dataclass(frozen=True)
class RegionalDisparityRecord:
    country: str
    disparity: float
    n_regions: int


class UserValueSource:
    """In-memory user-level w_u values keyed by (country, language, gender).

    Exists only for the lifetime of a run so that bootstrap intervals
    can be computed without ever serializing per-user data.
    """

    def __init__(self) -> None:
        self._groups: dict[tuple[str, str, str], list[float]] = {}

    def add(self, country: str, language: str, gender: str, w_u: float) -> None:
        self._groups.setdefault((country, language, gender), []).append(float(w_u))

    def group_values(self, country: str, language: str, gender: str) -> np.ndarray | None:
        values = self._groups.get((country, language, gender))
        return None if values is None else np.asarray(values, dtype=float)


def _group_seed(seed: int, country: str, gender_idx: int) -> tuple[int, int, int]:
    return (seed, zlib.crc32(country.encode("utf-8")), gender_idx)


def gender_gap(
    aggregates,
    user_source: UserValueSource | None,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 0,
    significance_null: str = "user_bootstrap",
) -> list[GenderGapRecord]:
    """Standardized female-minus-male gaps for gap-eligible countries.

    ``aggregates`` are per-(country, language, gender) population
    aggregates; only countries with both gender groups unsuppressed
    enter. ``significance_null`` picks between the within-country user
    bootstrap (default) and the cross-country normal limits on z_gap.
    """
    if significance_null not in ("user_bootstrap", "cross_country"):
        raise DataError(f"unknown significance null: {significance_null!r}")
    by_key: dict[tuple[str, str], dict[str, float]] = {}
    for agg in aggregates:
        if agg.suppressed or agg.gender not in ("female", "male"):
            continue
        by_key.setdefault((agg.country, agg.language), {})[agg.gender] = agg.w_bar
    eligible = sorted(k for k, v in by_key.items() if set(v) == {"female", "male"})
    if not eligible:
        return []

    # One normalization per language over every eligible gender mean,
    # so gaps are comparable across countries within a language.
    by_language: dict[str, list[float]] = {}
    for country, language in eligible:
        by_language.setdefault(language, []).extend(by_key[(country, language)].values())
    transforms = {}
    for language, values in by_language.items():
        arr = np.asarray(values)
        transforms[language] = orq_fit(arr) if np.ptp(arr) > 0 else None

    raw_gaps = []
    for country, language in eligible:
        t = transforms[language]
        pair = by_key[(country, language)]
        if t is None:
            raw_gaps.append(0.0)
        else:
            raw_gaps.append(
                float(orq_apply(t, pair["female"]) - orq_apply(t, pair["male"]))
            )
    raw = np.asarray(raw_gaps)
    sd = raw.std(ddof=1) if raw.size > 1 else 0.0
    z = (raw - raw.mean()) / sd if sd > 0 else np.zeros_like(raw)

    records = []
    for i, (country, language) in enumerate(eligible):
        t = transforms[language]
        ci_low = ci_high = None
        unavailable = False
        significance = SIG_NONE
        if significance_null == "cross_country":
            if abs(z[i]) > CROSS_COUNTRY_Z:
                significance = SIG_FEMALE if z[i] > 0 else SIG_MALE
        else:
            wf = user_source.group_values(country, language, "female") if user_source else None
            wm = user_source.group_values(country, language, "male") if user_source else None
            if wf is None or wm is None or t is None or replicates < 1:
                unavailable = True
            else:
                rng_f = np.random.default_rng(_group_seed(seed, country, 0))
                rng_m = np.random.default_rng(_group_seed(seed, country, 1))
                means_f = wf[rng_f.integers(0, wf.size, (replicates, wf.size))].mean(axis=1)
                means_m = wm[rng_m.integers(0, wm.size, (replicates, wm.size))].mean(axis=1)
                gaps = orq_apply(t, means_f) - orq_apply(t, means_m)
                ci_low, ci_high = (float(v) for v in np.percentile(gaps, [2.5, 97.5]))
                if 0.0 < ci_low or 0.0 > ci_high:
                    significance = SIG_FEMALE if raw[i] > 0 else SIG_MALE
        records.append(
            GenderGapRecord(
                country=country,
                language=language,
                raw_gap=float(raw[i]),
                z_gap=float(z[i]),
                ci_low=ci_low,
                ci_high=ci_high,
                significance=significance,
                bootstrap_unavailable=unavailable,
            )
        )
    return records


def regional_disparity(regional_olles: dict[str, dict[str, float]]) -> list[RegionalDisparityRecord]:
    """Per-country sd (n-1) of regional OLLE values; needs >= 2 regions."""
    records = []
    for country in sorted(regional_olles):
        values = np.asarray(list(regional_olles[country].values()), dtype=float)
        if values.size < 2:
            continue
        records.append(
            RegionalDisparityRecord(
                country=country,
                disparity=float(values.std(ddof=1)),
                n_regions=int(values.size),
            )
        )
    return records


def weighted_mean(values: dict[str, float], weights: dict[str, float]) -> float:
    """Population-weighted mean over the countries present in both maps."""
    keys = [k for k in values if k in weights and weights[k] > 0]
    if not keys:
        raise DataError("no overlapping countries with positive weights")
    w = np.asarray([weights[k] for k in keys], dtype=float)
    v = np.asarray([values[k] for k in keys], dtype=float)
    return float((w * v).sum() / w.sum())


def dominance_bias_check(
    rows: list[dict],
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 0,
) -> dict:
    """Relate representative-language dominance to OLLE and disparity.

    ``rows`` carry country, share (representative-language user share),
    olle, and optionally disparity. Countries with share = 1 are not
    multilingual and are excluded. With fewer than 3 multilingual
    countries the scatter pairs are still emitted but correlations are
    omitted.
    """
    multi = [r for r in rows if r.get("share") is not None and r["share"] < 1.0]
    pairs_olle = [(r["country"], r["share"], r["olle"]) for r in multi if r.get("olle") is not None]
    pairs_disp = [
        (r["country"], r["share"], r["disparity"]) for r in multi if r.get("disparity") is not None
    ]

    def _report(pairs) -> CorrelationReport | None:
        if len(pairs) < 3:
            return None
        share = [p[1] for p in pairs]
        val = [p[2] for p in pairs]
        return spearman_bootstrap(share, val, replicates=replicates, seed=seed)

    return {
        "n_multilingual": len(multi),
        "share_vs_olle": pairs_olle,
        "share_vs_disparity": pairs_disp,
        "rho_share_olle": _report(pairs_olle),
        "rho_share_disparity": _report(pairs_disp),
    }
