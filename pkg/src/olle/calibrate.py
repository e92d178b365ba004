"""Normalization and calibration: ORQ transform, language fixed-effect
regression against official benchmarks, leave-one-out OLLE in [0, 1].

The ordered-quantile transform maps a value to the normal quantile of
its (average, fractionally interpolated) rank. Beyond the training
domain it follows a line with the least-squares slope of the training
(value, quantile) pairs, anchored at the boundary quantile so the
transform stays monotone and continuous where the domain ends.

Calibration regresses the normalized estimate on the normalized
benchmark with language dummies (reference: alphabetically first
language). OLLE values are leave-one-out predictions min-max rescaled
to the unit interval.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import ndtri

from .errors import ConfigError, DataError, NumericalError
from .ols import OlsFit, fit_ols

MIN_INTERNET_PENETRATION = 0.25


# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class BenchmarkTable:
    """Official per-country references: literacy rate, optional extras."""

    rates: dict[str, float]
    schooling: dict[str, float] = field(default_factory=dict)
    internet: dict[str, float] = field(default_factory=dict)
    population: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for country, rate in self.rates.items():
            if not 0.0 <= rate <= 1.0:
                raise DataError(f"literacy rate for {country} outside [0, 1]: {rate}")

    def eligible(self, min_internet: float = MIN_INTERNET_PENETRATION) -> set[str]:
        """Countries meeting the Internet-penetration floor.

        Countries with no penetration figure stay in; only a known
        figure below the floor excludes.
        """
        return {
            c
            for c in self.rates
            if c not in self.internet or self.internet[c] >= min_internet
        }

    @classmethod
    def from_csv(cls, path: str) -> "BenchmarkTable":
        try:
            fh = open(path, "r", encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot open benchmark file: {exc}") from exc
        with fh:
            lines = [ln.rstrip("\r\n") for ln in fh]
        rows = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
        if not rows:
            raise DataError(f"benchmark file is empty: {path}")
        header = [h.strip() for h in rows[0].split(",")]
        if "country" not in header or "literacy_rate" not in header:
            raise DataError("benchmark CSV needs country and literacy_rate columns")
        idx = {name: i for i, name in enumerate(header)}
        rates: dict[str, float] = {}
        schooling: dict[str, float] = {}
        internet: dict[str, float] = {}
        population: dict[str, float] = {}
        for lineno, row in enumerate(rows[1:], start=2):
            parts = row.split(",")
            if len(parts) != len(header):
                raise DataError(f"benchmark row {lineno} has {len(parts)} fields, expected {len(header)}")
            country = parts[idx["country"]].strip()
            if country in rates:
                raise DataError(f"duplicate benchmark country: {country}")
            try:
                rates[country] = float(parts[idx["literacy_rate"]])
                for col, store in (
                    ("schooling_years", schooling),
                    ("internet_penetration", internet),
                    ("population", population),
                ):
                    if col in idx and parts[idx[col]].strip():
                        store[country] = float(parts[idx[col]])
            except ValueError as exc:
                raise DataError(f"benchmark row {lineno}: {exc}") from exc
        return cls(rates=rates, schooling=schooling, internet=internet, population=population)


# ---------------------------------------------------------------------------
# Ordered quantile normalization
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class OrqTransform:
    """Fitted rank-to-normal-quantile transform with linear tails."""

    values: np.ndarray  # sorted distinct training values
    ranks: np.ndarray  # average rank of each distinct value (1-based)
    n: int
    slope: float
    lo_anchor: tuple[float, float]  # (x_min, g(x_min))
    hi_anchor: tuple[float, float]  # (x_max, g(x_max))


def orq_fit(values) -> OrqTransform:
    """Fit the ordered-quantile transform on a training collection."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size < 2:
        raise DataError("ordered-quantile fit needs at least 2 values")
    if not np.isfinite(arr).all():
        raise DataError("ordered-quantile fit requires finite values")
    if np.ptp(arr) == 0.0:
        raise NumericalError("ordered-quantile transform undefined for all-equal values")
    n = arr.size
    avg_ranks = stats.rankdata(arr, method="average")
    g = ndtri((avg_ranks - 0.5) / n)
    # Slope of the LS line of g on x; positive because g is a
    # non-decreasing, non-constant function of x.
    xc = arr - arr.mean()
    denom = float(xc @ xc)
    if denom <= 0.0:  # spread below float underflow
        raise NumericalError("value spread too small to fit a tail slope")
    slope = float((xc @ g) / denom)
    if not np.isfinite(slope) or slope <= 0.0:
        raise NumericalError("tail slope must be finite and positive")
    order = np.argsort(arr, kind="stable")
    uniq, first_pos = np.unique(arr[order], return_index=True)
    uniq_ranks = np.array([avg_ranks[order[i]] for i in first_pos])
    g_lo = float(ndtri((uniq_ranks[0] - 0.5) / n))
    g_hi = float(ndtri((uniq_ranks[-1] - 0.5) / n))
    return OrqTransform(
        values=uniq,
        ranks=uniq_ranks,
        n=n,
        slope=slope,
        lo_anchor=(float(uniq[0]), g_lo),
        hi_anchor=(float(uniq[-1]), g_hi),
    )


def orq_apply(t: OrqTransform, x) -> np.ndarray | float:
    """Transform value(s): interpolated-rank quantile in-domain, anchored
    line with the fitted slope beyond it."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if not np.isfinite(arr).all():
        raise NumericalError("ordered-quantile transform of non-finite value")
    ranks = np.interp(arr, t.values, t.ranks)
    out = ndtri((ranks - 0.5) / t.n)
    lo_x, lo_g = t.lo_anchor
    hi_x, hi_g = t.hi_anchor
    below = arr < lo_x
    above = arr > hi_x
    out[below] = lo_g + t.slope * (arr[below] - lo_x)
    out[above] = hi_g + t.slope * (arr[above] - hi_x)
    return float(out[0]) if scalar else out


def rescale_unit(values) -> np.ndarray:
    """Min-max rescale to [0, 1]."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size < 2:
        raise DataError("rescaling needs at least 2 values")
    span = np.ptp(arr)
    if span == 0.0:
        raise NumericalError("cannot rescale constant values to [0, 1]")
    return (arr - arr.min()) / span


# ---------------------------------------------------------------------------
# Fixed-effect calibration
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class CalibrationModel:
    """Fitted y = intercept + beta * x + alpha[language] model."""

    beta: float
    alpha: dict[str, float]
    intercept: float
    reference_language: str
    sigma_eps: float
    ols: OlsFit

    def predict(self, x: float, language: str) -> float:
        if language != self.reference_language and language not in self.alpha:
            raise ConfigError(f"language {language!r} not in the fitted model")
        return self.intercept + self.beta * x + self.alpha.get(language, 0.0)


def _check_aligned(x: dict, y: dict, lang: dict) -> list[str]:
    countries = sorted(x)
    if set(y) != set(x) or set(lang) != set(x):
        raise DataError("x, y, and language maps must cover the same countries")
    return countries


def _design(countries: list[str], x: dict, lang: dict) -> tuple[np.ndarray, list[str], str]:
    languages = sorted({lang[c] for c in countries})
    reference = languages[0]
    names = ["intercept", "x"] + [f"lang[{l}]" for l in languages[1:]]
    X = np.zeros((len(countries), len(names)))
    X[:, 0] = 1.0
    X[:, 1] = [x[c] for c in countries]
    for j, l in enumerate(languages[1:], start=2):
        X[:, j] = [1.0 if lang[c] == l else 0.0 for c in countries]
    return X, names, reference


def fit_calibration(x: dict, y: dict, lang: dict) -> CalibrationModel:
    """OLS of normalized benchmark on normalized estimate with language
    dummies; the alphabetically first language is the absorbed reference.

    Callers apply the Internet-penetration exclusion before building the
    maps passed here.
    """
    countries = _check_aligned(x, y, lang)
    if len(countries) < 2:
        raise DataError("calibration needs at least 2 countries")
    X, names, reference = _design(countries, x, lang)
    yv = np.array([y[c] for c in countries], dtype=float)
    ols = fit_ols(X, yv, names)
    coefs = ols.coef_dict()
    alpha = {
        name[5:-1]: value for name, value in coefs.items() if name.startswith("lang[")
    }
    return CalibrationModel(
        beta=coefs["x"],
        alpha=alpha,
        intercept=coefs["intercept"],
        reference_language=reference,
        sigma_eps=ols.sigma_eps,
        ols=ols,
    )


@dataclass(frozen=True)
class OlleRow:
    country: str
    language: str
    normalized_x: float
    loo_prediction: float
    olle: float
    loo_flag: bool


def loo_calibrate(x: dict, y: dict, lang: dict) -> tuple[list[OlleRow], dict]:
    """Leave-one-out calibration: per-country out-of-sample predictions,
    min-max rescaled into OLLE.

    A fold whose held-out country is the sole speaker of its language
    falls back to a pooled intercept + beta*x fit and flags the row.
    """
    countries = _check_aligned(x, y, lang)
    if len(countries) < 3:
        raise DataError("leave-one-out calibration needs at least 3 countries")
    preds: dict[str, float] = {}
    flags: dict[str, bool] = {}
    for held in countries:
        train = [c for c in countries if c != held]
        train_langs = {lang[c] for c in train}
        if lang[held] in train_langs:
            model = fit_calibration(
                {c: x[c] for c in train},
                {c: y[c] for c in train},
                {c: lang[c] for c in train},
            )
            preds[held] = model.predict(x[held], lang[held])
            flags[held] = False
        else:
            X = np.column_stack([np.ones(len(train)), [x[c] for c in train]])
            ols = fit_ols(X, np.array([y[c] for c in train]), ["intercept", "x"])
            preds[held] = float(ols.coef[0] + ols.coef[1] * x[held])
            flags[held] = True
    yhat = np.array([preds[c] for c in countries])
    ytrue = np.array([y[c] for c in countries])
    olle = rescale_unit(yhat)
    rows = [
        OlleRow(
            country=c,
            language=lang[c],
            normalized_x=float(x[c]),
            loo_prediction=float(yhat[i]),
            olle=float(olle[i]),
            loo_flag=flags[c],
        )
        for i, c in enumerate(countries)
    ]
    ss_res = float(np.sum((yhat - ytrue) ** 2))
    ss_tot = float(np.sum((ytrue - ytrue.mean()) ** 2))
    metrics = {
        "oos_spearman": float(stats.spearmanr(yhat, ytrue).statistic),
        "oos_rmse": float(np.sqrt(np.mean((yhat - ytrue) ** 2))),
        "oos_r2": 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan"),
        "rescale_bounds": (float(yhat.min()), float(yhat.max())),
        "n_loo_flagged": int(sum(flags.values())),
    }
    return rows, metrics


def multi_language_estimate(
    wbars: dict[str, dict[str, float]],
    shares: dict[str, dict[str, float]],
) -> tuple[dict[str, float], list[str]]:
    """Share-weighted combination of per-language estimates by region.

    Each language is ordered-quantile normalized over its own regional
    values first; shares renormalize over the languages actually
    normalizable in the region. Regions with none are dropped with a
    note.
    """
    by_language: dict[str, dict[str, float]] = {}
    for region, langs in wbars.items():
        for language, value in langs.items():
            by_language.setdefault(language, {})[region] = value
    normalized: dict[str, dict[str, float]] = {}
    notes: list[str] = []
    for language, values in sorted(by_language.items()):
        vals = np.array(list(values.values()), dtype=float)
        if vals.size < 2 or np.ptp(vals) == 0.0:
            notes.append(f"language {language} skipped: too few distinct regional values")
            continue
        transform = orq_fit(vals)
        normalized[language] = {
            region: float(orq_apply(transform, value)) for region, value in values.items()
        }
    combined: dict[str, float] = {}
    for region in sorted(wbars):
        langs = [l for l in wbars[region] if l in normalized]
        weights = np.array([max(0.0, shares.get(region, {}).get(l, 0.0)) for l in langs])
        if not langs or weights.sum() <= 0.0:
            notes.append(f"region {region} excluded: no usable language estimate")
            continue
        weights = weights / weights.sum()
        combined[region] = float(
            sum(w * normalized[l][region] for w, l in zip(weights, langs))
        )
    return combined, notes
