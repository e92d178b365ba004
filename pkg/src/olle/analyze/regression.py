"""OLS gap regressions: per-variable transforms, interactions,
geographic-group dummies, t-based intervals, leave-one-out metrics.

Variables are transformed separately before any products are formed
(ordered-quantile by default, log where configured), matching how the
downstream tables are built. The geographic block uses five groups with
Sub-Saharan Africa as the absorbed reference when present.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..calibrate import orq_apply, orq_fit
from ..errors import ConfigError, DataError, RankDeficiencyError
from ..ols import OlsFit, fit_ols

TRANSFORMS = ("orq", "log", "none")
GEO_REFERENCE = "Sub-Saharan Africa"


@dataclass(frozen=True)
class RegressionSpec:
    """Declarative description of one gap regression."""

    dv: str
    ivs: tuple[str, ...]
    interactions: tuple[tuple[str, str], ...] = ()
    geo_controls: bool = False
    transforms: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.dv:
            raise ConfigError("regression needs a dependent variable")
        if not self.ivs:
            raise ConfigError("regression needs at least one predictor")
        for a, b in self.interactions:
            for var in (a, b):
                if var not in self.ivs:
                    raise ConfigError(
                        f"interaction variable {var!r} is not a declared predictor"
                    )
        for var, how in self.transforms.items():
            if how not in TRANSFORMS:
                raise ConfigError(f"unknown transform {how!r} for {var!r}")
            if var != self.dv and var not in self.ivs:
                raise ConfigError(f"transform given for unknown variable {var!r}")

    def transform_of(self, var: str) -> str:
        return self.transforms.get(var, "orq")

    @classmethod
    def from_dict(cls, obj: dict) -> "RegressionSpec":
        try:
            return cls(
                dv=obj["dv"],
                ivs=tuple(obj["ivs"]),
                interactions=tuple((a, b) for a, b in obj.get("interactions", [])),
                geo_controls=bool(obj.get("geo_controls", False)),
                transforms=dict(obj.get("transforms", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed regression spec: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "dv": self.dv,
            "ivs": list(self.ivs),
            "interactions": [list(pair) for pair in self.interactions],
            "geo_controls": self.geo_controls,
            "transforms": dict(self.transforms),
        }


@dataclass(eq=False)
class RegressionReport:
    spec: RegressionSpec
    countries: list[str]
    names: list[str]
    ols: OlsFit
    reference_group: str | None
    transformed: dict[str, dict[str, float]]
    loo_rmse: float | None
    loo_r2: float | None
    loo_skipped: int

    def coefficients(self) -> list[dict]:
        ci = self.ols.conf_int()
        se = self.ols.se()
        return [
            {
                "name": name,
                "estimate": float(self.ols.coef[j]),
                "se": float(se[j]),
                "ci_low": float(ci[j, 0]),
                "ci_high": float(ci[j, 1]),
            }
            for j, name in enumerate(self.names)
        ]

    def stats(self) -> dict:
        return {
            "n_obs": self.ols.n_obs,
            "r2": self.ols.r2,
            "adj_r2": self.ols.adj_r2,
            "aic": self.ols.aic,
            "bic": self.ols.bic,
            "f_stat": self.ols.f_stat,
            "f_df": list(self.ols.f_df) if self.ols.f_df else None,
            "sigma_eps": self.ols.sigma_eps,
            "loo_rmse": self.loo_rmse,
            "loo_r2": self.loo_r2,
            "loo_skipped": self.loo_skipped,
        }


def _transform_column(values: np.ndarray, how: str, var: str) -> np.ndarray:
    if how == "none":
        return values.astype(float)
    if how == "log":
        if np.any(values <= 0):
            raise DataError(f"log transform of non-positive values in {var!r}")
        return np.log(values)
    t = orq_fit(values)
    return np.asarray(orq_apply(t, values))


def build_design(
    spec: RegressionSpec,
    data: dict[str, dict[str, float]],
    geo_groups: dict[str, str] | None = None,
):
    """Listwise-complete design matrix, response, names, and metadata."""
    for var in (spec.dv, *spec.ivs):
        if var not in data:
            raise ConfigError(f"unknown regression variable: {var!r}")
    if spec.geo_controls and geo_groups is None:
        raise ConfigError("geographic controls requested but no group mapping given")
    countries = sorted(
        c
        for c in data[spec.dv]
        if all(c in data[v] for v in spec.ivs)
        and (not spec.geo_controls or c in geo_groups)
        and all(np.isfinite(data[v][c]) for v in (spec.dv, *spec.ivs))
    )
    if len(countries) < 3:
        raise DataError("too few complete rows for regression")

    transformed: dict[str, dict[str, float]] = {}
    for var in (spec.dv, *spec.ivs):
        raw = np.array([data[var][c] for c in countries], dtype=float)
        col = _transform_column(raw, spec.transform_of(var), var)
        transformed[var] = dict(zip(countries, col))

    names = ["intercept"]
    columns = [np.ones(len(countries))]
    for var in spec.ivs:
        names.append(var)
        columns.append(np.array([transformed[var][c] for c in countries]))
    for a, b in spec.interactions:
        names.append(f"{a}:{b}")
        columns.append(
            np.array([transformed[a][c] * transformed[b][c] for c in countries])
        )
    reference_group = None
    if spec.geo_controls:
        present = sorted({geo_groups[c] for c in countries})
        reference_group = GEO_REFERENCE if GEO_REFERENCE in present else present[0]
        for group in present:
            if group == reference_group:
                continue
            names.append(f"geo[{group}]")
            columns.append(
                np.array([1.0 if geo_groups[c] == group else 0.0 for c in countries])
            )
    X = np.column_stack(columns)
    y = np.array([transformed[spec.dv][c] for c in countries])
    return X, y, names, countries, transformed, reference_group


def fit_gap_regression(
    spec: RegressionSpec,
    data: dict[str, dict[str, float]],
    geo_groups: dict[str, str] | None = None,
) -> RegressionReport:
    """Fit the regression and attach leave-one-out metrics.

    Folds whose reduced design loses rank (for example a dummy group
    with a single country) are skipped and counted rather than failing
    the whole fit.
    """
    X, y, names, countries, transformed, reference = build_design(spec, data, geo_groups)
    ols = fit_ols(X, y, names)

    preds = []
    actuals = []
    skipped = 0
    n = len(countries)
    for i in range(n):
        mask = np.arange(n) != i
        if mask.sum() <= X.shape[1]:
            skipped += 1
            continue
        try:
            fold = fit_ols(X[mask], y[mask], names)
        except RankDeficiencyError:
            skipped += 1
            continue
        preds.append(float(X[i] @ fold.coef))
        actuals.append(float(y[i]))
    if preds:
        preds_a = np.asarray(preds)
        actuals_a = np.asarray(actuals)
        ss_res = float(np.sum((preds_a - actuals_a) ** 2))
        ss_tot = float(np.sum((actuals_a - actuals_a.mean()) ** 2))
        loo_rmse = float(np.sqrt(np.mean((preds_a - actuals_a) ** 2)))
        loo_r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else None
    else:
        loo_rmse = loo_r2 = None
    return RegressionReport(
        spec=spec,
        countries=countries,
        names=names,
        ols=ols,
        reference_group=reference,
        transformed=transformed,
        loo_rmse=loo_rmse,
        loo_r2=loo_r2,
        loo_skipped=skipped,
    )


def marginal_effects(
    report: RegressionReport,
    pair: tuple[str, str],
    grid: np.ndarray | None = None,
) -> list[dict]:
    """Effect of A (dy/dA) at levels of B for an interacted pair.

    Uses the delta method on the joint sampling distribution of the
    main and interaction coefficients; intervals use the fit's residual
    t distribution.
    """
    a, b = pair
    names = report.names
    inter_name = None
    for candidate in (f"{a}:{b}", f"{b}:{a}"):
        if candidate in names:
            inter_name = candidate
            break
    if inter_name is None or a not in names:
        raise ConfigError(f"model has no interaction between {a!r} and {b!r}")
    ja = names.index(a)
    jab = names.index(inter_name)
    if grid is None:
        b_values = np.array([report.transformed[b][c] for c in report.countries])
        grid = np.linspace(b_values.min(), b_values.max(), 11)
    grid = np.asarray(grid, dtype=float)
    coef = report.ols.coef
    cov = report.ols.cov
    tcrit = stats.t.ppf(0.975, report.ols.df_resid)
    rows = []
    for level in grid:
        effect = coef[ja] + coef[jab] * level
        var = cov[ja, ja] + level * level * cov[jab, jab] + 2.0 * level * cov[ja, jab]
        se = float(np.sqrt(max(var, 0.0)))
        rows.append(
            {
                "b_level": float(level),
                "effect": float(effect),
                "se": se,
                "ci_low": float(effect - tcrit * se),
                "ci_high": float(effect + tcrit * se),
            }
        )
    return rows
