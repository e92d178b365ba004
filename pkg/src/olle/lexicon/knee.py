"""Elbow detection on popularity curves: max curvature (k0) + Kneedle (k1).

Both detectors work on the min-max normalized curve (unit square), which
is what makes them invariant to y rescaling and turns uniform x
rescaling into an exact rank-scale factor.

k1 comes first, from Kneedle on the CV-smoothed whole curve. k0 then
comes from the curvature maximum of a refit restricted to the window
[k1/6, 2.2*k1]: the violent head would otherwise dominate both the bin
means and the smoothing-parameter choice. The window refit picks its
smoothing parameter by a robust discrepancy rule (largest lambda whose
median weighted squared residual stays within a chi-square band of the
local noise estimate) instead of CV, which under noise is fragile
exactly where the curvature argmax lives; an equivalent-bandwidth cap
and an interior-argmax fallback guard the two known failure directions.
"""
from __future__ import annotations

import numpy as np

from ..errors import DataError, NumericalError
from .curves import LoffRange, PopularityCurve
from .smooth import (
    SmootherFit,
    dense_rank_grid,
    fit_binned,
    fit_smoother,
    log_bin_min_count,
)

DEFAULT_SENSITIVITY = 1.0
WINDOW_LAMBDAS = np.logspace(-9.0, 2.0, 23)
WINDOW_MIN_BIN_COUNT = 32
# Kernel-equivalent bandwidth cap (in u units) for the window refit;
# lam = r_med * h^4 is the matched smoothing-spline penalty.
MAX_EQUIV_BANDWIDTH = 0.14
CHI2_1_MEDIAN = 0.454936423119573
DISCREPANCY_FACTOR = 1.5
# Window bounds relative to k1: data window for the refit, search window
# for the curvature argmax.
WINDOW_DATA_LO, WINDOW_DATA_HI = 1.0 / 6.0, 2.2
WINDOW_SEARCH_LO, WINDOW_SEARCH_HI = 1.0 / 5.0, 0.999


def _kneedle_index(x_unit: np.ndarray, y_values: np.ndarray, sensitivity: float) -> int | None:
    """Index of the accepted knee on a decreasing curve, else None.

    The difference curve d = (1 - x) - y measures how far the curve sags
    below the chord between its endpoints; on the decreasing-convex
    shape class it is unimodal, so its global interior maximum is the
    unique candidate. The candidate is accepted only when d later falls
    below it by sensitivity times the mean x spacing.
    """
    span = y_values.max() - y_values.min()
    if span <= 0:
        return None
    yn = (y_values - y_values.min()) / span
    d = (1.0 - x_unit) - yn
    i = int(np.argmax(d))
    if i == 0 or i == len(d) - 1:
        return None
    mean_dx = float(np.mean(np.diff(x_unit)))
    if not np.any(d[i + 1 :] < d[i] - sensitivity * mean_dx):
        return None
    return i


def kneedle_point(
    curve_or_fit: PopularityCurve | SmootherFit,
    sensitivity: float = DEFAULT_SENSITIVITY,
) -> int:
    """Kneedle knee of a decreasing curve, in rank units.

    A raw curve is used point-by-point; a smoother fit is evaluated on
    the dense rank grid first.
    """
    if sensitivity <= 0:
        raise DataError("kneedle sensitivity must be positive")
    rank, _idx = _kneedle_rank(curve_or_fit, sensitivity)
    return int(round(rank))


def _kneedle_rank(curve_or_fit, sensitivity: float):
    if isinstance(curve_or_fit, PopularityCurve):
        curve = curve_or_fit
        if len(curve) < 3:
            raise DataError("kneedle needs at least 3 curve points")
        ranks = curve.ranks
        values = curve.popularity
    else:
        fit = curve_or_fit
        if fit.constant:
            raise NumericalError(f"no_knee for {fit.language}: constant curve")
        ranks = dense_rank_grid(fit.rank_min, fit.rank_max)
        values = fit.unit_value(ranks)
    span = ranks.max() - ranks.min()
    if span <= 0:
        raise DataError("kneedle needs a non-degenerate rank span")
    x_unit = (ranks - ranks.min()) / span
    idx = _kneedle_index(x_unit, values, sensitivity)
    if idx is None:
        raise NumericalError("no_knee: difference curve has no accepted interior maximum")
    return float(ranks[idx]), idx


def _curvature(fit: SmootherFit, ranks: np.ndarray) -> np.ndarray:
    d1 = fit.unit_d1(ranks)
    d2 = fit.unit_d2(ranks)
    return np.abs(d2) / (1.0 + d1**2) ** 1.5


def _first_argmax(values: np.ndarray, rel_tol: float = 1e-12) -> int:
    vmax = values.max()
    if vmax <= 0:
        return int(np.argmax(values))
    return int(np.argmax(values >= vmax * (1.0 - rel_tol)))


def max_curvature_point(
    fit: SmootherFit,
    domain: tuple[float, float] | None = None,
) -> int:
    """Rank maximizing kappa = |f''| / (1 + f'^2)^(3/2) on the unit square.

    Evaluated on the dense rank grid restricted to ``domain`` (inclusive
    bounds); ties within 1e-12 relative break toward the smaller rank. A
    fit with no curvature anywhere (constant or straight line) errors.
    """
    if fit.constant:
        raise NumericalError(f"no_elbow for {fit.language}: constant curve has zero curvature")
    grid = dense_rank_grid(fit.rank_min, fit.rank_max)
    if domain is not None:
        lo, hi = domain
        grid = grid[(grid >= lo) & (grid <= hi)]
        if len(grid) == 0:
            raise DataError(f"curvature domain [{lo}, {hi}] contains no grid points")
    values = fit.unit_value(grid)
    x_unit = (grid - fit.rank_min) / fit.rank_span
    coeffs = np.polyfit(x_unit, values, 1)
    line_resid = float(np.max(np.abs(values - np.polyval(coeffs, x_unit))))
    kappa = _curvature(fit, grid)
    if line_resid < 1e-6 or kappa.max() < 1e-12:
        raise NumericalError(
            f"no_elbow for {fit.language}: fitted curve is a straight line in the domain"
        )
    return int(round(grid[_first_argmax(kappa)]))


def _sigma_hat(us: np.ndarray, ys: np.ndarray, w: np.ndarray) -> float:
    """Robust noise scale of binned means via local-linear detrending.

    Each interior bin is predicted from its two neighbors honoring the
    irregular u spacing, so the smooth signal cancels to second order
    and the residual scale reflects noise alone; MAD keeps the estimate
    immune to the kink's own localized lack of fit.
    """
    if len(ys) < 5:
        return 0.0
    t = (us[1:-1] - us[:-2]) / (us[2:] - us[:-2])
    pred = (1.0 - t) * ys[:-2] + t * ys[2:]
    resid = ys[1:-1] - pred
    scale = np.sqrt(1.0 / w[1:-1] + (1.0 - t) ** 2 / w[:-2] + t**2 / w[2:])
    e = resid / scale
    mad = float(np.median(np.abs(e - np.median(e))))
    return 1.4826 * mad


def _window_refit(
    curve_ranks: np.ndarray,
    yh: np.ndarray,
    k1_rank: float,
    fit: SmootherFit,
    seed: int,
) -> SmootherFit:
    """Refit around the elbow window and pick lambda by the discrepancy rule.

    Scans lambdas ascending and keeps the largest one whose median
    weighted squared residual stays within DISCREPANCY_FACTOR chi-square
    medians of the noise estimate, capped at the equivalent-bandwidth
    limit; if the curvature argmax pins to the search-window boundary the
    scan steps back toward interpolation until it is interior.
    """
    lo = k1_rank * WINDOW_DATA_LO
    hi = min(k1_rank * WINDOW_DATA_HI, fit.rank_max)
    in_window = (curve_ranks >= lo) & (curve_ranks <= hi)
    if in_window.sum() < 5:
        raise NumericalError(
            f"no_elbow for {fit.language}: too few curve points in the elbow window"
        )
    uw, yw, ww = log_bin_min_count(
        curve_ranks[in_window],
        yh[in_window],
        fit.rank_min,
        min_count=WINDOW_MIN_BIN_COUNT,
    )
    if len(uw) < 5:
        raise NumericalError(
            f"no_elbow for {fit.language}: too few populated bins in the elbow window"
        )
    sig2 = _sigma_hat(uw, yw, ww) ** 2
    grid = dense_rank_grid(fit.rank_min, fit.rank_max)
    search = (grid >= k1_rank * WINDOW_SEARCH_LO) & (grid <= k1_rank * WINDOW_SEARCH_HI)
    search_ranks = grid[search]
    if len(search_ranks) == 0:
        raise NumericalError(f"no_elbow for {fit.language}: empty curvature search window")
    r_med = float(np.expm1(np.median(uw)))
    lam_cap = r_med * MAX_EQUIV_BANDWIDTH**4

    fits: dict[int, SmootherFit] = {}
    argmaxes: dict[int, int] = {}

    def fit_at(j: int) -> SmootherFit:
        if j not in fits:
            fits[j] = fit_binned(
                uw,
                yw,
                ww,
                WINDOW_LAMBDAS[j],
                language=fit.language,
                rank_min=fit.rank_min,
                rank_max=fit.rank_max,
                pop_min=fit.pop_min,
                pop_max=fit.pop_max,
                seed=seed,
            )
        return fits[j]

    def argmax_at(j: int) -> int:
        if j not in argmaxes:
            argmaxes[j] = int(np.argmax(_curvature(fit_at(j), search_ranks)))
        return argmaxes[j]

    threshold = DISCREPANCY_FACTOR * CHI2_1_MEDIAN * sig2
    j_sel = 0
    for j in range(len(WINDOW_LAMBDAS)):
        if WINDOW_LAMBDAS[j] > lam_cap and j > 0:
            break
        s = fit_at(j)
        med_w = float(np.median(ww * (yw - s.spline(uw)) ** 2))
        if med_w <= threshold:
            j_sel = j
    while j_sel > 0:
        i = argmax_at(j_sel)
        if 0 < i < len(search_ranks) - 1:
            break
        j_sel -= 1
    return fit_at(j_sel)


def detect_loff_range(
    curve: PopularityCurve,
    sensitivity: float = DEFAULT_SENSITIVITY,
    seed: int = 0,
) -> LoffRange:
    """Detect the LoFF band [k0, k1]: max curvature start, Kneedle end.

    Deterministic given (curve, sensitivity, seed): the seed fixes the
    CV fold assignment of the whole-curve smoother.
    """
    fit = fit_smoother(curve, seed=seed)
    if fit.constant:
        raise NumericalError(f"no_knee for {curve.language}: constant curve")
    k1_rank, _ = _kneedle_rank(fit, sensitivity)
    yh = (curve.popularity - fit.pop_min) / fit.pop_span
    window_fit = _window_refit(curve.ranks, yh, k1_rank, fit, seed)
    k0 = max_curvature_point(
        window_fit,
        domain=(k1_rank * WINDOW_SEARCH_LO, k1_rank * WINDOW_SEARCH_HI),
    )
    k1 = int(round(k1_rank))
    if k0 >= k1:
        raise NumericalError(
            f"elbow inversion for {curve.language}: k0={k0} >= k1={k1}"
        )
    return LoffRange(language=curve.language, k0=k0, k1=k1)
