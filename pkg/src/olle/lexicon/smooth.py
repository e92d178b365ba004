"""Penalized cubic spline smoothing of popularity curves.

Curves carry one point per lexicon rank (up to 200,000), almost all of
it flat tail. Fits therefore run in u = log1p(rank - rank_min)
coordinates on count-weighted log-binned means; equal-weight fitting in
linear rank would let the tail dominate both the loss and the penalty.
The smoothing parameter is chosen by seeded 10-fold cross-validation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline, make_smoothing_spline

from ..errors import DataError
from .curves import PopularityCurve

N_BINS = 840
CV_FOLDS = 10
CV_LAMBDAS = np.logspace(-8.0, 2.0, 11)
MIN_DISTINCT_RANKS = 20

# Unit-rank steps below this rank, log-spaced above: head structure needs
# rank-level resolution while the tail would otherwise dominate the grid.
DENSE_GRID_BREAK = 10_000.0
TAIL_GRID_POINTS = 3_000


def dense_rank_grid(rank_min: float, rank_max: float) -> np.ndarray:
    """Evaluation grid: step = 1 rank up to 10,000, log-spaced beyond."""
    head_hi = min(rank_max, DENSE_GRID_BREAK)
    parts = [np.arange(rank_min, head_hi + 1.0)]
    if rank_max > DENSE_GRID_BREAK:
        parts.append(np.geomspace(head_hi + 1.0, rank_max, TAIL_GRID_POINTS))
    return np.concatenate(parts).astype(float)


def log_bin(ranks: np.ndarray, y: np.ndarray, n_bins: int = N_BINS):
    """Average points into log-uniform bins over u = log1p(rank - rank_min).

    Returns (bin mean u, bin mean y, bin counts); empty bins are dropped.
    """
    rank_min = ranks.min()
    u = np.log1p(ranks - rank_min)
    edges = np.linspace(0.0, u.max() * (1 + 1e-12), n_bins + 1)
    which = np.clip(np.searchsorted(edges, u, side="right") - 1, 0, n_bins - 1)
    cnt = np.bincount(which, minlength=n_bins)
    keep = cnt > 0
    su = np.bincount(which, weights=u, minlength=n_bins)[keep] / cnt[keep]
    sy = np.bincount(which, weights=y, minlength=n_bins)[keep] / cnt[keep]
    return su, sy, cnt[keep].astype(float)


def log_bin_min_count(
    ranks: np.ndarray,
    y: np.ndarray,
    rank_min: float,
    n_bins: int = N_BINS,
    min_count: int = 32,
):
    """Log-bin, then merge forward until every bin holds >= min_count points.

    ``rank_min`` is the full curve's minimum rank so the u coordinate
    stays commensurate with fits on the whole curve; the trailing
    remainder folds into the last emitted bin.
    """
    u = np.log1p(ranks - rank_min)
    umin, umax = u.min(), u.max()
    edges = np.linspace(umin, umax * (1 + 1e-12), n_bins + 1)
    which = np.clip(np.searchsorted(edges, u, side="right") - 1, 0, n_bins - 1)
    cnt = np.bincount(which, minlength=n_bins)
    su = np.bincount(which, weights=u, minlength=n_bins)
    sy = np.bincount(which, weights=y, minlength=n_bins)
    out_u: list[float] = []
    out_y: list[float] = []
    out_w: list[float] = []
    acc_c, acc_u, acc_y = 0, 0.0, 0.0
    for i in range(n_bins):
        acc_c += cnt[i]
        acc_u += su[i]
        acc_y += sy[i]
        if acc_c >= min_count:
            out_u.append(acc_u / acc_c)
            out_y.append(acc_y / acc_c)
            out_w.append(float(acc_c))
            acc_c, acc_u, acc_y = 0, 0.0, 0.0
    if acc_c > 0 and out_u:
        total = out_w[-1] + acc_c
        out_u[-1] = (out_u[-1] * out_w[-1] + acc_u) / total
        out_y[-1] = (out_y[-1] * out_w[-1] + acc_y) / total
        out_w[-1] = total
    return np.array(out_u), np.array(out_y), np.array(out_w)


def cv_scores(
    us: np.ndarray,
    ys: np.ndarray,
    w: np.ndarray,
    seed: int,
    lams: np.ndarray,
    folds: int = CV_FOLDS,
):
    """Weighted k-fold CV squared error per candidate smoothing parameter.

    Fold assignment is a seeded permutation so the choice is reproducible
    and recorded. Returns (mean score, standard error) per lambda.
    """
    rng = np.random.default_rng(seed)
    idx = rng.permutation(len(us))
    parts = np.array_split(idx, folds)
    scores = np.zeros((len(lams), folds))
    for f, te in enumerate(parts):
        tr = np.setdiff1d(idx, te)
        for j, lam in enumerate(lams):
            s = make_smoothing_spline(us[tr], ys[tr], w=w[tr], lam=lam)
            resid = ys[te] - s(us[te])
            scores[j, f] = np.average(resid**2, weights=w[te])
    return scores.mean(axis=1), scores.std(axis=1, ddof=1) / np.sqrt(folds)


@dataclass(eq=False)
class SmootherFit:
    """Fitted smooth view of a popularity curve.

    The spline lives in u = log1p(rank - rank_min) over min-max
    normalized popularity; accessors below map back to rank units or to
    the unit square. Constant curves are flagged and evaluate to the
    constant with zero derivatives.
    """

    language: str | None
    rank_min: float
    rank_max: float
    pop_min: float
    pop_max: float
    lam: float
    cv_score: float
    seed: int
    constant: bool
    spline: BSpline | None = None
    _d1: BSpline | None = field(default=None, repr=False)
    _d2: BSpline | None = field(default=None, repr=False)

    @property
    def knots(self) -> np.ndarray:
        return self.spline.t if self.spline is not None else np.array([])

    @property
    def coefficients(self) -> np.ndarray:
        return self.spline.c if self.spline is not None else np.array([])

    @property
    def rank_span(self) -> float:
        return self.rank_max - self.rank_min

    @property
    def pop_span(self) -> float:
        return self.pop_max - self.pop_min

    def _u(self, ranks: np.ndarray) -> np.ndarray:
        return np.log1p(np.asarray(ranks, dtype=float) - self.rank_min)

    def unit_value(self, ranks) -> np.ndarray:
        """Fitted value on the min-max normalized popularity scale."""
        ranks = np.asarray(ranks, dtype=float)
        if self.constant:
            return np.zeros_like(ranks)
        return self.spline(self._u(ranks))

    def unit_d1(self, ranks) -> np.ndarray:
        """First derivative on the unit square (x scaled by the rank span)."""
        ranks = np.asarray(ranks, dtype=float)
        if self.constant:
            return np.zeros_like(ranks)
        if self._d1 is None:
            self._d1 = self.spline.derivative(1)
        jac = 1.0 + ranks - self.rank_min
        return self._d1(self._u(ranks)) * self.rank_span / jac

    def unit_d2(self, ranks) -> np.ndarray:
        """Second derivative on the unit square."""
        ranks = np.asarray(ranks, dtype=float)
        if self.constant:
            return np.zeros_like(ranks)
        if self._d1 is None:
            self._d1 = self.spline.derivative(1)
        if self._d2 is None:
            self._d2 = self.spline.derivative(2)
        u = self._u(ranks)
        jac = 1.0 + ranks - self.rank_min
        return (self._d2(u) - self._d1(u)) * (self.rank_span / jac) ** 2

    def value(self, ranks) -> np.ndarray:
        """Fitted popularity."""
        if self.constant:
            return np.full(np.shape(ranks), self.pop_min, dtype=float)
        return self.pop_min + self.pop_span * self.unit_value(ranks)

    def deriv1(self, ranks) -> np.ndarray:
        """d popularity / d rank."""
        if self.constant:
            return np.zeros(np.shape(ranks), dtype=float)
        return self.unit_d1(ranks) * self.pop_span / self.rank_span

    def deriv2(self, ranks) -> np.ndarray:
        """d^2 popularity / d rank^2."""
        if self.constant:
            return np.zeros(np.shape(ranks), dtype=float)
        return self.unit_d2(ranks) * self.pop_span / self.rank_span**2


def fit_smoother(
    curve: PopularityCurve,
    seed: int = 0,
    n_bins: int = N_BINS,
    lambdas: np.ndarray = CV_LAMBDAS,
) -> SmootherFit:
    """Fit a penalized cubic spline with CV-chosen smoothing.

    Degenerate (constant) curves are flagged rather than rejected: the
    fit evaluates to the constant with zero derivatives everywhere.
    """
    ranks = np.asarray(curve.ranks, dtype=float)
    pop = np.asarray(curve.popularity, dtype=float)
    if len(np.unique(ranks)) < MIN_DISTINCT_RANKS:
        raise DataError(
            f"smoother needs at least {MIN_DISTINCT_RANKS} distinct ranks, got {len(ranks)}"
        )
    rank_min, rank_max = float(ranks.min()), float(ranks.max())
    pop_min, pop_max = float(pop.min()), float(pop.max())
    if pop_max == pop_min:
        return SmootherFit(
            language=curve.language,
            rank_min=rank_min,
            rank_max=rank_max,
            pop_min=pop_min,
            pop_max=pop_max,
            lam=float("nan"),
            cv_score=0.0,
            seed=seed,
            constant=True,
        )
    yh = (pop - pop_min) / (pop_max - pop_min)
    us, ys, w = log_bin(ranks, yh, n_bins=n_bins)
    mean, _se = cv_scores(us, ys, w, seed, lams=lambdas)
    best = int(np.argmin(mean))
    lam = float(lambdas[best])
    spline = make_smoothing_spline(us, ys, w=w, lam=lam)
    return SmootherFit(
        language=curve.language,
        rank_min=rank_min,
        rank_max=rank_max,
        pop_min=pop_min,
        pop_max=pop_max,
        lam=lam,
        cv_score=float(mean[best]),
        seed=seed,
        constant=False,
        spline=spline,
    )


def fit_binned(
    us: np.ndarray,
    ys: np.ndarray,
    w: np.ndarray,
    lam: float,
    *,
    language: str | None,
    rank_min: float,
    rank_max: float,
    pop_min: float,
    pop_max: float,
    seed: int,
) -> SmootherFit:
    """Wrap a fixed-lambda spline on pre-binned data as a SmootherFit.

    Normalization constants come from the full curve so unit-square
    derivatives stay commensurate with whole-curve fits.
    """
    spline = make_smoothing_spline(us, ys, w=w, lam=lam)
    return SmootherFit(
        language=language,
        rank_min=rank_min,
        rank_max=rank_max,
        pop_min=pop_min,
        pop_max=pop_max,
        lam=float(lam),
        cv_score=float("nan"),
        seed=seed,
        constant=False,
        spline=spline,
    )
