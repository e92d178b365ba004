"""Ordinary least squares via pivoted QR, with the fit statistics
downstream tables report (R2, AIC/BIC under the Gaussian MLE, F).

Rank deficiency is detected from the R factor's diagonal and reported
by column name, since "which columns alias" is the actionable part.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .errors import NumericalError, RankDeficiencyError


@dataclass(eq=False)
class OlsFit:
    """Coefficients and inference for one least-squares fit.

    ``sigma_eps`` uses the n-p denominator (reported residual sd);
    ``sigma_mle`` the n denominator (enters AIC/BIC).
    """

    names: list[str]
    coef: np.ndarray
    cov: np.ndarray
    n_obs: int
    df_resid: int
    rss: float
    tss: float
    sigma_eps: float
    sigma_mle: float
    r2: float
    adj_r2: float
    aic: float
    bic: float
    f_stat: float | None
    f_df: tuple[int, int] | None
    fitted: np.ndarray
    residuals: np.ndarray

    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    def t_stats(self) -> np.ndarray:
        return self.coef / self.se()

    def conf_int(self, level: float = 0.95) -> np.ndarray:
        """Per-coefficient t confidence intervals, rows (lo, hi)."""
        half = stats.t.ppf(0.5 + level / 2.0, self.df_resid) * self.se()
        return np.column_stack([self.coef - half, self.coef + half])

    def coef_dict(self) -> dict[str, float]:
        return {name: float(c) for name, c in zip(self.names, self.coef)}

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef


def fit_ols(X: np.ndarray, y: np.ndarray, names: list[str]) -> OlsFit:
    """Least squares of y on X (X includes any intercept column).

    Raises RankDeficiencyError naming the aliased columns whenever the
    design is numerically rank deficient; never silently drops columns.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise NumericalError("design matrix and response shapes disagree")
    n, p = X.shape
    if len(names) != p:
        raise NumericalError("one name per design column required")
    if n < p:
        raise RankDeficiencyError(names)
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NumericalError("non-finite values in regression inputs")

    Q, R, piv = linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(n, p) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < p:
        raise RankDeficiencyError([names[j] for j in piv[rank:]])

    coef_piv = linalg.solve_triangular(R, Q.T @ y)
    coef = np.empty(p)
    coef[piv] = coef_piv
    fitted = X @ coef
    resid = y - fitted
    rss = float(resid @ resid)
    tss = float(np.sum((y - y.mean()) ** 2))
    df_resid = n - p
    if df_resid <= 0:
        raise NumericalError("no residual degrees of freedom")

    r_inv = linalg.solve_triangular(R, np.eye(p))
    cov_piv = (rss / df_resid) * (r_inv @ r_inv.T)
    cov = np.empty((p, p))
    cov[np.ix_(piv, piv)] = cov_piv

    r2 = 1.0 - rss / tss if tss > 0 else float("nan")
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / df_resid if tss > 0 else float("nan")
    sigma_mle = np.sqrt(rss / n)
    # Gaussian log-likelihood at the MLE; +1 parameter for sigma.
    if rss > 0:
        loglik = -0.5 * n * (np.log(2.0 * np.pi) + np.log(rss / n) + 1.0)
        aic = -2.0 * loglik + 2.0 * (p + 1)
        bic = -2.0 * loglik + np.log(n) * (p + 1)
    else:
        aic = bic = float("-inf")
    if p > 1 and tss > 0 and rss > 0:
        f_stat = ((tss - rss) / (p - 1)) / (rss / df_resid)
        f_df = (p - 1, df_resid)
    else:
        f_stat, f_df = None, None

    return OlsFit(
        names=list(names),
        coef=coef,
        cov=cov,
        n_obs=n,
        df_resid=df_resid,
        rss=rss,
        tss=tss,
        sigma_eps=float(np.sqrt(rss / df_resid)),
        sigma_mle=float(sigma_mle),
        r2=r2,
        adj_r2=adj_r2,
        aic=float(aic),
        bic=float(bic),
        f_stat=None if f_stat is None else float(f_stat),
        f_df=f_df,
        fitted=fitted,
        residuals=resid,
    )
