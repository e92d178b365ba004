import numpy as np
import pytest
from scipy import stats

from olle.errors import NumericalError, RankDeficiencyError
from olle.ols import fit_ols


def normal_equation_oracle(X, y):
    """Textbook (X'X)^-1 X'y with the matching covariance."""
    xtx_inv = np.linalg.inv(X.T @ X)
    coef = xtx_inv @ X.T @ y
    resid = y - X @ coef
    rss = float(resid @ resid)
    cov = rss / (X.shape[0] - X.shape[1]) * xtx_inv
    return coef, cov, rss


def random_design(rng, n=None, p=None):
    n = n or int(rng.integers(8, 51))
    p = p or int(rng.integers(1, min(10, n - 1) + 1))
    X = rng.normal(size=(n, p))
    X[:, 0] = 1.0
    y = rng.normal(size=n)
    return X, y, [f"x{j}" for j in range(p)]


class TestAgainstNormalEquations:
    def test_coefficients_and_covariance(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            X, y, names = random_design(rng)
            fit = fit_ols(X, y, names)
            coef, cov, rss = normal_equation_oracle(X, y)
            np.testing.assert_allclose(fit.coef, coef, rtol=1e-8, atol=1e-10)
            np.testing.assert_allclose(fit.cov, cov, rtol=1e-7, atol=1e-10)
            assert fit.rss == pytest.approx(rss, rel=1e-10)

    def test_known_closed_form_line(self):
        # y = 2 + 3x fitted exactly
        x = np.array([0.0, 1.0, 2.0, 3.0])
        X = np.column_stack([np.ones(4), x])
        y = 2.0 + 3.0 * x
        fit = fit_ols(X, y, ["const", "x"])
        np.testing.assert_allclose(fit.coef, [2.0, 3.0], atol=1e-12)
        assert fit.rss == pytest.approx(0.0, abs=1e-20)

    def test_exact_fit_pins_information_criteria(self):
        fit = fit_ols(np.ones((4, 1)), np.full(4, 3.0), ["const"])
        assert fit.rss == 0.0
        assert fit.aic == float("-inf") and fit.bic == float("-inf")

    def test_r2_partitions_variance(self):
        rng = np.random.default_rng(3)
        X, y, names = random_design(rng, n=30, p=4)
        fit = fit_ols(X, y, names)
        assert fit.r2 == pytest.approx(1.0 - fit.rss / fit.tss, rel=1e-12)
        expected_adj = 1.0 - (1.0 - fit.r2) * (fit.n_obs - 1) / fit.df_resid
        assert fit.adj_r2 == pytest.approx(expected_adj, rel=1e-12)

    def test_information_criteria_from_loglik(self):
        rng = np.random.default_rng(11)
        X, y, names = random_design(rng, n=40, p=3)
        fit = fit_ols(X, y, names)
        n, p = fit.n_obs, len(names)
        loglik = float(
            np.sum(stats.norm.logpdf(fit.residuals, scale=fit.sigma_mle))
        )
        assert fit.aic == pytest.approx(-2 * loglik + 2 * (p + 1), rel=1e-10)
        assert fit.bic == pytest.approx(-2 * loglik + np.log(n) * (p + 1), rel=1e-10)

    def test_f_statistic_matches_anova_form(self):
        rng = np.random.default_rng(5)
        X, y, names = random_design(rng, n=25, p=4)
        fit = fit_ols(X, y, names)
        p = len(names)
        expected = ((fit.tss - fit.rss) / (p - 1)) / (fit.rss / fit.df_resid)
        assert fit.f_stat == pytest.approx(expected, rel=1e-12)
        assert fit.f_df == (p - 1, fit.df_resid)

    def test_intercept_only_has_no_f(self):
        y = np.array([1.0, 2.0, 4.0])
        fit = fit_ols(np.ones((3, 1)), y, ["const"])
        assert fit.f_stat is None and fit.f_df is None
        assert fit.coef[0] == pytest.approx(y.mean())


class TestInference:
    def test_se_t_and_ci_consistency(self):
        rng = np.random.default_rng(9)
        X, y, names = random_design(rng, n=30, p=3)
        fit = fit_ols(X, y, names)
        se = fit.se()
        np.testing.assert_allclose(se, np.sqrt(np.diag(fit.cov)), rtol=1e-12)
        np.testing.assert_allclose(fit.t_stats(), fit.coef / se, rtol=1e-12)
        ci = fit.conf_int(0.95)
        half = stats.t.ppf(0.975, fit.df_resid) * se
        np.testing.assert_allclose(ci[:, 0], fit.coef - half, rtol=1e-12)
        np.testing.assert_allclose(ci[:, 1], fit.coef + half, rtol=1e-12)

    def test_predict_and_coef_dict(self):
        X = np.column_stack([np.ones(5), np.arange(5.0)])
        y = 1.0 + 2.0 * np.arange(5.0)
        fit = fit_ols(X, y, ["const", "x"])
        np.testing.assert_allclose(fit.predict(X), y, atol=1e-12)
        assert fit.coef_dict() == pytest.approx({"const": 1.0, "x": 2.0})


class TestDegenerateDesigns:
    def test_duplicate_column_names_the_alias(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=12)
        X = np.column_stack([np.ones(12), x, x])
        with pytest.raises(RankDeficiencyError) as err:
            fit_ols(X, rng.normal(size=12), ["const", "a", "a_copy"])
        assert set(err.value.columns) & {"a", "a_copy"}

    def test_rank_deficiency_always_raises(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            n = int(rng.integers(6, 40))
            p = int(rng.integers(2, min(8, n - 1) + 1))
            X = rng.normal(size=(n, p))
            # make one column an exact combination of two others
            j = int(rng.integers(0, p))
            others = [k for k in range(p) if k != j]
            X[:, j] = X[:, others[0]] * rng.normal() + (
                X[:, others[1]] if len(others) > 1 else 0.0
            )
            with pytest.raises(RankDeficiencyError):
                fit_ols(X, rng.normal(size=n), [f"x{k}" for k in range(p)])

    def test_more_columns_than_rows(self):
        with pytest.raises(RankDeficiencyError):
            fit_ols(np.ones((2, 3)), np.zeros(2), ["a", "b", "c"])

    def test_saturated_fit_rejected(self):
        X = np.column_stack([np.ones(2), [0.0, 1.0]])
        with pytest.raises(NumericalError):
            fit_ols(X, np.array([1.0, 2.0]), ["const", "x"])

    def test_non_finite_inputs_rejected(self):
        X = np.ones((4, 1))
        y = np.array([1.0, np.nan, 2.0, 3.0])
        with pytest.raises(NumericalError):
            fit_ols(X, y, ["const"])
        X2 = np.column_stack([np.ones(4), [1.0, np.inf, 2.0, 3.0]])
        with pytest.raises(NumericalError):
            fit_ols(X2, np.ones(4), ["const", "x"])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(NumericalError):
            fit_ols(np.ones((4, 1)), np.ones(3), ["const"])
        with pytest.raises(NumericalError):
            fit_ols(np.ones((4, 1)), np.ones(4), ["a", "b"])
