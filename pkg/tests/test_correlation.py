import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from olle.analyze.correlation import spearman_bootstrap
from olle.errors import DataError, NumericalError


def brute_force_exact_p(x, y):
    """All n! permutations of the y ranks; two-sided tail by |rho|."""
    n = len(x)
    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    observed = stats.spearmanr(x, y).statistic
    hits = total = 0
    for perm in itertools.permutations(range(n)):
        rho = stats.spearmanr(rx, ry[list(perm)]).statistic
        total += 1
        if abs(rho) >= abs(observed) - 1e-12:
            hits += 1
    return hits / total


class TestPointEstimate:
    def test_matches_scipy_spearman(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.normal(size=15)
            y = rng.normal(size=15)
            report = spearman_bootstrap(x, y, replicates=0)
            assert report.rho == pytest.approx(
                stats.spearmanr(x, y).statistic, abs=1e-12
            )

    def test_perfect_monotone_association(self):
        x = np.array([1.0, 2.0, 5.0, 9.0])
        report = spearman_bootstrap(x, np.exp(x), replicates=0)
        assert report.rho == pytest.approx(1.0)
        report = spearman_bootstrap(x, -np.sqrt(x), replicates=0)
        assert report.rho == pytest.approx(-1.0)

    @settings(max_examples=40, deadline=None)
    @given(
        data=st.lists(
            st.tuples(
                st.integers(min_value=-1000, max_value=1000),
                st.integers(min_value=-1000, max_value=1000),
            ),
            min_size=4,
            max_size=25,
            unique_by=(lambda t: t[0], lambda t: t[1]),
        )
    )
    def test_invariant_under_monotone_maps(self, data):
        x = np.array([a / 10.0 for a, _ in data])
        y = np.array([b / 10.0 for _, b in data])
        base = spearman_bootstrap(x, y, replicates=0)
        mapped = spearman_bootstrap(np.exp(x / 50.0), y**3, replicates=0)
        assert mapped.rho == pytest.approx(base.rho, abs=1e-9)


class TestExactP:
    @pytest.mark.parametrize("n", [4, 5, 6, 7])
    def test_matches_brute_force_permutations(self, n):
        rng = np.random.default_rng(n)
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        report = spearman_bootstrap(x, y, replicates=0)
        assert report.p_method == "exact"
        assert report.p_value == pytest.approx(brute_force_exact_p(x, y), abs=1e-12)

    def test_perfect_correlation_tail_probability(self):
        # only the 2 extreme permutations of 5 reach |rho| = 1
        x = np.arange(5.0)
        report = spearman_bootstrap(x, 2.0 * x + 1.0, replicates=0)
        import math

        assert report.p_value == pytest.approx(2.0 / math.factorial(5), abs=1e-15)

    def test_exact_used_up_to_the_cutoff(self):
        rng = np.random.default_rng(1)
        report = spearman_bootstrap(rng.normal(size=12), rng.normal(size=12), replicates=0)
        assert report.p_method == "exact"

    def test_t_approx_beyond_cutoff(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=13)
        y = rng.normal(size=13)
        report = spearman_bootstrap(x, y, replicates=0)
        assert report.p_method == "t-approx"
        rho = report.rho
        t = rho * np.sqrt(11 / (1 - rho * rho))
        assert report.p_value == pytest.approx(2 * stats.t.sf(abs(t), 11), rel=1e-12)

    def test_ties_force_t_approx(self):
        x = np.array([1.0, 1.0, 2.0, 3.0, 4.0])
        y = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        report = spearman_bootstrap(x, y, replicates=0)
        assert report.p_method == "t-approx"

    def test_exact_p_is_a_valid_tail_probability(self):
        rng = np.random.default_rng(3)
        for n in (4, 6, 8):
            x = rng.normal(size=n)
            y = rng.normal(size=n)
            report = spearman_bootstrap(x, y, replicates=0)
            assert 0.0 < report.p_value <= 1.0


class TestBootstrap:
    def test_deterministic_in_seed(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=20)
        y = x + rng.normal(size=20)
        a = spearman_bootstrap(x, y, replicates=500, seed=42)
        b = spearman_bootstrap(x, y, replicates=500, seed=42)
        assert (a.ci_low, a.ci_high) == (b.ci_low, b.ci_high)
        c = spearman_bootstrap(x, y, replicates=500, seed=43)
        assert (a.ci_low, a.ci_high) != (c.ci_low, c.ci_high)

    def test_interval_brackets_the_estimate(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=40)
        y = 0.8 * x + 0.3 * rng.normal(size=40)
        report = spearman_bootstrap(x, y, replicates=1000, seed=0)
        assert report.ci_low <= report.rho <= report.ci_high
        assert report.ci_low > 0.0  # strong positive association

    def test_zero_replicates_skip_interval(self):
        report = spearman_bootstrap([1.0, 2.0, 3.0], [1.0, 3.0, 2.0], replicates=0)
        assert report.ci_low is None and report.ci_high is None
        assert report.replicates == 0

    def test_interval_covers_null_under_independence(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=60)
        y = rng.normal(size=60)
        report = spearman_bootstrap(x, y, replicates=1000, seed=0)
        assert report.ci_low < 0.0 < report.ci_high


class TestDegenerateInputs:
    def test_constant_margin_rejected(self):
        with pytest.raises(NumericalError):
            spearman_bootstrap([1.0, 1.0, 1.0], [1.0, 2.0, 3.0], replicates=0)

    def test_too_small_sample_rejected(self):
        with pytest.raises(DataError):
            spearman_bootstrap([1.0, 2.0], [2.0, 1.0])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DataError):
            spearman_bootstrap([1.0, 2.0, 3.0], [1.0, 2.0])

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            spearman_bootstrap([1.0, 2.0, np.nan], [1.0, 2.0, 3.0])
