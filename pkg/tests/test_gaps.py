import statistics

import numpy as np
import pytest

from olle.aggregate import PopulationAggregate
from olle.analyze.gaps import (
    SIG_FEMALE,
    SIG_MALE,
    SIG_NONE,
    UserValueSource,
    dominance_bias_check,
    gender_gap,
    regional_disparity,
    weighted_mean,
)
from olle.calibrate import orq_apply, orq_fit
from olle.errors import DataError


def agg(country, gender, w_bar, language="en", suppressed=False):
    return PopulationAggregate(
        country=country,
        language=language,
        gender=gender,
        n_users=None if suppressed else 50,
        w_bar=None if suppressed else w_bar,
        suppressed=suppressed,
    )


def paired_aggs(means):
    """means: {country: (female_mean, male_mean)}"""
    rows = []
    for country, (f, m) in means.items():
        rows.append(agg(country, "female", f))
        rows.append(agg(country, "male", m))
    return rows


def filled_source(means, spread=0.01, n=80, seed=0):
    rng = np.random.default_rng(seed)
    src = UserValueSource()
    for country, (f, m) in means.items():
        for value in f + spread * rng.standard_normal(n):
            src.add(country, "en", "female", value)
        for value in m + spread * rng.standard_normal(n):
            src.add(country, "en", "male", value)
    return src


MEANS = {
    "AA": (1.30, 1.00),
    "BB": (0.90, 0.95),
    "CC": (1.10, 1.12),
    "DD": (0.70, 0.72),
}


class TestGenderGap:
    def test_raw_gap_is_orq_difference_per_language(self):
        records = gender_gap(paired_aggs(MEANS), None, significance_null="cross_country")
        pooled = [v for pair in MEANS.values() for v in pair]
        t = orq_fit(pooled)
        for rec in records:
            f, m = MEANS[rec.country]
            expected = float(orq_apply(t, f) - orq_apply(t, m))
            assert rec.raw_gap == pytest.approx(expected, rel=1e-12)

    def test_z_gaps_are_standardized(self):
        records = gender_gap(paired_aggs(MEANS), None, significance_null="cross_country")
        z = [r.z_gap for r in records]
        raw = [r.raw_gap for r in records]
        assert np.mean(z) == pytest.approx(0.0, abs=1e-12)
        assert np.std(z, ddof=1) == pytest.approx(1.0, rel=1e-12)
        expected = (np.array(raw) - np.mean(raw)) / np.std(raw, ddof=1)
        np.testing.assert_allclose(z, expected, rtol=1e-12)

    def test_normalizations_are_separate_per_language(self):
        rows = paired_aggs({"AA": (1.3, 1.0), "BB": (0.9, 0.95)})
        rows += [
            agg("CC", "female", 5.0, language="ru"),
            agg("CC", "male", 4.0, language="ru"),
            agg("DD", "female", 3.0, language="ru"),
            agg("DD", "male", 6.0, language="ru"),
        ]
        records = gender_gap(rows, None, significance_null="cross_country")
        t_ru = orq_fit([5.0, 4.0, 3.0, 6.0])
        by_country = {r.country: r for r in records}
        assert by_country["CC"].language == "ru"
        assert by_country["CC"].raw_gap == pytest.approx(
            float(orq_apply(t_ru, 5.0) - orq_apply(t_ru, 4.0)), rel=1e-12
        )

    def test_countries_missing_a_gender_are_excluded(self):
        rows = paired_aggs(MEANS) + [agg("EE", "female", 1.0)]
        records = gender_gap(rows, None, significance_null="cross_country")
        assert sorted(r.country for r in records) == ["AA", "BB", "CC", "DD"]

    def test_suppressed_group_disqualifies_the_country(self):
        rows = paired_aggs(MEANS) + [
            agg("EE", "female", 1.0),
            agg("EE", "male", None, suppressed=True),
        ]
        records = gender_gap(rows, None, significance_null="cross_country")
        assert "EE" not in {r.country for r in records}

    def test_planted_female_advantage_is_flagged(self):
        means = dict(MEANS)
        means["AA"] = (1.6, 1.0)  # wide separation, tight user spread
        records = gender_gap(
            paired_aggs(means), filled_source(means), replicates=400, seed=1
        )
        by_country = {r.country: r for r in records}
        assert by_country["AA"].significance == SIG_FEMALE
        assert by_country["AA"].ci_low > 0.0

    def test_planted_male_advantage_is_flagged(self):
        means = dict(MEANS)
        means["AA"] = (1.0, 1.6)
        records = gender_gap(
            paired_aggs(means), filled_source(means), replicates=400, seed=1
        )
        assert {r.country: r.significance for r in records}["AA"] == SIG_MALE

    def test_overlapping_groups_are_not_flagged(self):
        # genders share a mean within each country; wide user spread
        means = {"AA": (1.0, 1.0), "BB": (1.2, 1.2), "CC": (0.8, 0.8)}
        src = filled_source(means, spread=0.2, seed=3)
        records = gender_gap(paired_aggs(means), src, replicates=400, seed=2)
        assert all(r.significance == SIG_NONE for r in records)
        assert all(r.ci_low < 0.0 < r.ci_high for r in records)

    def test_missing_user_values_flagged_unavailable(self):
        src = filled_source({k: MEANS[k] for k in ("AA", "BB", "CC")})
        records = gender_gap(paired_aggs(MEANS), src, replicates=100)
        by_country = {r.country: r for r in records}
        assert by_country["DD"].bootstrap_unavailable
        assert by_country["DD"].ci_low is None
        assert not by_country["AA"].bootstrap_unavailable

    def test_no_user_source_means_no_intervals(self):
        records = gender_gap(paired_aggs(MEANS), None, replicates=100)
        assert all(r.bootstrap_unavailable for r in records)
        assert all(r.significance == SIG_NONE for r in records)

    def test_cross_country_null_flags_outlier_only(self):
        # within-country ties pin the null gaps at exactly 0, so the one
        # real separation carries all the cross-country variance
        means = {f"C{i}": (1.0 + 0.01 * i, 1.0 + 0.01 * i) for i in range(12)}
        means["XX"] = (2.0, 0.5)
        records = gender_gap(paired_aggs(means), None, significance_null="cross_country")
        by_country = {r.country: r for r in records}
        assert all(by_country[f"C{i}"].raw_gap == 0.0 for i in range(12))
        flagged = {r.country for r in records if r.significance != SIG_NONE}
        assert flagged == {"XX"}
        assert by_country["XX"].significance == SIG_FEMALE

    def test_bootstrap_deterministic_and_order_invariant(self):
        rows = paired_aggs(MEANS)
        src = filled_source(MEANS)
        a = gender_gap(rows, src, replicates=200, seed=5)
        b = gender_gap(list(reversed(rows)), src, replicates=200, seed=5)
        assert a == b
        c = gender_gap(rows, src, replicates=200, seed=6)
        assert any(
            (x.ci_low, x.ci_high) != (y.ci_low, y.ci_high) for x, y in zip(a, c)
        )

    def test_unknown_null_rejected(self):
        with pytest.raises(DataError):
            gender_gap(paired_aggs(MEANS), None, significance_null="bonferroni")

    def test_no_eligible_countries_yields_empty(self):
        assert gender_gap([agg("AA", "female", 1.0)], None) == []


class TestRegionalDisparity:
    def test_sample_sd_oracle(self):
        olles = {"AA": {"R1": 0.2, "R2": 0.5, "R3": 0.8}, "BB": {"R1": 0.4, "R2": 0.4}}
        records = regional_disparity(olles)
        by_country = {r.country: r for r in records}
        assert by_country["AA"].disparity == pytest.approx(
            statistics.stdev([0.2, 0.5, 0.8]), rel=1e-12
        )
        assert by_country["AA"].n_regions == 3
        assert by_country["BB"].disparity == pytest.approx(0.0, abs=1e-15)

    def test_single_region_country_skipped(self):
        records = regional_disparity({"AA": {"R1": 0.5}, "BB": {"R1": 0.1, "R2": 0.9}})
        assert [r.country for r in records] == ["BB"]

    def test_output_sorted_by_country(self):
        records = regional_disparity(
            {"ZZ": {"R1": 0.1, "R2": 0.2}, "AA": {"R1": 0.3, "R2": 0.4}}
        )
        assert [r.country for r in records] == ["AA", "ZZ"]


class TestWeightedMean:
    def test_population_weighting_oracle(self):
        values = {"AA": 0.2, "BB": 0.8}
        weights = {"AA": 3.0, "BB": 1.0}
        assert weighted_mean(values, weights) == pytest.approx((0.6 + 0.8) / 4.0)

    def test_countries_without_weights_are_ignored(self):
        assert weighted_mean({"AA": 0.5, "BB": 0.9}, {"AA": 2.0}) == pytest.approx(0.5)

    def test_zero_weights_do_not_count(self):
        with pytest.raises(DataError):
            weighted_mean({"AA": 0.5}, {"AA": 0.0})

    def test_disjoint_maps_rejected(self):
        with pytest.raises(DataError):
            weighted_mean({"AA": 0.5}, {"BB": 1.0})


class TestDominanceCheck:
    def test_monolingual_countries_excluded(self):
        rows = [
            {"country": "AA", "share": 1.0, "olle": 0.9},
            {"country": "BB", "share": 0.6, "olle": 0.5},
            {"country": "CC", "share": 0.7, "olle": 0.6},
        ]
        out = dominance_bias_check(rows)
        assert out["n_multilingual"] == 2
        assert {p[0] for p in out["share_vs_olle"]} == {"BB", "CC"}

    def test_small_samples_emit_pairs_without_correlation(self):
        rows = [
            {"country": "AA", "share": 0.5, "olle": 0.9},
            {"country": "BB", "share": 0.6, "olle": 0.5},
        ]
        out = dominance_bias_check(rows)
        assert out["rho_share_olle"] is None
        assert len(out["share_vs_olle"]) == 2

    def test_correlations_present_with_three_multilingual(self):
        rows = [
            {"country": c, "share": s, "olle": o, "disparity": d}
            for c, s, o, d in [
                ("AA", 0.5, 0.2, 0.30),
                ("BB", 0.6, 0.5, 0.20),
                ("CC", 0.7, 0.6, 0.10),
                ("DD", 0.8, 0.9, 0.05),
            ]
        ]
        out = dominance_bias_check(rows, replicates=200, seed=0)
        assert out["rho_share_olle"].rho == pytest.approx(1.0)
        assert out["rho_share_disparity"].rho == pytest.approx(-1.0)

    def test_missing_disparity_rows_drop_from_that_pairing_only(self):
        rows = [
            {"country": "AA", "share": 0.5, "olle": 0.2},
            {"country": "BB", "share": 0.6, "olle": 0.5, "disparity": 0.1},
            {"country": "CC", "share": 0.7, "olle": 0.6, "disparity": 0.2},
        ]
        out = dominance_bias_check(rows, replicates=0)
        assert len(out["share_vs_olle"]) == 3
        assert len(out["share_vs_disparity"]) == 2
