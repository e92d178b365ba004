import numpy as np
import pytest

from olle.analyze.regression import (
    GEO_REFERENCE,
    RegressionSpec,
    build_design,
    fit_gap_regression,
    marginal_effects,
)
from olle.calibrate import orq_apply, orq_fit
from olle.errors import ConfigError, DataError
from olle.ols import fit_ols


def no_transform(*variables):
    return {v: "none" for v in variables}


def toy_data(n=12, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    countries = [f"C{i:02d}" for i in range(n)]
    a = rng.normal(size=n)
    b = rng.normal(size=n)
    gap = 1.0 + 2.0 * a - 3.0 * b + 0.5 * a * b + noise * rng.normal(size=n)
    data = {
        "gap": dict(zip(countries, gap)),
        "a": dict(zip(countries, a)),
        "b": dict(zip(countries, b)),
    }
    return countries, data


class TestRegressionSpec:
    def test_roundtrip_through_dict(self):
        spec = RegressionSpec(
            dv="gap",
            ivs=("olle", "civic"),
            interactions=(("olle", "civic"),),
            geo_controls=True,
            transforms={"civic": "log"},
        )
        assert RegressionSpec.from_dict(spec.to_dict()) == spec

    def test_default_transform_is_ordered_quantile(self):
        spec = RegressionSpec(dv="gap", ivs=("olle",))
        assert spec.transform_of("olle") == "orq"
        assert spec.transform_of("gap") == "orq"

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(dv="", ivs=("a",)),
            dict(dv="gap", ivs=()),
            dict(dv="gap", ivs=("a",), interactions=(("a", "b"),)),
            dict(dv="gap", ivs=("a",), transforms={"a": "standardize"}),
            dict(dv="gap", ivs=("a",), transforms={"mystery": "log"}),
        ],
    )
    def test_invalid_specs_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            RegressionSpec(**kwargs)

    def test_malformed_dict_rejected(self):
        with pytest.raises(ConfigError):
            RegressionSpec.from_dict({"ivs": ["a"]})
        with pytest.raises(ConfigError):
            RegressionSpec.from_dict({"dv": "gap", "ivs": ["a"], "interactions": [["a"]]})


class TestBuildDesign:
    def test_listwise_deletion_drops_incomplete_countries(self):
        countries, data = toy_data(8)
        del data["a"]["C03"]
        data["b"]["C05"] = float("nan")
        spec = RegressionSpec(dv="gap", ivs=("a", "b"), transforms=no_transform("gap", "a", "b"))
        X, y, names, kept, transformed, ref = build_design(spec, data)
        assert kept == sorted(set(countries) - {"C03", "C05"})
        assert X.shape == (6, 3)
        assert ref is None

    def test_transforms_apply_before_interaction_products(self):
        countries, data = toy_data(10, seed=2)
        spec = RegressionSpec(dv="gap", ivs=("a", "b"), interactions=(("a", "b"),))
        X, y, names, kept, transformed, _ = build_design(spec, data)
        ta = orq_fit([data["a"][c] for c in kept])
        tb = orq_fit([data["b"][c] for c in kept])
        j = names.index("a:b")
        for i, c in enumerate(kept):
            ga = float(orq_apply(ta, data["a"][c]))
            gb = float(orq_apply(tb, data["b"][c]))
            assert X[i, j] == pytest.approx(ga * gb, rel=1e-12)
            assert transformed["a"][c] == pytest.approx(ga, rel=1e-12)

    def test_log_transform_and_validation(self):
        countries, data = toy_data(8)
        data["a"] = {c: abs(v) + 0.5 for c, v in data["a"].items()}
        spec = RegressionSpec(
            dv="gap", ivs=("a",), transforms={"gap": "none", "a": "log"}
        )
        X, y, names, kept, transformed, _ = build_design(spec, data)
        for c in kept:
            assert transformed["a"][c] == pytest.approx(np.log(data["a"][c]), rel=1e-12)
        data["a"]["C00"] = -1.0
        with pytest.raises(DataError):
            build_design(spec, data)

    def test_geo_dummies_use_named_reference_when_present(self):
        countries, data = toy_data(9)
        groups = {}
        for i, c in enumerate(sorted(countries)):
            groups[c] = [GEO_REFERENCE, "Europe", "Asia"][i % 3]
        spec = RegressionSpec(
            dv="gap", ivs=("a",), geo_controls=True, transforms=no_transform("gap", "a")
        )
        X, y, names, kept, _, ref = build_design(spec, data, groups)
        assert ref == GEO_REFERENCE
        assert "geo[Europe]" in names and "geo[Asia]" in names
        assert f"geo[{GEO_REFERENCE}]" not in names
        j = names.index("geo[Europe]")
        for i, c in enumerate(kept):
            assert X[i, j] == (1.0 if groups[c] == "Europe" else 0.0)

    def test_geo_reference_falls_back_alphabetically(self):
        countries, data = toy_data(8)
        groups = {c: ("Europe" if i % 2 else "Asia") for i, c in enumerate(countries)}
        spec = RegressionSpec(
            dv="gap", ivs=("a",), geo_controls=True, transforms=no_transform("gap", "a")
        )
        *_, names, kept, _, ref = (v for v in build_design(spec, data, groups))
        assert ref == "Asia"
        assert "geo[Europe]" in names and "geo[Asia]" not in names

    def test_geo_controls_require_mapping(self):
        _, data = toy_data(6)
        spec = RegressionSpec(dv="gap", ivs=("a",), geo_controls=True)
        with pytest.raises(ConfigError):
            build_design(spec, data)

    def test_unknown_variable_rejected(self):
        _, data = toy_data(6)
        spec = RegressionSpec(dv="gap", ivs=("mystery",))
        with pytest.raises(ConfigError):
            build_design(spec, data)

    def test_too_few_complete_rows_rejected(self):
        _, data = toy_data(4)
        for c in ("C00", "C01"):
            del data["a"][c]
        spec = RegressionSpec(dv="gap", ivs=("a",), transforms=no_transform("gap", "a"))
        with pytest.raises(DataError):
            build_design(spec, data)


class TestFitGapRegression:
    def test_noiseless_recovery_with_interaction(self):
        countries, data = toy_data(12)
        spec = RegressionSpec(
            dv="gap",
            ivs=("a", "b"),
            interactions=(("a", "b"),),
            transforms=no_transform("gap", "a", "b"),
        )
        report = fit_gap_regression(spec, data)
        coefs = dict(zip(report.names, report.ols.coef))
        assert coefs["intercept"] == pytest.approx(1.0, abs=1e-9)
        assert coefs["a"] == pytest.approx(2.0, abs=1e-9)
        assert coefs["b"] == pytest.approx(-3.0, abs=1e-9)
        assert coefs["a:b"] == pytest.approx(0.5, abs=1e-9)
        assert report.loo_rmse == pytest.approx(0.0, abs=1e-8)
        assert report.loo_skipped == 0

    def test_matches_direct_ols_on_the_same_design(self):
        countries, data = toy_data(15, seed=5, noise=0.3)
        spec = RegressionSpec(dv="gap", ivs=("a", "b"), interactions=(("a", "b"),))
        report = fit_gap_regression(spec, data)
        X, y, names, *_ = build_design(spec, data)
        direct = fit_ols(X, y, names)
        np.testing.assert_allclose(report.ols.coef, direct.coef, rtol=1e-12)
        rows = report.coefficients()
        assert [r["name"] for r in rows] == names
        ci = direct.conf_int()
        for j, row in enumerate(rows):
            assert row["ci_low"] == pytest.approx(ci[j, 0], rel=1e-12)
            assert row["ci_high"] == pytest.approx(ci[j, 1], rel=1e-12)

    def test_singleton_geo_group_fold_is_skipped_not_fatal(self):
        countries, data = toy_data(10, seed=7, noise=0.2)
        groups = {c: ("Europe" if i % 2 else "Asia") for i, c in enumerate(countries)}
        groups["C09"] = "Oceania"  # sole member; its fold zeroes the dummy
        spec = RegressionSpec(
            dv="gap", ivs=("a",), geo_controls=True, transforms=no_transform("gap", "a")
        )
        report = fit_gap_regression(spec, data, groups)
        assert report.loo_skipped == 1
        assert report.loo_rmse is not None
        assert report.stats()["loo_skipped"] == 1

    def test_stats_payload_shape(self):
        countries, data = toy_data(12, seed=3, noise=0.4)
        spec = RegressionSpec(dv="gap", ivs=("a", "b"))
        stats = fit_gap_regression(spec, data).stats()
        assert stats["n_obs"] == 12
        assert stats["f_df"] == [2, 9]
        assert 0.0 <= stats["r2"] <= 1.0
        assert stats["loo_rmse"] > 0.0


class TestMarginalEffects:
    def build_report(self):
        countries, data = toy_data(14, seed=9, noise=0.3)
        spec = RegressionSpec(
            dv="gap",
            ivs=("a", "b"),
            interactions=(("a", "b"),),
            transforms=no_transform("gap", "a", "b"),
        )
        return fit_gap_regression(spec, data)

    def test_effect_line_and_delta_method_se(self):
        report = self.build_report()
        coefs = dict(zip(report.names, report.ols.coef))
        rows = marginal_effects(report, ("a", "b"), grid=np.array([-1.0, 0.0, 2.0]))
        for row in rows:
            expected = coefs["a"] + coefs["a:b"] * row["b_level"]
            assert row["effect"] == pytest.approx(expected, rel=1e-12)
        at_zero = rows[1]
        ja = report.names.index("a")
        assert at_zero["se"] == pytest.approx(
            float(np.sqrt(report.ols.cov[ja, ja])), rel=1e-12
        )

    def test_se_matches_monte_carlo_resampling(self):
        report = self.build_report()
        ja = report.names.index("a")
        jab = report.names.index("a:b")
        idx = [ja, jab]
        cov = report.ols.cov[np.ix_(idx, idx)]
        mean = report.ols.coef[idx]
        rng = np.random.default_rng(0)
        draws = rng.multivariate_normal(mean, cov, size=400_000)
        for level in (-1.5, 0.7):
            effects = draws[:, 0] + draws[:, 1] * level
            (row,) = marginal_effects(report, ("a", "b"), grid=np.array([level]))
            assert row["se"] == pytest.approx(effects.std(ddof=1), rel=0.01)

    def test_default_grid_spans_transformed_b(self):
        report = self.build_report()
        rows = marginal_effects(report, ("a", "b"))
        levels = [r["b_level"] for r in rows]
        b_vals = [report.transformed["b"][c] for c in report.countries]
        assert len(rows) == 11
        assert levels[0] == pytest.approx(min(b_vals))
        assert levels[-1] == pytest.approx(max(b_vals))

    def test_reversed_pair_finds_the_interaction(self):
        report = self.build_report()
        rows = marginal_effects(report, ("b", "a"), grid=np.array([0.0]))
        jb = report.names.index("b")
        assert rows[0]["effect"] == pytest.approx(report.ols.coef[jb], rel=1e-12)

    def test_missing_interaction_rejected(self):
        countries, data = toy_data(10)
        spec = RegressionSpec(dv="gap", ivs=("a", "b"))
        report = fit_gap_regression(spec, data)
        with pytest.raises(ConfigError):
            marginal_effects(report, ("a", "b"))
