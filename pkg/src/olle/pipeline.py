"""Pipeline stages behind the CLI subcommands.

Each stage reads its inputs fresh from the paths in the config, writes
its artifacts under ``output_dir``, and returns a small summary dict
for the CLI to print. Stages communicate only through files, so any
stage can be re-run in isolation.

User-level values never leave process memory: aggregation happens
in-process and only thresholded group statistics are serialized.
"""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import report as rpt
from .aggregate import (
    aggregate_population,
    disaggregate_gender,
    disaggregate_region,
    disparity_eligible,
    exclude_heavy_posters,
    user_loff_stat,
    write_aggregates_csv,
)
from .analyze import (
    GenderGapRecord,
    RegionalDisparityRecord,
    RegressionSpec,
    UserValueSource,
    dominance_bias_check,
    fit_gap_regression,
    gender_gap,
    marginal_effects,
    regional_disparity,
    spearman_bootstrap,
    weighted_mean,
)
from .calibrate import (
    BenchmarkTable,
    OrqTransform,
    fit_calibration,
    loo_calibrate,
    orq_apply,
    orq_fit,
)
from .config import PipelineConfig, _parse_value
from .corpus import ingest_posts
from .errors import ConfigError, DataError, NumericalError
from .lexicon import (
    LoffRange,
    build_popularity_curve,
    detect_loff_range,
    parse_lexicon,
    read_curve_csv,
    write_curve_csv,
)
from .synth import SyntheticSpec, write_corpus

GAPS_SOURCES = ("posts", "aggregates")


# ---------------------------------------------------------------------------
# Shared loading helpers
# ---------------------------------------------------------------------------


def _load_lexicons(cfg: PipelineConfig) -> dict:
    lexicons = {}
    for language in cfg.languages:
        path = cfg.lexicons.get(language)
        if path is None:
            raise ConfigError(f"no lexicon configured for language {language!r}")
        lexicons[language] = parse_lexicon(path, language)
    return lexicons


def _ingest(cfg: PipelineConfig, lexicons: dict):
    if not cfg.posts:
        raise ConfigError("no post files configured (key: posts)")
    return ingest_posts(list(cfg.posts), cfg.filtering(), lexicons, cfg.languages)


def _load_ranges(path: str) -> dict[str, LoffRange]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise DataError(
            f"cannot read LoFF ranges at {path!r} (run detect-loff first): {exc}"
        ) from exc
    except ValueError as exc:
        raise DataError(f"malformed LoFF range file {path!r}: {exc}") from exc
    return {
        entry["language"]: LoffRange.from_dict(entry) for entry in obj.get("ranges", [])
    }


def _benchmark_table(cfg: PipelineConfig) -> BenchmarkTable:
    if cfg.benchmark is None:
        raise ConfigError("no benchmark file configured (key: benchmark)")
    return BenchmarkTable.from_csv(cfg.benchmark)


def _read_csv_rows(path: str) -> tuple[list[str], list[list[str]]]:
    """Header + data rows of one of our own CSVs, skipping # comments."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    except OSError as exc:
        raise DataError(f"cannot read {path!r}: {exc}") from exc
    if not rows:
        raise DataError(f"no rows in {path!r}")
    return rows[0], rows[1:]


def _load_geo_groups(path: str) -> dict[str, str]:
    """country -> group from a CSV whose last column is the group label."""
    header, rows = _read_csv_rows(path)
    if header[0] != "country":
        raise DataError(f"geo group file {path!r} must start with a country column")
    return {row[0]: row[-1] for row in rows}


def _load_population(cfg: PipelineConfig, bench: BenchmarkTable | None) -> dict[str, float]:
    if cfg.population is not None:
        header, rows = _read_csv_rows(cfg.population)
        if "country" not in header or "population" not in header:
            raise DataError("population CSV needs country and population columns")
        ci, pi = header.index("country"), header.index("population")
        return {row[ci]: float(row[pi]) for row in rows}
    return dict(bench.population) if bench else {}


def _user_stats(cfg: PipelineConfig, lexicons: dict, ranges: dict):
    """Ingest posts and score every user whose language has a range."""
    users, report = _ingest(cfg, lexicons)
    stats = []
    skipped_no_range = 0
    for summary in users.values():
        loff = ranges.get(summary.language)
        if loff is None:
            skipped_no_range += 1
            continue
        stats.append(user_loff_stat(summary, lexicons[summary.language], loff))
    if not stats:
        raise DataError("no users left after filtering; nothing to aggregate")
    kept = exclude_heavy_posters(stats, cfg.heavy_poster_quantile)
    return kept, report, {
        "n_users_scored": len(stats),
        "n_users_after_heavy_poster_exclusion": len(kept),
        "n_users_skipped_no_range": skipped_no_range,
    }


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

_SPEC_TUPLE_FIELDS = {
    "users_per_country": int,
    "posts_per_user": int,
    "tokens_per_post": int,
    "latent_range": float,
    "language_vocab_factors": float,
    "latents": float,
    "languages": str,
}


def _build_spec(overrides: list[str]) -> SyntheticSpec:
    valid = {f.name for f in SyntheticSpec.__dataclass_fields__.values()}
    kwargs = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value: {item!r}")
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in valid:
            raise ConfigError(f"unknown generator parameter: {key!r}")
        value = _parse_value(raw, 0)
        try:
            if key in _SPEC_TUPLE_FIELDS:
                cast = _SPEC_TUPLE_FIELDS[key]
                items = value if isinstance(value, list) else [value]
                kwargs[key] = tuple(cast(v) for v in items)
            elif key in ("n_countries", "vocab_size", "n_regions", "seed"):
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for generator parameter {key!r}: {exc}") from exc
    spec = SyntheticSpec(**kwargs)
    spec.validate()
    return spec


def _config_lines(outdir: str, spec: SyntheticSpec) -> list[str]:
    posts = os.path.join(outdir, "posts.jsonl")
    lines = [
        "# generated alongside the synthetic corpus; ready to run as-is",
        f'posts = ["{posts}"]',
        f'languages = [{", ".join(repr(l) for l in spec.languages)}]',
    ]
    for language in spec.languages:
        lines.append(f'lexicon.{language} = "{os.path.join(outdir, f"lexicon_{language}.txt")}"')
    lines += [
        f'benchmark = "{os.path.join(outdir, "benchmark.csv")}"',
        f'population = "{os.path.join(outdir, "population.csv")}"',
        f'geo_groups = "{os.path.join(outdir, "geo_groups.csv")}"',
        f'output_dir = "{os.path.join(outdir, "out")}"',
        f"seed = {spec.seed}",
    ]
    return lines


def cmd_synth(outdir: str, overrides: list[str] | None = None) -> dict:
    """Generate a synthetic corpus plus a ready-to-run config file."""
    spec = _build_spec(overrides or [])
    outdir = rpt.ensure_outdir(os.path.abspath(outdir))
    sim = write_corpus(spec, outdir)
    config_path = os.path.join(outdir, "olle.toml")
    with open(config_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(_config_lines(outdir, spec)) + "\n")
    return {
        "outdir": outdir,
        "config": config_path,
        "countries": len(sim.countries),
        "languages": list(spec.languages),
        "posts": int(sum(len(s.post_user) for s in sim.by_language.values())),
        "users": int(sum(s.n_users for s in sim.by_language.values())),
    }


# ---------------------------------------------------------------------------
# detect-loff
# ---------------------------------------------------------------------------


def cmd_detect_loff(cfg: PipelineConfig) -> dict:
    """Ingest posts, build per-language popularity curves, detect bands.

    Writes curve_{lang}.csv per language, loff_ranges.json, and
    ingest_report.json. A language whose detection fails is recorded
    with its failure status and the stage raises after writing, so the
    artifacts are inspectable.
    """
    lexicons = _load_lexicons(cfg)
    users, report = _ingest(cfg, lexicons)
    outdir = rpt.ensure_outdir(cfg.output_dir)
    chash, seed = cfg.config_hash(), cfg.seed
    header = (rpt.header_line(chash, seed),)

    by_language: dict[str, list] = {lang: [] for lang in cfg.languages}
    for summary in users.values():
        by_language[summary.language].append(summary)

    curves = []
    failures = []
    for language in cfg.languages:
        if not by_language[language]:
            failures.append({"language": language, "status": "no_users"})
            continue
        curve = build_popularity_curve(by_language[language], lexicons[language])
        write_curve_csv(curve, os.path.join(outdir, f"curve_{language}.csv"), header)
        curves.append(curve)

    def detect(curve):
        try:
            return detect_loff_range(curve, cfg.sensitivity, seed=seed)
        except NumericalError as exc:
            return {"language": curve.language, "status": str(exc)}

    jobs = min(cfg.effective_jobs(), max(1, len(curves)))
    if jobs > 1 and len(curves) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(detect, curves))
    else:
        results = [detect(c) for c in curves]

    ranges = [r for r in results if isinstance(r, LoffRange)]
    failures.extend(r for r in results if not isinstance(r, LoffRange))
    rpt.write_json(
        os.path.join(outdir, "loff_ranges.json"),
        {
            "ranges": [r.to_dict() for r in ranges],
            "failures": failures,
            "n_users": {lang: len(group) for lang, group in by_language.items() if group},
        },
        chash,
        seed,
    )
    rpt.write_json(os.path.join(outdir, "ingest_report.json"), report.to_dict(), chash, seed)

    detect_failures = [f for f in failures if f["status"] != "no_users"]
    if not ranges:
        raise DataError("no language yielded a LoFF range; check inputs and languages")
    if detect_failures:
        failed = ", ".join(f"{f['language']} ({f['status']})" for f in detect_failures)
        raise NumericalError(f"LoFF detection failed for: {failed}")
    return {
        "ranges": {r.language: (r.k0, r.k1) for r in ranges},
        "skipped": [f["language"] for f in failures],
        "outdir": outdir,
    }


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def _representative_language(cfg: PipelineConfig, aggs) -> dict[str, str]:
    """Per-country analysis language: configured, else most users."""
    sizes: dict[str, dict[str, int]] = {}
    for agg in aggs:
        if not agg.suppressed:
            sizes.setdefault(agg.country, {})[agg.language] = agg.n_users
    chosen = {}
    for country, langs in sizes.items():
        pick = cfg.representative_language.get(country)
        if pick is None:
            pick = max(sorted(langs), key=lambda l: langs[l])
        elif pick not in langs:
            raise ConfigError(
                f"representative language {pick!r} for {country} has no "
                f"unsuppressed aggregate"
            )
        chosen[country] = pick
    return chosen


def _serialize_transform(t: OrqTransform) -> dict:
    return {
        "values": [float(v) for v in t.values],
        "ranks": [float(r) for r in t.ranks],
        "n": t.n,
        "slope": t.slope,
        "lo_anchor": list(t.lo_anchor),
        "hi_anchor": list(t.hi_anchor),
    }


def _deserialize_transform(obj: dict) -> OrqTransform:
    return OrqTransform(
        values=np.asarray(obj["values"], dtype=float),
        ranks=np.asarray(obj["ranks"], dtype=float),
        n=int(obj["n"]),
        slope=float(obj["slope"]),
        lo_anchor=tuple(obj["lo_anchor"]),
        hi_anchor=tuple(obj["hi_anchor"]),
    )


def cmd_estimate(cfg: PipelineConfig) -> dict:
    """Aggregate user stats, normalize, calibrate, and write OLLE.

    Artifacts: aggregates.csv, olle.csv, model.json (the full fit plus
    the per-language normalizers, for downstream stages), metrics.json,
    and calibration.txt.
    """
    lexicons = _load_lexicons(cfg)
    ranges = _load_ranges(cfg.ranges_path())
    kept, report, counts = _user_stats(cfg, lexicons, ranges)
    outdir = rpt.ensure_outdir(cfg.output_dir)
    chash, seed = cfg.config_hash(), cfg.seed
    header = (rpt.header_line(chash, seed),)

    aggs = aggregate_population(kept, ("country", "language"), cfg.aggregation())
    write_aggregates_csv(
        aggs, os.path.join(outdir, "aggregates.csv"), ("country", "language"), header
    )
    n_suppressed = sum(1 for a in aggs if a.suppressed)
    if n_suppressed == len(aggs):
        raise DataError(
            f"all {len(aggs)} (country, language) groups fall below "
            f"min_group_size={cfg.min_group_size}; nothing to estimate"
        )

    rep = _representative_language(cfg, aggs)
    wbar = {
        (a.country, a.language): a.w_bar for a in aggs if not a.suppressed
    }
    bench = _benchmark_table(cfg)
    eligible = bench.eligible(cfg.internet_floor)

    in_benchmark = {c for c in rep if c in bench.rates}
    dropped_no_benchmark = sorted(set(rep) - in_benchmark)

    # Normalize w_bar within each representative language across every
    # country it covers; languages with a single country cannot be
    # rank-normalized and their countries drop out with a note.
    by_language: dict[str, list[str]] = {}
    for country in sorted(in_benchmark):
        by_language.setdefault(rep[country], []).append(country)
    x: dict[str, float] = {}
    transforms: dict[str, OrqTransform] = {}
    dropped_single_language = []
    for language, countries in sorted(by_language.items()):
        values = [wbar[(c, language)] for c in countries]
        if len(countries) < 2 or len(set(values)) < 2:
            dropped_single_language.extend(countries)
            continue
        transforms[language] = orq_fit(values)
        for country, value in zip(countries, values):
            x[country] = float(orq_apply(transforms[language], value))

    train = sorted(c for c in x if c in eligible)
    held_out = sorted(c for c in x if c not in eligible)
    if len(train) < 3:
        raise DataError(
            f"only {len(train)} countries usable for calibration "
            f"(need at least 3): check benchmark coverage and the internet floor"
        )
    y_transform = orq_fit([bench.rates[c] for c in train])
    y = {c: float(orq_apply(y_transform, bench.rates[c])) for c in train}
    lang_of = {c: rep[c] for c in x}

    rows, metrics = loo_calibrate(
        {c: x[c] for c in train}, y, {c: lang_of[c] for c in train}
    )
    model = fit_calibration(
        {c: x[c] for c in train}, y, {c: lang_of[c] for c in train}
    )
    lo, hi = metrics["rescale_bounds"]

    # Countries under the internet floor never enter training; they get
    # the full-fit prediction, clamped into the LOO rescale bounds, and
    # carry the flag because their estimate is not cross-validated.
    extra_rows = []
    for country in held_out:
        pred = model.predict(x[country], lang_of[country])
        olle = min(1.0, max(0.0, (pred - lo) / (hi - lo))) if hi > lo else 0.5
        extra_rows.append((country, lang_of[country], olle, True))

    olle_path = os.path.join(outdir, "olle.csv")
    with open(olle_path, "w", encoding="utf-8") as fh:
        fh.write(f"# {rpt.header_line(chash, seed)}\n")
        fh.write("country,language,raw,normalized,olle,loo_flag\n")
        all_rows = [
            (r.country, r.language, r.olle, r.loo_flag) for r in rows
        ] + extra_rows
        for country, language, olle, flag in sorted(all_rows):
            fh.write(
                f"{country},{language},{wbar[(country, language)]:.12g},"
                f"{x[country]:.12g},{olle:.12g},{str(flag).lower()}\n"
            )

    validation = spearman_bootstrap(
        np.array([r.loo_prediction for r in rows]),
        np.array([y[r.country] for r in rows]),
        replicates=cfg.replicates,
        seed=seed,
    )
    ci = model.ols.conf_int()
    coefficients = [
        {
            "name": name,
            "estimate": float(model.ols.coef[j]),
            "se": float(model.ols.se()[j]),
            "ci_low": float(ci[j, 0]),
            "ci_high": float(ci[j, 1]),
        }
        for j, name in enumerate(model.ols.names)
    ]
    stats = {
        "n_obs": model.ols.n_obs,
        "r2": model.ols.r2,
        "adj_r2": model.ols.adj_r2,
        "aic": model.ols.aic,
        "bic": model.ols.bic,
        "f_stat": model.ols.f_stat,
        "f_df": list(model.ols.f_df) if model.ols.f_df else None,
        "oos_spearman": metrics["oos_spearman"],
        "oos_rmse": metrics["oos_rmse"],
        "oos_r2": metrics["oos_r2"],
    }

    rpt.write_json(
        os.path.join(outdir, "model.json"),
        {
            "model": "population-calibration",
            "reference_language": model.reference_language,
            "beta": model.beta,
            "intercept": model.intercept,
            "alpha": model.alpha,
            "sigma_eps": model.sigma_eps,
            "coefficients": coefficients,
            "stats": stats,
            "rescale_bounds": [lo, hi],
            "representative_language": rep,
            "transforms": {l: _serialize_transform(t) for l, t in transforms.items()},
        },
        chash,
        seed,
    )
    rpt.write_json(
        os.path.join(outdir, "metrics.json"),
        {
            **counts,
            "n_groups": len(aggs),
            "n_groups_suppressed": n_suppressed,
            "n_countries": len(x),
            "n_countries_trained": len(train),
            "n_countries_below_internet_floor": len(held_out),
            "dropped_no_benchmark": dropped_no_benchmark,
            "dropped_single_country_language": sorted(dropped_single_language),
            "n_loo_flagged": metrics["n_loo_flagged"],
            "oos_spearman": metrics["oos_spearman"],
            "oos_rmse": metrics["oos_rmse"],
            "oos_r2": metrics["oos_r2"],
            "validation": {
                "rho": validation.rho,
                "ci": [validation.ci_low, validation.ci_high],
                "n": validation.n,
                "p_value": validation.p_value,
                "p_method": validation.p_method,
                "replicates": validation.replicates,
            },
            "ingest": report.to_dict(),
        },
        chash,
        seed,
    )
    rpt.write_text(
        os.path.join(outdir, "calibration.txt"),
        rpt.coefficient_table_lines("Population calibration", coefficients, stats),
        chash,
        seed,
    )
    if not cfg.drop_intermediates:
        for group_by, name in (
            (("country", "language", "gender"), "gender_aggregates.csv"),
            (("country", "language", "region"), "region_aggregates.csv"),
        ):
            extra = aggregate_population(
                [s for s in kept if group_by[-1] != "region" or s.region is not None],
                group_by,
                cfg.aggregation(),
            )
            write_aggregates_csv(extra, os.path.join(outdir, name), group_by, header)
    return {
        "outdir": outdir,
        "countries": len(x),
        "oos_spearman": metrics["oos_spearman"],
        "validation_ci": [validation.ci_low, validation.ci_high],
    }


# ---------------------------------------------------------------------------
# gaps
# ---------------------------------------------------------------------------


def _load_model(outdir: str) -> dict:
    path = os.path.join(outdir, "model.json")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path!r} (run estimate first): {exc}") from exc


def _read_olle_csv(outdir: str) -> list[dict]:
    header, rows = _read_csv_rows(os.path.join(outdir, "olle.csv"))
    out = []
    for row in rows:
        rec = dict(zip(header, row))
        for key in ("raw", "normalized", "olle"):
            rec[key] = float(rec[key])
        rec["loo_flag"] = rec["loo_flag"] == "true"
        out.append(rec)
    return out


def _regional_olle(model_obj: dict, region_aggs) -> dict[str, dict[str, float]]:
    """Regional OLLE via the country model: normalize regional w_bar
    with the country-level transform, predict, rescale with the stored
    bounds (clamped to [0, 1])."""
    rep = model_obj["representative_language"]
    transforms = {
        l: _deserialize_transform(t) for l, t in model_obj["transforms"].items()
    }
    lo, hi = model_obj["rescale_bounds"]
    span = hi - lo
    alpha = model_obj["alpha"]
    reference = model_obj["reference_language"]
    eligible = disparity_eligible(region_aggs)
    out: dict[str, dict[str, float]] = {}
    for agg in region_aggs:
        if agg.suppressed or (agg.country, agg.language) not in eligible:
            continue
        if rep.get(agg.country) != agg.language or agg.language not in transforms:
            continue
        x = float(orq_apply(transforms[agg.language], agg.w_bar))
        pred = (
            model_obj["intercept"]
            + model_obj["beta"] * x
            + (alpha.get(agg.language, 0.0) if agg.language != reference else 0.0)
        )
        olle = min(1.0, max(0.0, (pred - lo) / span)) if span > 0 else 0.5
        out.setdefault(agg.country, {})[agg.region] = olle
    return out


def _write_gap_csv(records: list[GenderGapRecord], path: str, header: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {header}\n")
        fh.write(
            "country,language,raw_gap,z_gap,ci_low,ci_high,"
            "significance,bootstrap_unavailable\n"
        )
        for r in records:
            ci_lo = "" if r.ci_low is None else f"{r.ci_low:.12g}"
            ci_hi = "" if r.ci_high is None else f"{r.ci_high:.12g}"
            fh.write(
                f"{r.country},{r.language},{r.raw_gap:.12g},{r.z_gap:.12g},"
                f"{ci_lo},{ci_hi},{r.significance},"
                f"{str(r.bootstrap_unavailable).lower()}\n"
            )


def _write_disparity_csv(
    records: list[RegionalDisparityRecord], path: str, header: str
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {header}\n")
        fh.write("country,disparity,n_regions\n")
        for r in records:
            fh.write(f"{r.country},{r.disparity:.12g},{r.n_regions}\n")


def _covariate_table(path: str) -> dict[str, dict[str, float]]:
    """Country-keyed columns from a covariates CSV (country + floats)."""
    header, rows = _read_csv_rows(path)
    if header[0] != "country":
        raise DataError(f"covariates file {path!r} must start with a country column")
    table: dict[str, dict[str, float]] = {name: {} for name in header[1:]}
    for row in rows:
        for name, cell in zip(header[1:], row[1:]):
            if cell.strip():
                try:
                    table[name][row[0]] = float(cell)
                except ValueError as exc:
                    raise DataError(f"covariate {name} for {row[0]}: {exc}") from exc
    return table


def cmd_gaps(cfg: PipelineConfig) -> dict:
    """Gender gaps, regional disparity, dominance check, regressions.

    Needs the model.json written by estimate. With gaps_source=posts the
    user bootstrap runs in memory off the re-ingested corpus; with
    gaps_source=aggregates no user values exist, so gaps carry no CIs
    and are flagged.
    """
    if cfg.gaps_source not in GAPS_SOURCES:
        raise ConfigError(
            f"gaps_source must be one of {GAPS_SOURCES}, got {cfg.gaps_source!r}"
        )
    lexicons = _load_lexicons(cfg)
    ranges = _load_ranges(cfg.ranges_path())
    outdir = rpt.ensure_outdir(cfg.output_dir)
    model_obj = _load_model(outdir)
    olle_rows = _read_olle_csv(outdir)
    kept, _, counts = _user_stats(cfg, lexicons, ranges)
    chash, seed = cfg.config_hash(), cfg.seed
    header = rpt.header_line(chash, seed)
    warnings = []

    gender_aggs = disaggregate_gender(kept, cfg.aggregation())
    source = None
    if cfg.gaps_source == "posts":
        source = UserValueSource()
        for stat in kept:
            if stat.gender in ("female", "male"):
                source.add(stat.country, stat.language, stat.gender, float(stat.w_u))
    gaps = gender_gap(
        gender_aggs, source, replicates=cfg.replicates, seed=seed
    )
    _write_gap_csv(gaps, os.path.join(outdir, "gender_gaps.csv"), header)
    if not gaps:
        warnings.append("no country meets the gender-gap eligibility floor")

    region_aggs = disaggregate_region(kept, cfg.aggregation())
    regional = _regional_olle(model_obj, region_aggs)
    disparity = regional_disparity(regional)
    _write_disparity_csv(
        disparity, os.path.join(outdir, "regional_disparity.csv"), header
    )
    if not disparity:
        warnings.append("no country meets the regional-disparity eligibility floor")

    # Dominance check: does the representative language's user share
    # predict the estimate or its regional spread?
    rep = model_obj["representative_language"]
    country_users: dict[str, int] = {}
    rep_users: dict[str, int] = {}
    for stat in kept:
        country_users[stat.country] = country_users.get(stat.country, 0) + 1
        if rep.get(stat.country) == stat.language:
            rep_users[stat.country] = rep_users.get(stat.country, 0) + 1
    olle_by_country = {r["country"]: r["olle"] for r in olle_rows}
    disparity_by_country = {r.country: r.disparity for r in disparity}
    dom_rows = [
        {
            "country": c,
            "share": rep_users.get(c, 0) / country_users[c],
            "olle": olle_by_country[c],
            "disparity": disparity_by_country.get(c),
        }
        for c in sorted(olle_by_country)
        if c in country_users
    ]
    dominance = dominance_bias_check(dom_rows, replicates=cfg.replicates, seed=seed)
    rpt.write_json(os.path.join(outdir, "dominance.json"), dominance, chash, seed)

    bench = BenchmarkTable.from_csv(cfg.benchmark) if cfg.benchmark else None
    population = _load_population(cfg, bench)
    gap_by_country = {g.country: g.z_gap for g in gaps}
    summary = {
        "n_gap_countries": len(gaps),
        "n_female_favoring": sum(1 for g in gaps if g.significance == "female_favoring"),
        "n_male_favoring": sum(1 for g in gaps if g.significance == "male_favoring"),
        "n_disparity_countries": len(disparity),
        "mean_gap": float(np.mean([g.z_gap for g in gaps])) if gaps else None,
        "mean_disparity": (
            float(np.mean([r.disparity for r in disparity])) if disparity else None
        ),
    }
    if population and gaps:
        summary["population_weighted_gap"] = weighted_mean(gap_by_country, population)
    if population and disparity:
        summary["population_weighted_disparity"] = weighted_mean(
            disparity_by_country, population
        )
    rpt.write_json(os.path.join(outdir, "gaps_summary.json"), summary, chash, seed)

    regressions = []
    if cfg.regression_specs is not None:
        data: dict[str, dict[str, float]] = {
            "gap": gap_by_country,
            "raw_gap": {g.country: g.raw_gap for g in gaps},
            "olle": olle_by_country,
            "disparity": disparity_by_country,
        }
        if bench:
            data["benchmark"] = dict(bench.rates)
        if cfg.covariates is not None:
            for name, column in _covariate_table(cfg.covariates).items():
                data[name] = column
        geo = _load_geo_groups(cfg.geo_groups) if cfg.geo_groups else None
        regressions = _run_regressions(cfg, data, geo, outdir, chash, seed)

    return {
        "outdir": outdir,
        "gap_countries": len(gaps),
        "disparity_countries": len(disparity),
        "regressions": regressions,
        "warnings": warnings,
    }


def _load_regression_specs(path: str) -> list[RegressionSpec]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read regression specs: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"malformed regression spec JSON: {exc}") from exc
    specs = obj if isinstance(obj, list) else [obj]
    return [RegressionSpec.from_dict(entry) for entry in specs]


def _run_regressions(cfg, data, geo, outdir, chash, seed) -> list[str]:
    written = []
    for i, spec in enumerate(_load_regression_specs(cfg.regression_specs), start=1):
        fit = fit_gap_regression(spec, data, geo)
        payload = {
            "model": f"regression-{i}",
            "spec": spec.to_dict(),
            "reference_group": fit.reference_group,
            "n_countries": len(fit.countries),
            "countries": fit.countries,
            "coefficients": fit.coefficients(),
            "stats": fit.stats(),
        }
        if spec.interactions:
            payload["marginal_effects"] = {
                f"{a}:{b}": marginal_effects(fit, (a, b)) for a, b in spec.interactions
            }
        base = os.path.join(outdir, f"regression_{i}")
        rpt.write_json(base + ".json", payload, chash, seed)
        rpt.write_text(
            base + ".txt",
            rpt.coefficient_table_lines(
                f"Regression {i}: {spec.dv} ~ {' + '.join(spec.ivs)}",
                fit.coefficients(),
                fit.stats(),
            ),
            chash,
            seed,
        )
        written.append(base + ".json")
    return written


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def cmd_report(cfg: PipelineConfig) -> dict:
    """Render figures and a text report from the written artifacts."""
    outdir = cfg.output_dir
    if not os.path.isdir(outdir):
        raise DataError(f"output directory {outdir!r} does not exist; run estimate first")
    chash, seed = cfg.config_hash(), cfg.seed
    figures = []
    lines = []

    ranges_path = cfg.ranges_path()
    ranges = _load_ranges(ranges_path) if os.path.exists(ranges_path) else {}
    for language, loff in sorted(ranges.items()):
        curve_path = os.path.join(outdir, f"curve_{language}.csv")
        if not os.path.exists(curve_path):
            continue
        curve = read_curve_csv(curve_path, language)
        fig_path = os.path.join(outdir, f"curve_{language}.png")
        rpt.fig_popularity_curve(curve, loff, fig_path)
        figures.append(fig_path)
        lines.append(
            f"{language}: LoFF band {loff.k0}-{loff.k1} "
            f"({loff.k0_kw:.1f}k-{loff.k1_kw:.1f}k)"
        )

    olle_path = os.path.join(outdir, "olle.csv")
    if not os.path.exists(olle_path):
        raise DataError(f"{olle_path!r} not found; run estimate first")
    olle_rows = _read_olle_csv(outdir)
    model_obj = _load_model(outdir)
    bench = BenchmarkTable.from_csv(cfg.benchmark) if cfg.benchmark else None

    lines.append("")
    lines.append(f"countries estimated: {len(olle_rows)}")
    stats = model_obj["stats"]
    annotation = None
    if stats.get("oos_spearman") is not None:
        rho_txt = rpt.fmt_estimate(stats["oos_spearman"])
        annotation = f"rho = {rho_txt}"
        metrics_path = os.path.join(outdir, "metrics.json")
        if os.path.exists(metrics_path):
            with open(metrics_path, "r", encoding="utf-8") as fh:
                metrics = json.load(fh)
            ci = metrics.get("validation", {}).get("ci")
            if ci and ci[0] is not None:
                annotation += f" ({rpt.fmt_ci(ci[0], ci[1])})"
        lines.append(f"out-of-sample Spearman: {annotation[6:]}")
    if bench:
        scatter = [
            {"olle": r["olle"], "benchmark": bench.rates[r["country"]]}
            for r in olle_rows
            if r["country"] in bench.rates
        ]
        if scatter:
            fig_path = os.path.join(outdir, "olle_vs_benchmark.png")
            rpt.fig_olle_vs_benchmark(scatter, fig_path, annotation)
            figures.append(fig_path)

    lines.append("")
    lines.extend(
        rpt.coefficient_table_lines(
            "Population calibration", model_obj["coefficients"], stats
        )
    )

    gap_path = os.path.join(outdir, "gender_gaps.csv")
    if os.path.exists(gap_path):
        header, rows = _read_csv_rows(gap_path)
        records = [
            GenderGapRecord(
                country=r[0],
                language=r[1],
                raw_gap=float(r[2]),
                z_gap=float(r[3]),
                ci_low=float(r[4]) if r[4] else None,
                ci_high=float(r[5]) if r[5] else None,
                significance=r[6],
                bootstrap_unavailable=r[7] == "true",
            )
            for r in rows
        ]
        if records:
            fig_path = os.path.join(outdir, "gender_gaps.png")
            rpt.fig_gender_gaps(records, fig_path)
            figures.append(fig_path)
            n_sig = sum(1 for r in records if r.significance != "none")
            lines.append("")
            lines.append(
                f"gender gaps: {len(records)} countries, {n_sig} significant"
            )

    disparity_path = os.path.join(outdir, "regional_disparity.csv")
    if os.path.exists(disparity_path):
        header, rows = _read_csv_rows(disparity_path)
        records = [
            RegionalDisparityRecord(
                country=r[0], disparity=float(r[1]), n_regions=int(r[2])
            )
            for r in rows
        ]
        if records:
            fig_path = os.path.join(outdir, "regional_disparity.png")
            rpt.fig_regional_disparity(records, fig_path)
            figures.append(fig_path)
            lines.append(f"regional disparity: {len(records)} countries")

    for i in range(1, 100):
        path = os.path.join(outdir, f"regression_{i}.json")
        if not os.path.exists(path):
            break
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        lines.append("")
        lines.extend(
            rpt.coefficient_table_lines(
                f"Regression {i}: {payload['spec']['dv']}",
                payload["coefficients"],
                payload["stats"],
            )
        )

    report_path = os.path.join(outdir, "report.txt")
    rpt.write_text(report_path, lines, chash, seed)
    return {"report": report_path, "figures": figures}
