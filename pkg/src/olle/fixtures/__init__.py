"""Shipped data assets: curve fixture parameters, the geographic-group
mapping, and reference coefficient tables for serializer checks.

Curves ship as family parameters rather than point dumps; materialize
them with ``fixture_curve`` / ``planted_fixture_curve`` or from the
command line via ``python -m olle.fixtures OUTDIR``.
"""
from __future__ import annotations

import csv
import json
from importlib import resources

from ..errors import ConfigError, DataError
from ..lexicon.curves import PopularityCurve
from ..synth import planted_curve


def _read_text(name: str) -> str:
    try:
        return (resources.files(__package__) / name).read_text(encoding="utf-8")
    except (FileNotFoundError, OSError) as exc:
        raise DataError(f"missing packaged fixture {name}: {exc}") from exc


def load_curve_params() -> dict[str, dict]:
    """Per-language planted-curve parameters and target elbows."""
    return json.loads(_read_text("curve_params.json"))["languages"]


def load_planted_curves() -> list[dict]:
    """200 randomized elbow-recovery curve parameter sets."""
    return json.loads(_read_text("planted_curves.json"))["curves"]


def load_geo_groups() -> dict[str, str]:
    """Country code -> collapsed geographic group (5 categories)."""
    rows = csv.reader(
        line
        for line in _read_text("geo_groups.csv").splitlines()
        if line.strip() and not line.startswith("#") and not line.startswith("country,")
    )
    return {row[0]: row[-1] for row in rows}


def load_reference_coefficients(name: str) -> dict:
    """Reference coefficient tables ('calibration' or 'gap_regression')."""
    if name not in ("calibration", "gap_regression"):
        raise ConfigError(f"unknown reference table: {name!r}")
    return json.loads(_read_text(f"reference_{name}.json"))


def fixture_curve(language: str) -> tuple[PopularityCurve, dict]:
    """Materialize one shipped language fixture curve with its targets."""
    params = load_curve_params()
    if language not in params:
        raise ConfigError(f"no fixture curve for language {language!r}")
    p = params[language]
    curve, _ = planted_curve(
        p["rank_max"],
        p["k0"],
        p["k1"],
        params={k: p[k] for k in ("corner", "tail_slope", "shoulder", "achieved_k0", "achieved_k1")},
        language=language,
    )
    return curve, p


def planted_fixture_curve(entry: dict) -> PopularityCurve:
    """Materialize one elbow-recovery curve from its parameter record."""
    curve, _ = planted_curve(
        entry["rank_max"],
        entry["k0"],
        entry["k1"],
        noise_sigma=entry["noise_sigma"],
        seed=tuple(entry["noise_seed"]),
        params={
            k: entry[k]
            for k in ("corner", "tail_slope", "shoulder", "achieved_k0", "achieved_k1")
        },
        language=f"p{entry['id']:03d}",
    )
    return curve
