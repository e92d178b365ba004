"""Output serialization: provenance headers, table formatting, figures.

Every artifact starts with provenance (config hash, seed, tool
version): CSV and text files as a leading ``#`` comment, JSON files as
a ``_header`` object in first position. Estimates render with two
decimals and a proper minus sign; intervals as "lo–hi" with an en dash,
the style of the published supplementary tables.
"""
from __future__ import annotations

import json
import os

from . import __version__
from .errors import DataError

MINUS = "−"
EN_DASH = "–"


def header_line(config_hash: str, seed: int) -> str:
    return f"config_hash={config_hash} seed={seed} tool_version={__version__}"


def header_dict(config_hash: str, seed: int) -> dict:
    return {"config_hash": config_hash, "seed": seed, "tool_version": __version__}


def write_json(path: str, payload: dict, config_hash: str, seed: int) -> None:
    """JSON artifact with the provenance header as the first key."""
    body = {"_header": header_dict(config_hash, seed)}
    body.update(payload)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=1, sort_keys=False, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if hasattr(obj, "__dict__"):
        return obj.__dict__
    if hasattr(obj, "_asdict"):
        return obj._asdict()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_text(path: str, lines: list[str], config_hash: str, seed: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {header_line(config_hash, seed)}\n")
        for line in lines:
            fh.write(line + "\n")


# ---------------------------------------------------------------------------
# Number and table formatting
# ---------------------------------------------------------------------------


def fmt_estimate(value: float, decimals: int = 2) -> str:
    """Fixed-decimal estimate with a typographic minus sign."""
    if value is None:
        return ""
    return f"{value:.{decimals}f}".replace("-", MINUS)


def fmt_ci(lo: float, hi: float, decimals: int = 2) -> str:
    """Interval as "lo–hi" (en dash), e.g. −0.02–0.29."""
    return f"{fmt_estimate(lo, decimals)}{EN_DASH}{fmt_estimate(hi, decimals)}"


def coefficient_table_lines(title: str, coefficients: list[dict], stats: dict) -> list[str]:
    """Text table in the style of the published supplementary tables.

    ``coefficients`` rows need name/estimate/ci_low/ci_high; ``stats``
    keys are rendered in a fixed footer order when present.
    """
    width = max([len(c["name"]) for c in coefficients] + [len("term")]) + 2
    lines = [title, "=" * max(len(title), width + 24)]
    lines.append(f"{'term':<{width}}{'estimate':>10}  {'95% CI':>15}")
    for coef in coefficients:
        ci = fmt_ci(coef["ci_low"], coef["ci_high"]) if coef.get("ci_low") is not None else ""
        lines.append(f"{coef['name']:<{width}}{fmt_estimate(coef['estimate']):>10}  {ci:>15}")
    lines.append("-" * max(len(title), width + 24))
    footer = []
    if stats.get("n_obs") is not None:
        footer.append(f"n {stats['n_obs']}")
    for key, label in (("r2", "R2"), ("adj_r2", "adj. R2")):
        if stats.get(key) is not None:
            footer.append(f"{label} {fmt_estimate(stats[key])}")
    if footer:
        lines.append("   ".join(footer))
    footer2 = []
    for key, label in (("aic", "AIC"), ("bic", "BIC")):
        if stats.get(key) is not None:
            footer2.append(f"{label} {fmt_estimate(stats[key])}")
    if stats.get("f_stat") is not None:
        df = stats.get("f_df")
        suffix = f" ({df[0]}; {df[1]})" if df else ""
        footer2.append(f"F {fmt_estimate(stats['f_stat'])}{suffix}")
    if footer2:
        lines.append("   ".join(footer2))
    footer3 = []
    for key, label in (
        ("oos_spearman", "OOS rho"),
        ("oos_rmse", "OOS RMSE"),
        ("oos_r2", "OOS R2"),
        ("loo_rmse", "OOS RMSE"),
        ("loo_r2", "OOS R2"),
    ):
        if stats.get(key) is not None:
            footer3.append(f"{label} {fmt_estimate(stats[key])}")
    if footer3:
        lines.append("   ".join(footer3))
    return lines


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def fig_popularity_curve(curve, loff_range, path: str) -> None:
    """Log-log popularity curve with the detected LoFF band shaded."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=130)
    mask = curve.popularity > 0
    ax.loglog(curve.ranks[mask] + 1.0, curve.popularity[mask], lw=0.9, color="#1f4e79")
    if loff_range is not None:
        ax.axvspan(loff_range.k0 + 1, loff_range.k1 + 1, color="#e8a33d", alpha=0.35)
        ax.axvline(loff_range.k0 + 1, color="#b36a00", lw=0.8, ls="--")
        ax.axvline(loff_range.k1 + 1, color="#b36a00", lw=0.8, ls="--")
        ax.set_title(
            f"{curve.language}: popularity curve, band {loff_range.k0}–{loff_range.k1}"
        )
    else:
        ax.set_title(f"{curve.language}: popularity curve")
    ax.set_xlabel("word rank (1-based)")
    ax.set_ylabel("fraction of users")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def fig_olle_vs_benchmark(rows: list[dict], path: str, annotation: str | None = None) -> None:
    """Scatter of OLLE against the official benchmark rate."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.2, 5.0), dpi=130)
    xs = [r["benchmark"] for r in rows]
    ys = [r["olle"] for r in rows]
    ax.scatter(xs, ys, s=14, alpha=0.75, color="#1f4e79", edgecolors="none")
    ax.set_xlabel("official literacy rate")
    ax.set_ylabel("OLLE")
    ax.set_title("OLLE vs official benchmark")
    if annotation:
        ax.annotate(annotation, xy=(0.03, 0.95), xycoords="axes fraction", va="top")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def fig_gender_gaps(records: list, path: str) -> None:
    """Sorted standardized gender gaps, colored by significance."""
    plt = _pyplot()
    ordered = sorted(records, key=lambda r: r.z_gap)
    colors = {
        "female_favoring": "#7b3294",
        "male_favoring": "#008837",
        "none": "#bbbbbb",
    }
    fig, ax = plt.subplots(figsize=(6.4, max(2.5, 0.14 * len(ordered) + 1.2)), dpi=130)
    ax.barh(
        range(len(ordered)),
        [r.z_gap for r in ordered],
        color=[colors[r.significance] for r in ordered],
    )
    ax.set_yticks(range(len(ordered)))
    ax.set_yticklabels([r.country for r in ordered], fontsize=5)
    ax.axvline(0.0, color="black", lw=0.8)
    ax.set_xlabel("standardized gender gap (female − male)")
    ax.set_title("Gender gaps")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def fig_regional_disparity(records: list, path: str) -> None:
    plt = _pyplot()
    ordered = sorted(records, key=lambda r: r.disparity, reverse=True)
    fig, ax = plt.subplots(figsize=(6.4, max(2.5, 0.14 * len(ordered) + 1.2)), dpi=130)
    ax.barh(range(len(ordered)), [r.disparity for r in ordered], color="#2c7fb8")
    ax.set_yticks(range(len(ordered)))
    ax.set_yticklabels([r.country for r in ordered], fontsize=5)
    ax.set_xlabel("sd of regional OLLE")
    ax.set_title("Regional disparity")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def ensure_outdir(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {path!r}: {exc}") from exc
    return path
