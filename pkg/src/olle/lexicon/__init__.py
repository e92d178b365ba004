"""Reference lexicons, popularity curves, and LoFF elbow detection."""
from .curves import (
    LoffRange,
    PopularityCurve,
    build_popularity_curve,
    read_curve_csv,
    write_curve_csv,
)
from .frequency import MAX_ENTRIES, FrequencyLexicon, loff_membership, parse_lexicon
from .knee import detect_loff_range, kneedle_point, max_curvature_point
from .smooth import SmootherFit, dense_rank_grid, fit_smoother

__all__ = [
    "FrequencyLexicon",
    "LoffRange",
    "MAX_ENTRIES",
    "PopularityCurve",
    "SmootherFit",
    "build_popularity_curve",
    "dense_rank_grid",
    "detect_loff_range",
    "fit_smoother",
    "kneedle_point",
    "loff_membership",
    "max_curvature_point",
    "parse_lexicon",
    "read_curve_csv",
    "write_curve_csv",
]
