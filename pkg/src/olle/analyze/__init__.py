from .correlation import CorrelationReport, spearman_bootstrap
from .gaps import (
    GenderGapRecord,
    RegionalDisparityRecord,
    UserValueSource,
    dominance_bias_check,
    gender_gap,
    regional_disparity,
    weighted_mean,
)
from .regression import (
    RegressionReport,
    RegressionSpec,
    build_design,
    fit_gap_regression,
    marginal_effects,
)

__all__ = [
    "CorrelationReport",
    "GenderGapRecord",
    "RegionalDisparityRecord",
    "RegressionReport",
    "RegressionSpec",
    "UserValueSource",
    "build_design",
    "dominance_bias_check",
    "fit_gap_regression",
    "gender_gap",
    "marginal_effects",
    "regional_disparity",
    "spearman_bootstrap",
    "weighted_mean",
]
