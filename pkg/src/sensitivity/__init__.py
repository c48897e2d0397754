from src.sensitivity.bootstrap import bootstrap_bounds, ci_alpha, percentile_interval, stratified_resample
from src.sensitivity.bounds import (SensitivityAnalysis, SensitivityConfig, WeightFamily, bounded_sie,
                                    sensitivity_bounds, tan_diagnostic)
from src.sensitivity.sweep import CURVE_COLUMNS, NullCrossing, SensitivityCurve, empirical_r2, sweep

__all__ = [
    "bootstrap_bounds",
    "ci_alpha",
    "percentile_interval",
    "stratified_resample",
    "SensitivityAnalysis",
    "SensitivityConfig",
    "WeightFamily",
    "bounded_sie",
    "sensitivity_bounds",
    "tan_diagnostic",
    "CURVE_COLUMNS",
    "NullCrossing",
    "SensitivityCurve",
    "empirical_r2",
    "sweep",
]
