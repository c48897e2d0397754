"""
Machine-readable run outputs: the results JSON document and the long-format
curve CSV (one row per group and grid point).
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import joblib
import numpy as np
import pandas as pd
import scipy
import sklearn
import statsmodels
import yaml

logger = logging.getLogger(__name__)

# Reference magnitudes for the two-group design at low and high bias; echoed for comparison, never checked
REFERENCE_VALUES = {
    "sie_disadvantaged_low_bias": 2.72,
    "ci_disadvantaged_low_bias": [2.62, 2.81],
    "ci_disadvantaged_high_bias": [-5.20, 6.51],
    "r2_null_crossing_disadvantaged": 0.29,
}


def package_versions():
    from src import __version__
    return {
        "medtransport": __version__,
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
        "joblib": joblib.__version__,
        "statsmodels": statsmodels.__version__,
        "pyyaml": yaml.__version__,
    }


def _clean(value):
    """JSON-safe copy: numpy scalars and arrays become Python values, non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


@dataclass
class ResultDocument:
    config: Dict[str, Any]
    effects: List[Dict[str, Any]] = field(default_factory=list)
    curve: Optional[Dict[str, Any]] = None
    null_crossings: List[Dict[str, Any]] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    oracle: Optional[Dict[str, Any]] = None
    outputs: Dict[str, str] = field(default_factory=dict)

    def check_intervals(self):
        """True when every reported interval brackets its point."""
        for effect in self.effects:
            if not effect["ci_low"] <= effect["point"] <= effect["ci_high"]:
                return False
        for point in (self.curve or {}).get("points", []):
            if not point["ci_low"] <= point["sie_lower"] <= point["point"] <= point["sie_upper"] <= point["ci_high"]:
                return False
        return True

    def to_dict(self):
        return _clean({
            "config": self.config,
            "versions": package_versions(),
            "effects": self.effects,
            "curve": self.curve,
            "null_crossings": self.null_crossings,
            "diagnostics": self.diagnostics,
            "oracle": self.oracle,
            "reference_values": REFERENCE_VALUES,
            "outputs": self.outputs,
        })

    def write_json(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        logger.info("Wrote results to %s", path)
        return path


def write_json(values, path):
    with open(path, "w") as f:
        json.dump(_clean(values), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_curve_csv(curve, path):
    frame = curve.to_frame()
    frame["contains_null"] = frame["contains_null"].map({True: "true", False: "false"})
    frame.to_csv(path, index=False)
    logger.info("Wrote %d curve rows to %s", len(frame), path)
    return path
