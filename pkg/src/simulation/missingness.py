"""
Masks mediator values under the three missingness mechanisms:

    MCAR: missing with probability p, independent of everything
    MAR:  missing with probability expit(offset + lam * (A + R))
    MNAR: missing with probability expit(offset + lam * C)

Only rows of `target_group` (and, by default, of the target environment S=0)
are eligible. When `target_proportion` is set, p (MCAR) or the offset (MAR,
MNAR) is calibrated by bisection so that the realized missing fraction among
eligible rows matches it; lam keeps its role as the dependence strength.

"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.special import expit

from src.errors import CalibrationError, ConfigError

logger = logging.getLogger(__name__)

MECHANISMS = ("MCAR", "MAR", "MNAR")
CALIBRATION_TOLERANCE = 0.005
CALIBRATION_MAX_ITER = 60


@dataclass(frozen=True)
class MissingnessSpec:
    mechanism: str = "MNAR"
    lam: float = 1.0
    target_group: int = 0
    target_proportion: Optional[float] = None
    p: float = 0.5
    offset: float = 0.0
    environment: Optional[int] = 0

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ConfigError("missingness mechanism must be one of {}".format(", ".join(MECHANISMS)), module="simulation")
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ConfigError("missingness lambda must be a finite real >= 0", module="simulation")
        if self.target_group not in (0, 1):
            raise ConfigError("target_group must be 0 or 1", module="simulation")
        if self.environment not in (0, 1, None):
            raise ConfigError("environment must be 0, 1 or null", module="simulation")
        if self.target_proportion is not None and not 0.0 <= self.target_proportion <= 1.0:
            raise ConfigError("target_proportion must lie in [0, 1]", module="simulation")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("MCAR probability p must lie in [0, 1]", module="simulation")

    def with_proportion(self, proportion):
        values = asdict(self)
        values["target_proportion"] = proportion
        return MissingnessSpec(**values)

    def to_dict(self):
        return asdict(self)


def eligible_rows(table, spec):
    rows = table.w == spec.target_group
    if spec.environment is not None:
        rows &= table.s == spec.environment
    return rows


def _mediator_values(table):
    # Simulated tables use the hidden truth; real tables use the observed proxy
    if table.has_truth:
        return np.asarray(table.c_true, dtype=float)
    return np.asarray(table.c_obs, dtype=float)


def _missing_probability(spec, table, offset, p):
    if spec.mechanism == "MCAR":
        return np.full(len(table), p)
    if spec.mechanism == "MAR":
        index = spec.lam * (table.a + table.r)
    else:
        index = spec.lam * np.nan_to_num(_mediator_values(table))
    return expit(offset + index)


def apply_missingness(table, spec, seed):
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=len(table))
    rows = eligible_rows(table, spec)
    already_missing = table.m == 0
    candidates = rows & ~already_missing

    def masked(parameter):
        if spec.mechanism == "MCAR":
            prob = _missing_probability(spec, table, 0.0, parameter)
        else:
            prob = _missing_probability(spec, table, parameter, spec.p)
        return already_missing | (candidates & (u < prob))

    def realized(parameter):
        return float(np.mean(masked(parameter)[rows]))

    parameter = spec.p if spec.mechanism == "MCAR" else spec.offset
    if spec.target_proportion is not None:
        if not rows.any():
            raise CalibrationError("cannot calibrate missingness: target group {} has no eligible rows"
                                   .format(spec.target_group))
        parameter = _calibrate(spec, table, realized)

    missing = masked(parameter)
    fraction = float(np.mean(missing[rows])) if rows.any() else 0.0
    c_obs = np.where(missing, np.nan, table.c_obs)
    logger.info("Applied %s missingness to group %d: realized fraction %.4f", spec.mechanism, spec.target_group, fraction)
    metadata = {
        "missingness": spec.to_dict(),
        "missingness_seed": int(seed),
        "missingness_parameter": float(parameter),
        "missing_fraction": fraction,
    }
    return table.with_columns(metadata=metadata, c_obs=c_obs, m=(~missing).astype(np.int64))


def _calibrate(spec, table, realized):
    target = spec.target_proportion
    if spec.mechanism == "MCAR":
        lo, hi = 0.0, 1.0
    else:
        spread = spec.lam * np.nan_to_num(np.abs(_mediator_values(table) if spec.mechanism == "MNAR"
                                                 else table.a + table.r))
        bound = 60.0 + float(spread.max(initial=0.0))
        lo, hi = -bound, bound

    f_lo = realized(lo) - target
    f_hi = realized(hi) - target
    if f_lo >= 0:
        if f_lo > CALIBRATION_TOLERANCE:
            logger.warning("Missing fraction %.4f already exceeds target %.4f", f_lo + target, target)
        return lo
    if f_hi <= 0:
        if f_hi < -CALIBRATION_TOLERANCE:
            raise CalibrationError("cannot reach missing proportion {:.3f}".format(target))
        return hi

    parameter, _ = optimize.bisect(lambda x: realized(x) - target, lo, hi, xtol=1e-12,
                                   maxiter=CALIBRATION_MAX_ITER, full_output=True, disp=False)
    error = realized(parameter) - target
    if abs(error) > CALIBRATION_TOLERANCE:
        # the step function may jump over the target; take whichever side is closer
        upper = parameter + 1e-9 if spec.mechanism != "MCAR" else min(parameter + 1e-9, 1.0)
        if abs(realized(upper) - target) < abs(error):
            parameter = upper
            error = realized(parameter) - target
    if abs(error) > CALIBRATION_TOLERANCE:
        logger.warning("Missingness calibration off by %.4f (group too small for tolerance %.3f)",
                       error, CALIBRATION_TOLERANCE)
    return parameter
