"""
Sensitivity curves: the bounded SIE and its CI(alpha) per group along a grid.

The grid is either a list of R2 values applied to one dataset, or a list of
missingness proportions. In the latter case each proportion is first imposed
on the data, and the R2 used for that point is the empirical one,

    R2 = 1 - corr(w* / d, w-bar / d)^2

over the group's target rows, d being the target-environment mixture of g*
over treatment. The complete-case mean stands in for w-bar / d where the
mediator is missing. On real data, without true mediators, the proportion
itself is the R2. A group without missing mediators gets R2 = 0. Curve rows
are grouped by W, in grid order within a group.

"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from src.errors import ConfigError
from src.nuisance.fit import fit_nuisance
from src.sensitivity.bootstrap import bootstrap_bounds, percentile_interval
from src.sensitivity.bounds import SensitivityAnalysis
from src.simulation.missingness import apply_missingness
from src.tmle.estimator import GROUPS, TransportedMediationEstimator

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["group_w", "r2", "sie_lower", "sie_upper", "ci_low", "ci_high", "contains_null", "grid_value"]
MAX_EMPIRICAL_R2 = 0.99


@dataclass
class CurvePoint:
    group_w: int
    r2: float
    sie_lower: float
    sie_upper: float
    ci_low: float
    ci_high: float
    point: float
    grid_value: float
    missing_fraction: Optional[float] = None
    n_clipped: int = 0

    @property
    def contains_null(self):
        return bool(self.ci_low <= 0.0 <= self.ci_high)

    def to_dict(self):
        return {
            "group_w": self.group_w,
            "r2": self.r2,
            "sie_lower": self.sie_lower,
            "sie_upper": self.sie_upper,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "contains_null": self.contains_null,
            "point": self.point,
            "grid_value": self.grid_value,
            "missing_fraction": self.missing_fraction,
            "n_clipped": self.n_clipped,
        }


@dataclass
class NullCrossing:
    group_w: int
    r2_star: Optional[float]

    def to_dict(self):
        return {"group_w": self.group_w, "r2_star": self.r2_star}


@dataclass
class SensitivityCurve:
    grid_kind: str
    points: List[CurvePoint] = field(default_factory=list)

    def group(self, group_w):
        return [p for p in self.points if p.group_w == group_w]

    def to_frame(self):
        rows = [{col: p.to_dict()[col] for col in CURVE_COLUMNS} for p in self.points]
        return pd.DataFrame(rows, columns=CURVE_COLUMNS)

    def null_crossings(self, groups=None):
        groups = groups if groups is not None else sorted({p.group_w for p in self.points})
        crossings = []
        for group_w in groups:
            hits = [p.r2 for p in self.group(group_w) if p.contains_null]
            crossings.append(NullCrossing(group_w=group_w, r2_star=min(hits) if hits else None))
        return crossings

    def to_dict(self):
        return {"grid_kind": self.grid_kind, "points": [p.to_dict() for p in self.points],
                "null_crossings": [c.to_dict() for c in self.null_crossings()]}


def empirical_r2(masked_estimator, truth_estimator, group_w):
    """
    Share of the variation of the true importance ratios (g* from the fit on the
    unmasked data, at every true mediator of the group's target rows) left
    unexplained by the complete-case ones, whose missing rows carry the
    complete-case mean: 1 - corr^2, averaged over both arms.
    """
    masked = masked_estimator.frame
    rows = masked_estimator.target_rows(group_w)
    observed = masked["m"].to_numpy()[rows] == 1
    if observed.all() or observed.sum() < 2:
        return 0.0
    c_true = truth_estimator.frame["c_true"].to_numpy()[rows]
    c_obs = masked["c_obs"].to_numpy()[rows][observed]

    unexplained = []
    for a_star in (0, 1):
        r_star = truth_estimator.importance_ratios(a_star, group_w, c_true)
        r_bar = np.empty(len(r_star))
        r_bar[observed] = masked_estimator.importance_ratios(a_star, group_w, c_obs)
        r_bar[~observed] = r_bar[observed].mean()
        if not (r_star.std() > 0 and r_bar.std() > 0):
            continue
        unexplained.append(1.0 - np.corrcoef(r_star, r_bar)[0, 1] ** 2)
    if not unexplained:
        return 0.0
    return float(np.clip(np.mean(unexplained), 0.0, MAX_EMPIRICAL_R2))


def _running_extremes(points):
    # members admissible at a smaller R2 stay admissible at a larger one
    for previous, current in zip(points, points[1:]):
        current.sie_lower = min(current.sie_lower, previous.sie_lower)
        current.sie_upper = max(current.sie_upper, previous.sie_upper)
        current.ci_low = min(current.ci_low, previous.ci_low)
        current.ci_high = max(current.ci_high, previous.ci_high)


def sweep_r2(table, options, config, groups=GROUPS, environment=0):
    fit = fit_nuisance(table, options)
    estimator = TransportedMediationEstimator(fit, table, environment=environment)
    analyses = {w: SensitivityAnalysis(estimator, w) for w in groups}
    replicates = bootstrap_bounds(table, options, groups, config.r2_grid, config, environment=environment)

    curve = SensitivityCurve(grid_kind="r2")
    for i, group_w in enumerate(groups):
        points = []
        for j, r2 in enumerate(config.r2_grid):
            lower, upper = analyses[group_w].bounds(r2, config.n_scale)
            ci_low, ci_high = percentile_interval(replicates[:, i, j], config.alpha, (lower, upper))
            points.append(CurvePoint(group_w=group_w, r2=r2, sie_lower=lower, sie_upper=upper, ci_low=ci_low,
                                     ci_high=ci_high, point=analyses[group_w].sie, grid_value=r2,
                                     n_clipped=analyses[group_w].clipping(r2)))
        _running_extremes(points)
        curve.points.extend(points)
    return curve


def sweep_missingness(table, options, config, spec, proportions, groups=GROUPS, environment=0):
    truth_estimator = None
    if table.has_truth:
        revealed = table.revealed()
        truth_estimator = TransportedMediationEstimator(fit_nuisance(revealed, options), revealed,
                                                        environment=environment)

    points = {group_w: [] for group_w in groups}
    for index, proportion in enumerate(proportions):
        logger.info("Processing missingness proportion %.3f (%d/%d)", proportion, index + 1, len(proportions))
        masked = table if proportion == 0 else apply_missingness(table, spec.with_proportion(proportion),
                                                                 seed=config.seed)
        fit = fit_nuisance(masked, options)
        estimator = TransportedMediationEstimator(fit, masked, environment=environment)

        for group_w in groups:
            if truth_estimator is not None:
                r2 = empirical_r2(estimator, truth_estimator, group_w)
            else:
                r2 = float(proportion)
            analysis = SensitivityAnalysis(estimator, group_w)
            lower, upper = analysis.bounds(r2, config.n_scale)
            replicates = bootstrap_bounds(masked, options, (group_w,), (r2,), config, environment=environment)
            ci_low, ci_high = percentile_interval(replicates[:, 0, 0], config.alpha, (lower, upper))
            points[group_w].append(CurvePoint(group_w=group_w, r2=r2, sie_lower=lower, sie_upper=upper,
                                              ci_low=ci_low, ci_high=ci_high, point=analysis.sie,
                                              grid_value=float(proportion),
                                              missing_fraction=masked.metadata.get("missing_fraction", 0.0),
                                              n_clipped=analysis.clipping(r2)))
            logger.debug("W=%d at proportion %.3f: R2=%.3f, bounds [%.4f, %.4f]", group_w, proportion, r2,
                         lower, upper)

    curve = SensitivityCurve(grid_kind="missingness")
    for group_w in groups:
        curve.points.extend(points[group_w])
    return curve


def sweep(table, options, config, spec=None, proportions=None, groups=GROUPS, environment=0):
    """Curve and null crossings over the R2 grid of `config`, or over `proportions` when given."""
    if proportions is not None:
        if not len(proportions):
            raise ConfigError("missingness grid must not be empty", module="sensitivity")
        if spec is None:
            raise ConfigError("a missingness spec is required for a proportion grid", module="sensitivity")
        curve = sweep_missingness(table, options, config, spec, list(proportions), groups, environment)
    else:
        curve = sweep_r2(table, options, config, groups, environment)
    crossings = curve.null_crossings(groups)
    for crossing in crossings:
        logger.info("Group W=%d: null crossing at R2 = %s", crossing.group_w, crossing.r2_star)
    return curve, crossings
