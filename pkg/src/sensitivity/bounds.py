"""
Variance-based sensitivity bounds for the stochastic indirect effect.

The g* weights evaluated at complete-case mediators (w-bar) are biased when the
mediator is missing not at random. The true weights w* are only known to
satisfy

    1 <= var(w*) / var(w-bar) <= 1 / (1 - R2)

Each arm's mean outcome is re-estimated by importance sampling with ratios
w-bar / d, where d is the target-environment mixture of the g* densities over
treatment, normalized to mean one. For c in [1, 1/sqrt(1 - R2)] the family
holds the rescalings 1 + c (ratio - 1), whose variance ratio is c^2, and the
perturbations ratio +- sqrt(c^2 - 1) sd(ratio) e along the standardized
outcome e, whose added variance is the same budget (c^2 - 1) var(ratio). The
bounded SIE is the range of the resulting SIE*. A group whose target rows have
no missing mediator keeps point bounds at every R2.

"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from src.errors import ConfigError, DegenerateWeightsError, SensitivityDomainError, StratumError
from src.tmle.estimator import GROUPS, TransportedMediationEstimator

logger = logging.getLogger(__name__)

N_SCALE = 21
MIN_BOOTSTRAP = 100


@dataclass(frozen=True)
class SensitivityConfig:
    r2_grid: Tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    lam: Optional[float] = None
    alpha: float = 0.05
    n_bootstrap: int = 500
    seed: int = 0
    n_scale: int = N_SCALE
    n_jobs: int = 1

    def __post_init__(self):
        grid = tuple(float(r) for r in self.r2_grid)
        object.__setattr__(self, "r2_grid", grid)
        if not grid:
            raise ConfigError("r2_grid must not be empty", module="sensitivity")
        if any(not 0.0 <= r < 1.0 for r in grid):
            raise ConfigError("r2_grid values must lie in [0, 1)", module="sensitivity")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("r2_grid must be strictly increasing", module="sensitivity")
        if self.lam is not None and self.lam < 1:
            raise ConfigError("lambda must be >= 1", module="sensitivity")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)", module="sensitivity")
        if self.n_bootstrap < MIN_BOOTSTRAP:
            raise ConfigError("n_bootstrap must be at least {}".format(MIN_BOOTSTRAP), module="sensitivity")
        if self.n_scale < 2:
            raise ConfigError("n_scale must be at least 2", module="sensitivity")

    def to_dict(self):
        return {"r2_grid": list(self.r2_grid), "lambda": self.lam, "alpha": self.alpha,
                "n_bootstrap": self.n_bootstrap, "seed": self.seed, "n_scale": self.n_scale}


@dataclass
class WeightFamily:
    """Members of the sensitivity set, one row per member; row 0 is w-bar itself."""
    observed: np.ndarray
    members: np.ndarray
    scale_factors: np.ndarray
    variance_ratios: np.ndarray
    kinds: Tuple[str, ...] = ()
    n_clipped: int = 0

    def __len__(self):
        return len(self.members)


def max_scale_factor(r2):
    return 1.0 / math.sqrt(1.0 - r2)


def _check_r2(r2):
    if not 0.0 <= r2 < 1.0:
        raise SensitivityDomainError("R2 must lie in [0, 1), got {}".format(r2))


def standardized_direction(direction):
    """Centered, unit-variance copy of `direction`, or None when it is constant."""
    direction = np.asarray(direction, dtype=float)
    sd = direction.std()
    if not sd > 1e-12 * max(1.0, float(np.abs(direction).max(initial=0.0))):
        return None
    return (direction - direction.mean()) / sd


def sensitivity_bounds(weights_observed, r2, direction=None, n_scale=N_SCALE):
    w_bar = np.asarray(weights_observed, dtype=float)
    _check_r2(r2)
    if len(w_bar) < 2 or not w_bar.var() > 0:
        raise DegenerateWeightsError("observed weights have zero variance; the sensitivity set is undefined")
    if np.any(w_bar < 0):
        raise DegenerateWeightsError("observed weights must be nonnegative")

    if r2 == 0:
        return WeightFamily(observed=w_bar, members=w_bar[None, :].copy(), scale_factors=np.ones(1),
                            variance_ratios=np.ones(1), kinds=("observed",))

    mean, sd = w_bar.mean(), w_bar.std()
    scales = np.linspace(1.0, max_scale_factor(r2), n_scale)
    members = [mean + c * (w_bar - mean) for c in scales]
    kinds = ["scale"] * len(scales)
    factors = list(scales)

    u = standardized_direction(direction) if direction is not None else None
    if u is not None:
        for c in scales[1:]:
            step = math.sqrt(c * c - 1.0) * sd * u
            for sign, kind in ((1.0, "shift+"), (-1.0, "shift-")):
                members.append(w_bar + sign * step)
                kinds.append(kind)
                factors.append(c)

    members = np.array(members)
    ratios = members.var(axis=1) / w_bar.var()

    clipped = members < 0
    n_clipped = int(clipped.any(axis=1).sum())
    if n_clipped:
        members = np.where(clipped, 0.0, members)
        members = members * (mean / members.mean(axis=1))[:, None]
        logger.debug("Clipped %d of %d sensitivity members at R2=%.3f", n_clipped, len(members), r2)

    return WeightFamily(observed=w_bar, members=members, scale_factors=np.array(factors),
                        variance_ratios=ratios, kinds=tuple(kinds), n_clipped=n_clipped)


def tan_diagnostic(family, lam=None):
    """Range of the member-to-observed weight ratios, compared with lambda when given."""
    positive = family.observed > 0
    ratios = family.members[:, positive] / family.observed[positive]
    low, high = float(ratios.min()), float(ratios.max())
    result = {"min_ratio": low, "max_ratio": high, "lambda": lam}
    if lam is not None:
        result["within_lambda"] = bool(1.0 / lam - 1e-12 <= low and high <= lam + 1e-12)
    return result


def importance_mean(ratios, outcome):
    """Self-normalized mean of `outcome` under each row of `ratios`."""
    ratios = np.asarray(ratios, dtype=float)
    return ratios @ outcome / ratios.sum(axis=-1)


@dataclass
class ArmSensitivity:
    a_star: int
    ratios: np.ndarray
    predictions: np.ndarray
    baseline: float = field(init=False)

    def __post_init__(self):
        self.ratios = self.ratios / self.ratios.mean()
        self.baseline = float(importance_mean(self.ratios, self.predictions))

    def shifts(self, r2, n_scale=N_SCALE):
        family = sensitivity_bounds(self.ratios, r2, direction=self.predictions, n_scale=n_scale)
        return importance_mean(family.members, self.predictions) - self.baseline, family


class GroupSensitivity:
    """
    Per-group ingredients of the bounded SIE computed once from a fitted
    estimator: for each arm a* the importance ratios at the observed target
    mediators and the targeted outcome predictions at A = 1.
    """

    def __init__(self, estimator, group_w):
        self.group_w = group_w
        self.sie = estimator.sie(group_w).point
        self.n_missing = estimator.n_missing(group_w)
        self.families = {}
        observed = estimator.observed_mediators(group_w)["c_obs"].to_numpy()
        if len(observed) < 2:
            raise StratumError("group W={} has fewer than two observed target mediators".format(group_w),
                               module="sensitivity")
        self.arms = {a_star: ArmSensitivity(a_star=a_star,
                                            ratios=estimator.importance_ratios(a_star, group_w, observed),
                                            predictions=estimator.targeted_predictions(1, a_star, group_w))
                     for a_star in (0, 1)}
        if self.n_missing == 0:
            logger.debug("Group W=%d has no missing target mediators; its bounds stay at the estimate", group_w)

    def bounds(self, r2, n_scale=N_SCALE):
        _check_r2(r2)
        if r2 == 0 or self.n_missing == 0:
            return self.sie, self.sie
        shift_1, self.families[(r2, 1)] = self.arms[1].shifts(r2, n_scale)
        shift_0, self.families[(r2, 0)] = self.arms[0].shifts(r2, n_scale)
        lower = self.sie + shift_1.min() - shift_0.max()
        upper = self.sie + shift_1.max() - shift_0.min()
        return float(min(lower, self.sie)), float(max(upper, self.sie))

    def clipping(self, r2):
        return sum(self.families[(r2, a)].n_clipped for a in (0, 1) if (r2, a) in self.families)


class SensitivityAnalysis:
    """Bounded SIE for one group or, with group_w=None, for the mixture over groups."""

    def __init__(self, estimator, group_w=None):
        self.estimator = estimator
        self.group_w = group_w
        groups = (group_w,) if group_w is not None else tuple(
            w for w in GROUPS if estimator.fit.group_weight(w, estimator.environment) > 0)
        self.groups = {w: GroupSensitivity(estimator, w) for w in groups}

    @property
    def sie(self):
        if self.group_w is not None:
            return self.groups[self.group_w].sie
        return self.estimator.sie(None).point

    def bounds(self, r2, n_scale=N_SCALE):
        if self.group_w is not None:
            return self.groups[self.group_w].bounds(r2, n_scale)
        if r2 == 0:
            return self.sie, self.sie
        fit, env = self.estimator.fit, self.estimator.environment
        lower = upper = self.sie
        for w, group in self.groups.items():
            low_w, high_w = group.bounds(r2, n_scale)
            share = fit.group_weight(w, env)
            lower += share * (low_w - group.sie)
            upper += share * (high_w - group.sie)
        return float(lower), float(upper)

    def clipping(self, r2):
        return sum(group.clipping(r2) for group in self.groups.values())

    def tan(self, r2, lam=None):
        self.bounds(r2)
        families = [group.families[(r2, a)] for group in self.groups.values() for a in (0, 1)
                    if (r2, a) in group.families]
        if not families:
            return None
        diagnostics = [tan_diagnostic(family, lam) for family in families]
        result = {"min_ratio": min(d["min_ratio"] for d in diagnostics),
                  "max_ratio": max(d["max_ratio"] for d in diagnostics), "lambda": lam}
        if lam is not None:
            result["within_lambda"] = all(d["within_lambda"] for d in diagnostics)
        return result


def bounded_sie(fit, rows, group_w, r2, config=None, estimator=None):
    n_scale = config.n_scale if config is not None else N_SCALE
    estimator = estimator or TransportedMediationEstimator(fit, rows)
    return SensitivityAnalysis(estimator, group_w).bounds(r2, n_scale)
