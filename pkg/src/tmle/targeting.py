"""
Targeting step and stochastic-intervention marginalization.

The initial outcome regression is fluctuated along the one-dimensional
submodel logit Q*(C, A, W) = logit Q0(C, A, W) + eps, fitted as an
intercept-only weighted logistic GLM with the initial logit as offset and the
clever covariate as frequency weights. At the solution the weighted score

    (1/n) sum_i H_i (Y_i - Q*_i)

vanishes. The targeted predictions are then integrated against the mediator
intervention g* (and, when the outcome model uses R, against R | A = a in the
target environment).

"""

import logging
from dataclasses import dataclass

import numpy as np
import statsmodels.api as sm
from scipy.special import expit

from src.errors import TargetingError
from src.nuisance.logistic import PROBABILITY_BOUND

logger = logging.getLogger(__name__)

SCORE_TOLERANCE = 1e-8
MAX_POLISH_STEPS = 20


@dataclass(frozen=True)
class TargetedOutcome:
    initial: object
    epsilon: float
    score: float

    def linear_predictor(self, data, n=None):
        return self.initial.linear_predictor(data, n=n) + self.epsilon

    def predict(self, data, n=None):
        return np.clip(expit(self.linear_predictor(data, n=n)), PROBABILITY_BOUND, 1.0 - PROBABILITY_BOUND)

    def coefficient(self, name):
        return self.initial.coefficient(name)


def _outcome_data(frame):
    data = {name: frame[name].to_numpy(dtype=float) for name in ("a", "r", "w")}
    data["c"] = frame["c_obs"].to_numpy(dtype=float) if "c_obs" in frame else frame["c"].to_numpy(dtype=float)
    return data


def weighted_score(epsilon, offset, y, h, n):
    return float(np.sum(h * (y - expit(offset + epsilon))) / n)


def _fluctuate(offset, y, h):
    glm = sm.GLM(y, np.ones((len(y), 1)), offset=offset, freq_weights=h, family=sm.families.Binomial())
    return float(glm.fit(tol=1e-12, maxiter=100).params[0])


def target_outcome_model(initial, rows, H):
    frame = rows.frame if hasattr(rows, "frame") else rows
    h = np.asarray(H, dtype=float)
    n = len(frame)
    if np.any(h < 0):
        raise TargetingError("targeting weights must be nonnegative")
    active = h > 0
    if not active.any():
        raise TargetingError("all targeting weights are zero; nothing to target")

    data = {k: v[active] for k, v in _outcome_data(frame).items()}
    offset = initial.linear_predictor(data, n=int(active.sum()))
    y = frame["y"].to_numpy(dtype=float)[active]
    h = h[active]
    if np.all(y == y[0]):
        raise TargetingError("the weighted outcomes are all {:g}; the fluctuation has no finite solution"
                             .format(y[0]))

    if abs(weighted_score(0.0, offset, y, h, n)) < SCORE_TOLERANCE:
        epsilon = 0.0
    else:
        epsilon = _fluctuate(offset, y, h)
        if not np.isfinite(epsilon):
            raise TargetingError("fluctuation fit diverged")
        # Newton steps on the one-dimensional score if the GLM stopped short
        for _ in range(MAX_POLISH_STEPS):
            score = weighted_score(epsilon, offset, y, h, n)
            if abs(score) < SCORE_TOLERANCE:
                break
            p = expit(offset + epsilon)
            epsilon += score / (np.sum(h * p * (1.0 - p)) / n)

    final = weighted_score(epsilon, offset, y, h, n)
    if abs(final) >= SCORE_TOLERANCE:
        raise TargetingError("targeting score {:.3g} did not reach {:g}".format(final, SCORE_TOLERANCE))
    logger.debug("Targeting fluctuation eps=%.6g (score %.3g) on %d weighted rows", epsilon, final, int(active.sum()))
    return TargetedOutcome(initial=initial, epsilon=float(epsilon), score=final)


def marginalize(targeted, g_star, a, group_w, r_nodes=None):
    """
    Mean of the targeted outcome at A = a, W = group_w with C drawn from g*.
    `r_nodes` (points, weights) integrates R as well when the outcome model uses it.
    """
    c = np.asarray(g_star.support, dtype=float)
    c_weights = np.asarray(g_star.weights, dtype=float)
    if r_nodes is None:
        data = {"a": float(a), "c": c, "r": 0.0, "w": float(group_w)}
        return float(targeted.predict(data, n=len(c)) @ c_weights)

    r, r_weights = (np.asarray(v, dtype=float) for v in r_nodes)
    grid_c, grid_r = np.meshgrid(c, r, indexing="ij")
    data = {"a": float(a), "c": grid_c.ravel(), "r": grid_r.ravel(), "w": float(group_w)}
    predictions = targeted.predict(data, n=grid_c.size).reshape(grid_c.shape)
    return float(c_weights @ predictions @ r_weights)
