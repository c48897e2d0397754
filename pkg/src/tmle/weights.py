"""
Clever-covariate weights for the targeting step. With the default outcome
model Q(A, C, W),

    H = g*(C) * 1(S=1, A=a, W=w, M=1) / [g_{a,1,w}(C) * P_A(a | S=1) * P(S=1, W=w)]

where g* = g*_{C | a*, e, w} for the environment e the effect is transported
to (0 by default) and g_{a,1,w} is the source-environment density of C under
A = a, mixed over R the same way g* is. When the outcome model also uses R,
the denominator density becomes P_C(C | a, R, S=1, W=w) and the weight picks
up the ratio P_R(R | a, S=e) / P_R(R | a, S=1). Rows failing the indicator
get weight zero.

"""

import logging
from dataclasses import dataclass

import numpy as np

from src.errors import PositivityError
from src.nuisance.fit import DENSITY_FLOOR
from src.nuisance.mediator_density import mediator_intervention_density

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TargetingWeights:
    values: np.ndarray
    n_truncated: int
    threshold: float


def truncate_weights(h, quantile):
    """Caps the nonzero weights at their `quantile`; returns the capped weights and the count altered."""
    positive = h > 0
    if quantile is None or quantile >= 1.0 or not positive.any():
        return h, 0, float("inf")
    threshold = float(np.quantile(h[positive], quantile))
    n_truncated = int(np.sum(h > threshold))
    return np.minimum(h, threshold), n_truncated, threshold


def _check_marginal(value, factor):
    if not np.isfinite(value) or value <= 0:
        raise PositivityError(factor, "positivity violated: {} = {}".format(factor, value))


def _floored(values):
    return np.maximum(values, DENSITY_FLOOR)


def compute_targeting_weights(fit, rows, a, a_star, group_w, environment=0, g_star=None, return_details=False):
    frame = rows.frame if hasattr(rows, "frame") else rows
    s, arm, w, m = (frame[col].to_numpy() for col in ("s", "a", "w", "m"))
    r = frame["r"].to_numpy(dtype=float)
    c = frame["c_obs"].to_numpy(dtype=float) if "c_obs" in frame else frame["c"].to_numpy(dtype=float)

    p_treat = fit.treatment_probability(a, s=1)
    p_source = fit.environment_share(1, group_w)
    _check_marginal(p_treat, "P_A(a | S=1)")
    _check_marginal(fit.environment_share(environment, group_w), "P(S={}, W={})".format(environment, group_w))
    _check_marginal(p_source, "P(S=1, W={})".format(group_w))

    indicator = (s == 1) & (arm == a) & (w == group_w) & (m == 1)
    h = np.zeros(len(frame))
    if not indicator.any():
        details = TargetingWeights(values=h, n_truncated=0, threshold=float("inf"))
        return details if return_details else h

    if g_star is None:
        g_star = mediator_intervention_density(fit, a_star, environment, group_w)
    c_i, r_i = c[indicator], r[indicator]
    numerator = _floored(g_star.pdf(c_i))

    if fit.options.outcome_intermediate:
        given = {"a": a, "r": r_i}
        source_density = _floored(fit.mediator_model(1, group_w).density(c_i, given, n=len(c_i)))
        if environment != 1:
            intermediate = {s_: _floored(fit.intermediate_model(s_).density(r_i, {"a": a}, n=len(r_i)))
                            for s_ in (environment, 1)}
            numerator = numerator * intermediate[environment] / intermediate[1]
    else:
        source_density = _floored(mediator_intervention_density(fit, a, 1, group_w).pdf(c_i))

    h[indicator] = numerator / (source_density * p_treat * p_source)
    h, n_truncated, threshold = truncate_weights(h, fit.options.truncation_quantile)
    logger.debug("Targeting weights a=%d a*=%d W=%s: %d nonzero, %d truncated at %.4g",
                 a, a_star, group_w, int(indicator.sum()), n_truncated, threshold)

    if return_details:
        return TargetingWeights(values=h, n_truncated=n_truncated, threshold=threshold)
    return h
