"""
Samples source (S=1) and target (S=0) individuals from the structural equations
in StructuralParams. No mediator is missing yet; see missingness.py.

"""

import logging

import numpy as np
from scipy.special import expit

from src.errors import ConfigError
from src.extractors.observation_table import ObservationTable

logger = logging.getLogger(__name__)


def generate(params, n_source, n_target, seed):
    if n_source < 1 or n_target < 1:
        raise ConfigError("n_source and n_target must both be at least 1", module="simulation")

    rng = np.random.default_rng(seed)
    n = n_source + n_target
    s = np.concatenate([np.ones(n_source, dtype=np.int64), np.zeros(n_target, dtype=np.int64)])

    a = rng.binomial(1, params.p_treat, size=n)

    # The W success probability can leave [0, 1]; it is clamped before the draw
    w_prob = params.w_source_shift * s + rng.normal(0.0, params.noise_sd_w, size=n)
    clamped = int(np.sum((w_prob < 0.0) | (w_prob > 1.0)))
    w = rng.binomial(1, np.clip(w_prob, 0.0, 1.0))

    r = params.coef_r_given_a * a + rng.normal(0.0, params.noise_sd_r, size=n)
    c = (params.coef_c_given_r * r
         + params.coef_c_given_w1 * w
         + params.coef_c_given_w0 * (1 - w)
         + rng.normal(0.0, params.noise_sd_c, size=n))
    y = rng.binomial(1, expit(params.outcome_coef_a * a + params.outcome_coef_c * c + params.outcome_coef_w * w))

    logger.info("Generated %d source and %d target rows (%d W probabilities clamped)", n_source, n_target, clamped)
    metadata = {
        "seed": int(seed),
        "n_source": int(n_source),
        "n_target": int(n_target),
        "w_probability_clamped": clamped,
    }
    return ObservationTable.from_arrays(s=s, a=a, w=w, r=r, c_obs=c.copy(), y=y, c_true=c, metadata=metadata)
