"""
Monte-Carlo oracle for the transported stochastic direct and indirect effects.

Oracles act as an "upper-bound" reference by peeking at information the
estimators never see: here, the structural equations themselves. For each
group W = w of the target environment, C is drawn from its structural
conditional given A = a* and plugged into the outcome equation with treatment
a. Contrasts use common random numbers so their standard errors stay small.

"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from src.errors import ConfigError, EstimationError

logger = logging.getLogger(__name__)

MIN_DRAWS = 100_000
MAX_STANDARD_ERROR = 0.005


@dataclass
class OracleEffects:
    n_mc: int
    seed: int
    sde_true: dict = field(default_factory=dict)
    sie_true: dict = field(default_factory=dict)
    sde_se: dict = field(default_factory=dict)
    sie_se: dict = field(default_factory=dict)
    mediator_shift: dict = field(default_factory=dict)
    target_group_share: float = float("nan")

    def marginal(self, kind):
        """W-mixture over the target environment's group shares."""
        values = self.sde_true if kind == "SDE" else self.sie_true
        share = self.target_group_share
        return (1.0 - share) * values[0] + share * values[1]

    def to_dict(self):
        return {
            "n_mc": self.n_mc,
            "seed": self.seed,
            "sde_true": {str(k): v for k, v in self.sde_true.items()},
            "sie_true": {str(k): v for k, v in self.sie_true.items()},
            "sde_se": {str(k): v for k, v in self.sde_se.items()},
            "sie_se": {str(k): v for k, v in self.sie_se.items()},
            "mediator_shift": {str(k): v for k, v in self.mediator_shift.items()},
            "target_group_share": self.target_group_share,
            "sde_marginal": self.marginal("SDE"),
            "sie_marginal": self.marginal("SIE"),
        }


def _outcome_probability(params, a, c, w):
    return expit(params.outcome_coef_a * a + params.outcome_coef_c * c + params.outcome_coef_w * w)


def oracle_effects(params, n_mc, seed):
    if n_mc < MIN_DRAWS:
        raise ConfigError("oracle needs n_mc >= {}".format(MIN_DRAWS), module="oracle")

    rng = np.random.default_rng(seed)
    effects = OracleEffects(n_mc=int(n_mc), seed=int(seed))

    # share of W = 1 in the target environment (S = 0)
    w_prob = np.clip(rng.normal(0.0, params.noise_sd_w, size=n_mc), 0.0, 1.0)
    effects.target_group_share = float(np.mean(w_prob))

    for w in (0, 1):
        noise_r = rng.normal(0.0, params.noise_sd_r, size=n_mc)
        noise_c = rng.normal(0.0, params.noise_sd_c, size=n_mc)
        w_term = params.coef_c_given_w1 * w + params.coef_c_given_w0 * (1 - w)

        mediators = {}
        for a_star in (0, 1):
            r = params.coef_r_given_a * a_star + noise_r
            mediators[a_star] = params.coef_c_given_r * r + w_term + noise_c

        sde = _outcome_probability(params, 1, mediators[0], w) - _outcome_probability(params, 0, mediators[0], w)
        sie = _outcome_probability(params, 1, mediators[1], w) - _outcome_probability(params, 1, mediators[0], w)

        effects.sde_true[w] = float(np.mean(sde))
        effects.sie_true[w] = float(np.mean(sie))
        effects.sde_se[w] = float(np.std(sde, ddof=1) / np.sqrt(n_mc))
        effects.sie_se[w] = float(np.std(sie, ddof=1) / np.sqrt(n_mc))
        effects.mediator_shift[w] = float(np.mean(mediators[1] - mediators[0]))
        logger.info("Oracle group W=%d: SDE %.5f (se %.5f), SIE %.5f (se %.5f)", w,
                    effects.sde_true[w], effects.sde_se[w], effects.sie_true[w], effects.sie_se[w])

    worst = max(list(effects.sde_se.values()) + list(effects.sie_se.values()))
    if worst >= MAX_STANDARD_ERROR:
        raise EstimationError("oracle standard error {:.5f} exceeds {}".format(worst, MAX_STANDARD_ERROR), module="oracle")
    return effects
