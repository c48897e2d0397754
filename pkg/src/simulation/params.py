"""
Parameters of the structural equations used to simulate data:

    A ~ Bernoulli(p_treat)
    W ~ Bernoulli(clamp(w_source_shift * S + Normal(0, noise_sd_w)))
    R := coef_r_given_a * A + Normal(0, noise_sd_r)
    C := coef_c_given_r * R + coef_c_given_w1 * W + coef_c_given_w0 * (1 - W) + Normal(0, noise_sd_c)
    Y ~ Bernoulli(expit(outcome_coef_a * A + outcome_coef_c * C + outcome_coef_w * W))

"""

import math
from dataclasses import asdict, dataclass, fields

from src.errors import ConfigError


@dataclass(frozen=True)
class StructuralParams:
    p_treat: float = 0.5
    w_source_shift: float = 0.5
    noise_sd_w: float = 0.1
    coef_r_given_a: float = 0.7
    noise_sd_r: float = 0.5
    coef_c_given_r: float = 1.5
    coef_c_given_w1: float = 0.2
    coef_c_given_w0: float = 0.8
    noise_sd_c: float = 0.5
    outcome_coef_a: float = 0.2
    outcome_coef_c: float = 2.5
    outcome_coef_w: float = -0.7

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError("dgp parameter {} must be finite, got {!r}".format(f.name, value), module="simulation")
        if not 0.0 <= self.p_treat <= 1.0:
            raise ConfigError("p_treat must lie in [0, 1]", module="simulation")
        # zero noise is allowed for degenerate checks; negative never is
        for name in ("noise_sd_w", "noise_sd_r", "noise_sd_c"):
            if getattr(self, name) < 0:
                raise ConfigError("{} must be nonnegative".format(name), module="simulation")

    def mediator_mean(self, a_star, w):
        """Closed-form E[C | A = a*, W = w] of the linear-Gaussian chain."""
        w_term = self.coef_c_given_w1 * w + self.coef_c_given_w0 * (1 - w)
        return self.coef_c_given_r * self.coef_r_given_a * a_star + w_term

    def mediator_sd(self):
        return math.sqrt((self.coef_c_given_r * self.noise_sd_r) ** 2 + self.noise_sd_c ** 2)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, values):
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError("unknown dgp parameters: {}".format(", ".join(sorted(unknown))), module="simulation")
        return cls(**{k: float(v) for k, v in values.items()})


REFERENCE_PARAMS = StructuralParams()
