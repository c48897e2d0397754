"""
Fits the conditional models the transported TMLE consumes:

    outcome       Y ~ A + C + W (+ R)        logistic, source rows (S=1) with C observed
    mediator      C ~ A + R                  per (S, W) cell, rows with C observed
    intermediate  R ~ A                      per S, all rows
    marginals     P(A=1 | S), P(S=1), P(W=1 | S)

Continuous targets get linear-Gaussian models, binary targets logistic ones.
Alternative fitters can be plugged in through `fitters`. R enters the outcome
model only with `outcome_intermediate=True`.

"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional

from src.errors import ConfigError, StratumError
from src.nuisance.gaussian import fit_gaussian_conditional
from src.nuisance.logistic import fit_logistic, fit_marginal

logger = logging.getLogger(__name__)

VARIABLE_TYPES = ("continuous", "binary")
MARGINALIZATIONS = ("quadrature", "monte_carlo")
OUTCOME_PREDICTORS = ("a", "c", "w")
MEDIATOR_PREDICTORS = ("a", "r")
INTERMEDIATE_PREDICTORS = ("a",)
DENSITY_FLOOR = 1e-300


@dataclass(frozen=True)
class NuisanceOptions:
    ridge: float = 0.0
    truncation_quantile: Optional[float] = 0.999
    n_mc: int = 1000
    mediator_type: str = "continuous"
    intermediate_type: str = "continuous"
    mc_seed: int = 0
    marginalization: str = "quadrature"
    n_nodes: int = 40
    outcome_intermediate: bool = False

    def __post_init__(self):
        if self.ridge < 0:
            raise ConfigError("ridge must be >= 0", module="nuisance")
        if self.truncation_quantile is not None and not 0.0 < self.truncation_quantile <= 1.0:
            raise ConfigError("truncation_quantile must lie in (0, 1]", module="nuisance")
        if self.n_mc < 1:
            raise ConfigError("n_mc must be positive", module="nuisance")
        if self.n_nodes < 2:
            raise ConfigError("n_nodes must be at least 2", module="nuisance")
        for name in ("mediator_type", "intermediate_type"):
            if getattr(self, name) not in VARIABLE_TYPES:
                raise ConfigError("{} must be one of {}".format(name, VARIABLE_TYPES), module="nuisance")
        if self.marginalization not in MARGINALIZATIONS:
            raise ConfigError("marginalization must be one of {}".format(MARGINALIZATIONS), module="nuisance")

    @property
    def outcome_predictors(self):
        return OUTCOME_PREDICTORS + ("r",) if self.outcome_intermediate else OUTCOME_PREDICTORS


DEFAULT_FITTERS = {
    "binary": lambda rows, target, predictors, options: fit_logistic(rows, target, predictors, ridge=options.ridge),
    "continuous": lambda rows, target, predictors, options: fit_gaussian_conditional(rows, target, predictors),
}


@dataclass(frozen=True)
class NuisanceFit:
    outcome_model: Any
    mediator_models: Dict[tuple, Any]
    intermediate_models: Dict[int, Any]
    treatment_marginal: float
    treatment_marginal_target: float
    selection_marginal: float
    group_marginal_target: float
    group_marginal_source: float = float("nan")
    options: NuisanceOptions = field(default_factory=NuisanceOptions)

    def mediator_model(self, s, w):
        try:
            return self.mediator_models[(s, w)]
        except KeyError:
            raise StratumError("no mediator model for stratum S={}, W={}".format(s, w), module="nuisance")

    def intermediate_model(self, s):
        try:
            return self.intermediate_models[s]
        except KeyError:
            raise StratumError("no intermediate model for environment S={}".format(s), module="nuisance")

    def treatment_probability(self, a, s=1):
        p1 = self.treatment_marginal if s == 1 else self.treatment_marginal_target
        return p1 if a == 1 else 1.0 - p1

    def environment_share(self, s, w=None):
        """P(S=s) or, for a group, P(S=s, W=w)."""
        p_env = self.selection_marginal if s == 1 else 1.0 - self.selection_marginal
        if w is None:
            return p_env
        return p_env * self.group_weight(w, s)

    def target_share(self, w=None):
        return self.environment_share(0, w)

    def group_weight(self, w, s=0):
        """P(W=w | S=s)."""
        p1 = self.group_marginal_target if s == 0 else self.group_marginal_source
        return p1 if w == 1 else 1.0 - p1

    def group_weight_target(self, w):
        return self.group_weight(w, 0)

    def with_model(self, kind, key, model):
        """Copy with one mediator (key = (s, w)) or intermediate (key = s) model swapped."""
        if kind == "mediator":
            return replace(self, mediator_models={**self.mediator_models, key: model})
        return replace(self, intermediate_models={**self.intermediate_models, key: model})

    def to_dict(self):
        return {
            "outcome_model": self.outcome_model.to_dict(),
            "mediator_models": {"s{}_w{}".format(*k): m.to_dict() for k, m in sorted(self.mediator_models.items())},
            "intermediate_models": {"s{}".format(k): m.to_dict() for k, m in sorted(self.intermediate_models.items())},
            "treatment_marginal": self.treatment_marginal,
            "treatment_marginal_target": self.treatment_marginal_target,
            "selection_marginal": self.selection_marginal,
            "group_marginal_target": self.group_marginal_target,
            "group_marginal_source": self.group_marginal_source,
        }


def model_frame(table):
    frame = table.frame if hasattr(table, "frame") else table
    return frame.rename(columns={"c_obs": "c"})


def mediator_rows(frame, s, w):
    """Rows the (S=s, W=w) mediator model is fitted on."""
    return (frame["s"].to_numpy() == s) & (frame["w"].to_numpy() == w) & (frame["m"].to_numpy() == 1)


def intermediate_rows(frame, s):
    return frame["s"].to_numpy() == s


def fit_nuisance(table, options=None, fitters=None):
    options = options or NuisanceOptions()
    fitters = dict(DEFAULT_FITTERS, **(fitters or {}))
    frame = model_frame(table)
    complete = frame[frame["m"] == 1]
    source = frame[frame["s"] == 1]
    target = frame[frame["s"] == 0]
    if source.empty or target.empty:
        raise StratumError("both source (S=1) and target (S=0) rows are required", module="nuisance")

    outcome_rows = complete[complete["s"] == 1]
    outcome_model = fit_logistic(outcome_rows, "y", options.outcome_predictors, ridge=options.ridge)

    mediator_models = {}
    for (s, w), rows in complete.groupby(["s", "w"]):
        try:
            mediator_models[(int(s), int(w))] = fitters[options.mediator_type](
                rows, "c", MEDIATOR_PREDICTORS, options)
        except StratumError as e:
            logger.warning("Skipping mediator model for S=%d, W=%d: %s", s, w, e)

    intermediate_models = {}
    for s, rows in frame.groupby("s"):
        intermediate_models[int(s)] = fitters[options.intermediate_type](
            rows, "r", INTERMEDIATE_PREDICTORS, options)

    fit = NuisanceFit(
        outcome_model=outcome_model,
        mediator_models=mediator_models,
        intermediate_models=intermediate_models,
        treatment_marginal=fit_marginal(source["a"]),
        treatment_marginal_target=fit_marginal(target["a"]),
        selection_marginal=fit_marginal(frame["s"]),
        group_marginal_target=fit_marginal(target["w"]),
        group_marginal_source=fit_marginal(source["w"]),
        options=options,
    )
    logger.debug("Fitted nuisance models on %d rows (%d complete cases)", len(frame), len(complete))
    return fit
