"""
Transported stochastic mediation effects by targeted maximum likelihood.

    psi(a, a*, w)  mean outcome in the target environment, group W = w, when A is
                   set to a and the mediator is drawn from g*_{C | a*, S=0, w}
    SDE(w)         psi(1, 0, w) - psi(0, 0, w)
    SIE(w)         psi(1, 1, w) - psi(1, 0, w)

Inference uses the efficient influence curve D = D_Y + D_g. D_Y is the
weighted residual of the targeted outcome fit on source rows. D_g carries the
estimation of the target-environment mediator and intermediate models g* is
built from: the gradient of psi in each model's parameters (central finite
differences) times that model's per-row influence. With `group_w=None` the
estimate is the mixture over the target environment's groups and D adds the
variation of the estimated group shares.

"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy.stats import norm

from src.errors import StratumError
from src.nuisance.fit import DENSITY_FLOOR, intermediate_rows, mediator_rows, model_frame
from src.nuisance.mediator_density import intermediate_nodes, mediator_intervention_density
from src.tmle.targeting import marginalize, target_outcome_model
from src.tmle.weights import compute_targeting_weights

logger = logging.getLogger(__name__)

GROUPS = (0, 1)
# relative step of the central differences taken in model parameters
GRADIENT_STEP = 1e-5


@dataclass
class PsiEstimate:
    a: int
    a_star: int
    group_w: Optional[int]
    psi: float
    eic_values: np.ndarray
    se: float
    environment: int = 0
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def to_dict(self):
        return {
            "a": self.a,
            "a_star": self.a_star,
            "group_w": self.group_w,
            "environment": self.environment,
            "psi": self.psi,
            "se": self.se,
            "mean_eic": float(np.mean(self.eic_values)),
            "diagnostics": dict(self.diagnostics),
        }


@dataclass
class EffectEstimate:
    kind: str
    group_w: Optional[int]
    point: float
    se: float
    ci_low: float
    ci_high: float
    weights_used: np.ndarray = field(default_factory=lambda: np.empty(0))
    eic_values: np.ndarray = field(default_factory=lambda: np.empty(0))

    def to_dict(self):
        return {
            "kind": self.kind,
            "group_w": self.group_w,
            "point": self.point,
            "se": self.se,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }


def standard_error(eic_values):
    n = len(eic_values)
    return float(np.std(eic_values, ddof=1) / np.sqrt(n)) if n > 1 else float("nan")


def wald_interval(point, se, alpha=0.05):
    z = norm.ppf(1.0 - alpha / 2.0)
    return point - z * se, point + z * se


class TransportedMediationEstimator:
    """
    Computes and caches psi for every (a, a*, group) tuple against one fitted
    set of nuisance models, so effects assembled from shared terms telescope
    exactly.
    """

    def __init__(self, fit, rows, environment=0, alpha=0.05):
        self.fit = fit
        self.rows = rows
        self.frame = rows.frame if hasattr(rows, "frame") else rows
        self.model_frame = model_frame(self.frame)
        self.environment = environment
        self.alpha = alpha
        self._psi = {}
        self._g_star = {}
        self._targeted = {}

    def g_star(self, a_star, group_w):
        key = (a_star, group_w)
        if key not in self._g_star:
            self._g_star[key] = mediator_intervention_density(self.fit, a_star, self.environment, group_w)
        return self._g_star[key]

    def target_rows(self, group_w):
        frame = self.frame
        rows = frame["s"].to_numpy() == self.environment
        if group_w is not None:
            rows &= frame["w"].to_numpy() == group_w
        return rows

    def _integrate(self, targeted, a, a_star, group_w, fit):
        g_star = mediator_intervention_density(fit, a_star, self.environment, group_w)
        r_nodes = intermediate_nodes(fit, a, self.environment) if fit.options.outcome_intermediate else None
        return marginalize(targeted, g_star, a, group_w, r_nodes=r_nodes)

    def _g_star_models(self, group_w):
        env = self.environment
        return [("mediator", (env, group_w), self.fit.mediator_model(env, group_w),
                 mediator_rows(self.model_frame, env, group_w), "c"),
                ("intermediate", env, self.fit.intermediate_model(env),
                 intermediate_rows(self.model_frame, env), "r")]

    def _g_star_influence(self, functional, group_w):
        """Per-row influence of `functional(fit)` through the models g* is built from."""
        n = len(self.frame)
        influence = np.zeros(n)
        for kind, key, model, rows, column in self._g_star_models(group_w):
            if not hasattr(model, "influence"):
                logger.warning("%s model %s exposes no influence; its estimation is left out of the EIC", kind, key)
                continue
            theta = model.parameters()
            gradient = np.zeros(len(theta))
            for j in range(len(theta)):
                step = GRADIENT_STEP * max(1.0, abs(theta[j]))
                shifted = np.zeros(len(theta))
                shifted[j] = step
                upper = functional(self.fit.with_model(kind, key, model.with_parameters(theta + shifted)))
                lower = functional(self.fit.with_model(kind, key, model.with_parameters(theta - shifted)))
                gradient[j] = (upper - lower) / (2.0 * step)
            fitted_rows = self.model_frame[rows]
            influence[rows] += n / len(fitted_rows) * (model.influence(fitted_rows, column) @ gradient)
        return influence

    def _group_psi(self, a, a_star, group_w):
        frame = self.frame
        n = len(frame)
        if not self.target_rows(group_w).any():
            raise StratumError("no rows with S={}, W={} to average over".format(self.environment, group_w))

        g_star = self.g_star(a_star, group_w)
        weights = compute_targeting_weights(self.fit, frame, a, a_star, group_w, environment=self.environment,
                                            g_star=g_star, return_details=True)
        targeted = target_outcome_model(self.fit.outcome_model, frame, weights.values)
        psi = self._integrate(targeted, a, a_star, group_w, self.fit)

        # D_Y on weighted source rows
        eic = np.zeros(n)
        active = weights.values > 0
        if active.any():
            outcome_data = {"a": float(a), "c": frame["c_obs"].to_numpy()[active],
                            "r": frame["r"].to_numpy()[active], "w": frame["w"].to_numpy()[active]}
            q_star = targeted.predict(outcome_data, n=int(active.sum()))
            eic[active] = weights.values[active] * (frame["y"].to_numpy()[active] - q_star)
        d_y_se = standard_error(eic)
        eic += self._g_star_influence(lambda fit: self._integrate(targeted, a, a_star, group_w, fit), group_w)

        estimate = PsiEstimate(a=a, a_star=a_star, group_w=group_w, psi=psi, eic_values=eic,
                               se=standard_error(eic), environment=self.environment,
                               diagnostics={"epsilon": targeted.epsilon, "score": targeted.score,
                                            "n_truncated": weights.n_truncated,
                                            "n_weighted": int(active.sum()),
                                            "se_outcome_part": d_y_se,
                                            "mean_eic": float(np.mean(eic))})
        self._targeted[(a, a_star, group_w)] = targeted
        return estimate

    def _mixture_psi(self, a, a_star):
        share = {w: self.fit.group_weight(w, self.environment) for w in GROUPS}
        groups = [w for w in GROUPS if share[w] > 0]
        parts = {w: self.psi(a, a_star, w) for w in groups}
        psi = sum(share[w] * parts[w].psi for w in groups)

        frame = self.frame
        env = frame["s"].to_numpy() == self.environment
        eic = np.zeros(len(frame))
        for w in groups:
            eic += share[w] * parts[w].eic_values
            in_group = env & (frame["w"].to_numpy() == w)
            # variation of the estimated group shares
            eic[in_group] += (parts[w].psi - psi) / self.fit.environment_share(self.environment)

        return PsiEstimate(a=a, a_star=a_star, group_w=None, psi=float(psi), eic_values=eic,
                           se=standard_error(eic), environment=self.environment,
                           diagnostics={"mean_eic": float(np.mean(eic)),
                                        "n_truncated": sum(p.diagnostics["n_truncated"] for p in parts.values())})

    def psi(self, a, a_star, group_w=None):
        key = (a, a_star, group_w)
        if key not in self._psi:
            if group_w is None:
                self._psi[key] = self._mixture_psi(a, a_star)
            else:
                self._psi[key] = self._group_psi(a, a_star, group_w)
            estimate = self._psi[key]
            logger.debug("psi(a=%d, a*=%d, W=%s) = %.5f (se %.5f, mean EIC %.2g)", a, a_star, group_w,
                         estimate.psi, estimate.se, estimate.diagnostics["mean_eic"])
        return self._psi[key]

    def _contrast(self, kind, high, low, group_w, arm_star):
        eic = high.eic_values - low.eic_values
        point = high.psi - low.psi
        se = standard_error(eic)
        ci_low, ci_high = wald_interval(point, se, self.alpha)
        return EffectEstimate(kind=kind, group_w=group_w, point=float(point), se=se,
                              ci_low=float(ci_low), ci_high=float(ci_high),
                              weights_used=self.weights_used(arm_star, group_w), eic_values=eic)

    def sde(self, group_w=None):
        return self._contrast("SDE", self.psi(1, 0, group_w), self.psi(0, 0, group_w), group_w, 0)

    def sie(self, group_w=None):
        return self._contrast("SIE", self.psi(1, 1, group_w), self.psi(1, 0, group_w), group_w, 1)

    def mediator_shift(self, group_w):
        """Mean of g*_{a*=1} minus mean of g*_{a*=0} in the target group, with its Wald interval."""
        if not self.target_rows(group_w).any():
            raise StratumError("no rows with S={}, W={}".format(self.environment, group_w))

        def shift(fit):
            return (mediator_intervention_density(fit, 1, self.environment, group_w).mean()
                    - mediator_intervention_density(fit, 0, self.environment, group_w).mean())

        point = shift(self.fit)
        eic = self._g_star_influence(shift, group_w)
        se = standard_error(eic)
        ci_low, ci_high = wald_interval(point, se, self.alpha)
        return EffectEstimate(kind="SHIFT", group_w=group_w, point=float(point), se=se,
                              ci_low=float(ci_low), ci_high=float(ci_high), eic_values=eic)

    def weights_used(self, a_star, group_w):
        """g* density at the observed mediators of the group's target rows (the w-bar weights)."""
        if group_w is None:
            return np.concatenate([self.weights_used(a_star, w) for w in GROUPS if self.target_rows(w).any()])
        return self.g_star(a_star, group_w).pdf(self.observed_mediators(group_w)["c_obs"].to_numpy())

    def importance_ratios(self, a_star, group_w, values):
        """g*_{a*} over the target mixture of g* across treatment arms, at mediator `values`."""
        densities = {a: self.g_star(a, group_w).pdf(values) for a in (0, 1)}
        mixture = sum(self.fit.treatment_probability(a, s=self.environment) * densities[a] for a in (0, 1))
        return densities[a_star] / np.maximum(mixture, DENSITY_FLOOR)

    def observed_mediators(self, group_w):
        frame = self.frame
        rows = self.target_rows(group_w) & (frame["m"].to_numpy() == 1)
        return frame[rows]

    def n_missing(self, group_w):
        """Target rows of the group whose mediator is unobserved."""
        return int(np.sum(self.target_rows(group_w) & (self.frame["m"].to_numpy() == 0)))

    def targeted_predictions(self, a, a_star, group_w):
        """Targeted outcome at A = a for the observed mediators of the group's target rows."""
        self.psi(a, a_star, group_w)
        observed = self.observed_mediators(group_w)
        data = {"a": float(a), "c": observed["c_obs"].to_numpy(), "r": observed["r"].to_numpy(),
                "w": observed["w"].to_numpy()}
        return self._targeted[(a, a_star, group_w)].predict(data, n=len(observed))

    def diagnostics(self):
        return {"psi": [estimate.to_dict() for estimate in self._psi.values()]}


def estimate_psi(fit, rows, a, a_star, group_w=None, environment=0):
    return TransportedMediationEstimator(fit, rows, environment=environment).psi(a, a_star, group_w)


def estimate_sde(fit, rows, group_w=None, environment=0):
    return TransportedMediationEstimator(fit, rows, environment=environment).sde(group_w)


def estimate_sie(fit, rows, group_w=None, environment=0):
    return TransportedMediationEstimator(fit, rows, environment=environment).sie(group_w)
