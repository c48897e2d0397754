"""
The stochastic intervention g*_{C | a*, s, w}: the mediator distribution under
treatment level a* in environment s and group w, mixed over the intermediate R,

    g*(c) = sum_r P(C = c | A = a*, R = r, S = s, W = w) * P(R = r | A = a*, S = s)

Binary mediators are represented exactly as a two-point mass. Continuous
mediators carry a closed-form density (a Gaussian mixture) used wherever g* is
evaluated at observed mediator values, plus integration points for
marginalization: Gauss-Hermite nodes of that mixture by default, or `n_mc`
seeded draws (R from its conditional, then C from its conditional) with
`marginalization="monte_carlo"`.

"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.stats import norm

from src.errors import DegenerateDensityError


@dataclass(frozen=True)
class MediatorDistribution:
    kind: str
    a_star: int
    s: int
    w: int
    support: np.ndarray
    weights: np.ndarray
    # (mixing weight, mean, sd) rows of the Gaussian mixture; empty for binary mediators
    components: np.ndarray

    def pdf(self, values):
        values = np.asarray(values, dtype=float)
        if self.kind == "binary":
            p1 = self.weights[1]
            return np.where(values == 1, p1, np.where(values == 0, self.weights[0], 0.0))
        density = np.zeros_like(values)
        for weight, mean, sd in self.components:
            density = density + weight * norm.pdf(values, loc=mean, scale=sd)
        return density

    def mean(self):
        return float(np.sum(self.support * self.weights))

    def variance(self):
        return float(np.sum(self.weights * (self.support - self.mean()) ** 2))


def gaussian_nodes(components, n_nodes):
    """Gauss-Hermite points and weights integrating against a mixture of (weight, mean, sd) rows."""
    x, h = hermgauss(n_nodes)
    points, weights = [], []
    for weight, mean, sd in components:
        points.append(mean + np.sqrt(2.0) * sd * x)
        weights.append(weight * h / np.sqrt(np.pi))
    return np.concatenate(points), np.concatenate(weights)


def _check(model, label):
    if getattr(model, "degenerate", False):
        raise DegenerateDensityError("{} model has zero residual sd; g* is degenerate".format(label))


def intermediate_nodes(fit, a, s):
    """Integration points and weights for R | A = a, S = s."""
    intermediate = fit.intermediate_model(s)
    if fit.options.intermediate_type == "binary":
        p_r1 = float(intermediate.predict({"a": a}, n=1)[0])
        return np.array([0.0, 1.0]), np.array([1.0 - p_r1, p_r1])
    _check(intermediate, "intermediate")
    r_mean = float(intermediate.mean({"a": a}, n=1)[0])
    return gaussian_nodes([(1.0, r_mean, intermediate.residual_sd)], fit.options.n_nodes)


def mediator_intervention_density(fit, a_star, s, w, n_mc=None, seed=None):
    mediator = fit.mediator_model(s, w)
    intermediate = fit.intermediate_model(s)
    _check(mediator, "mediator")
    _check(intermediate, "intermediate")

    options = fit.options
    n_mc = options.n_mc if n_mc is None else n_mc
    seed = options.mc_seed if seed is None else seed
    rng = np.random.default_rng([int(seed), int(a_star), int(s), int(w)])

    if options.intermediate_type == "binary":
        p_r1 = float(intermediate.predict({"a": a_star}, n=1)[0])
        r_values, r_weights = np.array([0.0, 1.0]), np.array([1.0 - p_r1, p_r1])
    else:
        r_values = None

    if options.mediator_type == "binary":
        if r_values is not None:
            p_c1 = mediator.predict({"a": a_star, "r": r_values}, n=2)
            p1 = float(np.sum(r_weights * p_c1))
        elif options.marginalization == "quadrature":
            r_nodes, r_node_weights = intermediate_nodes(fit, a_star, s)
            p_c1 = mediator.predict({"a": a_star, "r": r_nodes}, n=len(r_nodes))
            p1 = float(np.sum(r_node_weights * p_c1))
        else:
            r_draws = intermediate.sample({"a": a_star}, rng, n=n_mc)
            p1 = float(np.mean(mediator.predict({"a": a_star, "r": r_draws}, n=n_mc)))
        return MediatorDistribution(kind="binary", a_star=a_star, s=s, w=w,
                                    support=np.array([0.0, 1.0]), weights=np.array([1.0 - p1, p1]),
                                    components=np.empty((0, 3)))

    beta_r = mediator.coefficient("r")
    if r_values is not None:
        means = mediator.mean({"a": a_star, "r": r_values}, n=2)
        components = np.column_stack([r_weights, means, np.full(2, mediator.residual_sd)])
    else:
        # linear-Gaussian chain: the mixture over R is itself Gaussian
        r_mean = float(intermediate.mean({"a": a_star}, n=1)[0])
        c_mean = float(mediator.mean({"a": a_star, "r": r_mean}, n=1)[0])
        c_sd = float(np.sqrt(mediator.residual_sd ** 2 + (beta_r * intermediate.residual_sd) ** 2))
        components = np.array([[1.0, c_mean, c_sd]])

    if options.marginalization == "quadrature":
        support, weights = gaussian_nodes(components, options.n_nodes)
    else:
        if r_values is not None:
            r_draws = rng.binomial(1, r_weights[1], size=n_mc).astype(float)
        else:
            r_draws = intermediate.sample({"a": a_star}, rng, n=n_mc)
        support = mediator.sample({"a": a_star, "r": r_draws}, rng, n=n_mc)
        weights = np.full(n_mc, 1.0 / n_mc)
    return MediatorDistribution(kind="continuous", a_star=a_star, s=s, w=w, support=support,
                                weights=weights, components=components)
