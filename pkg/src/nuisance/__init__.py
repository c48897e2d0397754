from src.nuisance.fit import DENSITY_FLOOR, NuisanceFit, NuisanceOptions, fit_nuisance
from src.nuisance.gaussian import GaussianConditionalFit, fit_gaussian_conditional
from src.nuisance.logistic import LogisticFit, fit_logistic, fit_marginal
from src.nuisance.mediator_density import MediatorDistribution, mediator_intervention_density

__all__ = [
    "DENSITY_FLOOR",
    "NuisanceFit",
    "NuisanceOptions",
    "fit_nuisance",
    "GaussianConditionalFit",
    "fit_gaussian_conditional",
    "LogisticFit",
    "fit_logistic",
    "fit_marginal",
    "MediatorDistribution",
    "mediator_intervention_density",
]
