"""
Linear-Gaussian conditional models, P(target | predictors) = Normal(x'b, residual_sd).
Used for the intermediate R and the continuous mediator C.

"""

import logging
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np
from scipy.stats import norm
from sklearn.linear_model import LinearRegression

from src.errors import DegenerateDensityError, SingularDesignError, StratumError
from src.nuisance.logistic import design_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianConditionalFit:
    names: Tuple[str, ...]
    coefficients: np.ndarray
    residual_sd: float
    n_obs: int

    @property
    def degenerate(self):
        return not self.residual_sd > 0

    def coefficient(self, name):
        return float(self.coefficients[1 + self.names.index(name)])

    def mean(self, data, n=None):
        return design_matrix(data, self.names, n=n) @ self.coefficients

    def density(self, values, data, n=None):
        if self.degenerate:
            raise DegenerateDensityError("residual sd is zero; the conditional density is degenerate")
        return norm.pdf(np.asarray(values, dtype=float), loc=self.mean(data, n=n), scale=self.residual_sd)

    def sample(self, data, rng, n=None):
        if self.degenerate:
            raise DegenerateDensityError("residual sd is zero; cannot sample the conditional")
        location = self.mean(data, n=n)
        return location + rng.normal(0.0, self.residual_sd, size=location.shape)

    def parameters(self):
        """Coefficients followed by the residual variance."""
        return np.concatenate([self.coefficients, [self.residual_sd ** 2]])

    def with_parameters(self, theta):
        theta = np.asarray(theta, dtype=float)
        return replace(self, coefficients=theta[:-1].copy(), residual_sd=float(np.sqrt(max(theta[-1], 0.0))))

    def influence(self, rows, target_column):
        """
        Per-row influence of the fitted parameters, one row per fitting observation
        and one column per entry of `parameters()`. Each column averages to zero over
        the rows the model was fitted on.
        """
        y = np.asarray(rows[target_column], dtype=float)
        x = design_matrix(rows, self.names, n=len(y))
        residuals = y - x @ self.coefficients
        bread = np.linalg.inv(x.T @ x / len(y))
        scores = (x * residuals[:, None]) @ bread.T
        variance = residuals ** 2 - np.mean(residuals ** 2)
        return np.column_stack([scores, variance])

    def to_dict(self):
        return {
            "coefficients": dict(zip(("intercept",) + self.names, map(float, self.coefficients))),
            "residual_sd": self.residual_sd,
            "n_obs": self.n_obs,
        }


def fit_gaussian_conditional(rows, target_column, predictor_columns=()):
    predictor_columns = tuple(predictor_columns)
    y = np.asarray(rows[target_column], dtype=float)
    n, p = len(y), len(predictor_columns)
    if n < p + 2:
        raise StratumError("{} ~ {} needs at least {} rows, got {}".format(
            target_column, " + ".join(predictor_columns) or "1", p + 2, n), module="nuisance")

    if p == 0:
        coefficients = np.array([y.mean()])
        residuals = y - y.mean()
    else:
        x = design_matrix(rows, predictor_columns, n=n)[:, 1:]
        clf = LinearRegression()
        clf.fit(x, y)
        if clf.rank_ < p:
            raise SingularDesignError("design for {} ~ {} is rank deficient".format(
                target_column, " + ".join(predictor_columns)))
        coefficients = np.concatenate([[clf.intercept_], clf.coef_])
        residuals = y - clf.predict(x)

    rss = float(residuals @ residuals)
    residual_sd = float(np.sqrt(rss / (n - p - 1)))
    if residual_sd < 1e-12 * max(1.0, float(np.std(y))):
        logger.warning("Fit of %s has zero residual variance; density evaluation will be rejected", target_column)
        residual_sd = 0.0
    return GaussianConditionalFit(names=predictor_columns, coefficients=coefficients,
                                  residual_sd=residual_sd, n_obs=n)
