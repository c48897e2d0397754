"""
Maximum-likelihood logistic regression by iteratively reweighted least squares
(Newton-Raphson on the log likelihood), optionally ridge-penalized.

Backs the initial outcome regression and every binary model or marginal the
estimator needs (treatment, selection and group shares, binary mediators).

"""

import logging
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np
from scipy.special import expit

from src.errors import ConvergenceError, SeparationError, SingularDesignError

logger = logging.getLogger(__name__)

SCORE_TOLERANCE = 1e-8
MAX_ITERATIONS = 100
PROBABILITY_BOUND = 1e-12
SEPARATION_LOGIT = 30.0
# every row predicted to within this means the outcome is perfectly separated
SEPARATED_RESIDUAL = 1e-6


def design_matrix(data, columns, n=None):
    """Intercept plus `columns` taken from a DataFrame or a mapping of arrays/scalars."""
    if n is None:
        n = len(data) if hasattr(data, "columns") else max(
            [np.size(data[c]) for c in columns] + [1])
    matrix = np.ones((n, len(columns) + 1))
    for j, name in enumerate(columns):
        matrix[:, j + 1] = np.broadcast_to(np.asarray(data[name], dtype=float), (n,))
    return matrix


@dataclass(frozen=True)
class LogisticFit:
    names: Tuple[str, ...]
    coefficients: np.ndarray
    converged: bool
    n_iterations: int
    deviance: float
    ridge: float = 0.0

    @property
    def intercept(self):
        return float(self.coefficients[0])

    def coefficient(self, name):
        return float(self.coefficients[1 + self.names.index(name)])

    def linear_predictor(self, data, n=None):
        return design_matrix(data, self.names, n=n) @ self.coefficients

    def predict(self, data, n=None):
        return np.clip(expit(self.linear_predictor(data, n=n)), PROBABILITY_BOUND, 1.0 - PROBABILITY_BOUND)

    def density(self, values, data, n=None):
        """Probability mass of the binary `values` given `data`."""
        p = self.predict(data, n=n)
        return np.where(np.asarray(values) == 1, p, 1.0 - p)

    def sample(self, data, rng, n=None):
        return rng.binomial(1, self.predict(data, n=n))

    def parameters(self):
        return self.coefficients.copy()

    def with_parameters(self, theta):
        return replace(self, coefficients=np.asarray(theta, dtype=float).copy())

    def influence(self, rows, target_column):
        """Per-row influence of the coefficients over the rows the model was fitted on."""
        y = np.asarray(rows[target_column], dtype=float)
        x = design_matrix(rows, self.names, n=len(y))
        p = expit(x @ self.coefficients)
        penalty = _penalty(x.shape[1], self.ridge) / len(y)
        information = (x * (p * (1.0 - p))[:, None]).T @ x / len(y) + np.diag(penalty)
        scores = x * (y - p)[:, None] - penalty * self.coefficients
        return scores @ np.linalg.inv(information).T

    def to_dict(self):
        return {
            "coefficients": dict(zip(("intercept",) + self.names, map(float, self.coefficients))),
            "converged": self.converged,
            "n_iterations": self.n_iterations,
            "deviance": self.deviance,
        }


def _penalty(p, ridge):
    # the intercept is never penalized
    penalty = np.full(p, float(ridge))
    penalty[0] = 0.0
    return penalty


def _separation(outcome_column):
    return SeparationError("logistic fit for {} diverges (perfect separation); set ridge > 0".format(outcome_column))


def fit_logistic(rows, outcome_column, predictor_columns=(), ridge=0.0):
    predictor_columns = tuple(predictor_columns)
    y = np.asarray(rows[outcome_column], dtype=float)
    x = design_matrix(rows, predictor_columns, n=len(y))

    if len(np.unique(y)) < 2:
        raise SeparationError("outcome {} takes a single value; the likelihood has no maximum "
                              "(use ridge > 0 or check the data)".format(outcome_column))
    if not np.all(np.isfinite(x)):
        raise SingularDesignError("predictors of {} contain non-finite values".format(outcome_column))
    if ridge == 0 and np.linalg.matrix_rank(x) < x.shape[1]:
        raise SingularDesignError("design for {} ~ {} is rank deficient".format(
            outcome_column, " + ".join(predictor_columns) or "1"))

    penalty = _penalty(x.shape[1], ridge)
    beta = np.zeros(x.shape[1])
    beta[0] = np.log(y.mean() / (1.0 - y.mean()))

    converged = False
    iteration = 0
    for iteration in range(1, MAX_ITERATIONS + 1):
        eta = x @ beta
        p = expit(eta)
        score = x.T @ (y - p) - penalty * beta
        if np.max(np.abs(score)) < SCORE_TOLERANCE:
            converged = True
            break
        weights = p * (1.0 - p)
        hessian = (x * weights[:, None]).T @ x + np.diag(penalty)
        try:
            step = np.linalg.solve(hessian, score)
        except np.linalg.LinAlgError:
            if ridge == 0 and np.max(np.abs(eta)) > SEPARATION_LOGIT:
                raise _separation(outcome_column)
            raise SingularDesignError("information matrix for {} is singular".format(outcome_column))
        beta = beta + step

    eta = x @ beta
    if ridge == 0 and (not np.all(np.isfinite(eta))
                       or np.max(np.abs(y - expit(eta))) < SEPARATED_RESIDUAL
                       or not converged and np.max(np.abs(eta)) > SEPARATION_LOGIT):
        raise _separation(outcome_column)
    if not converged:
        raise ConvergenceError("logistic fit for {} did not converge in {} iterations"
                               .format(outcome_column, MAX_ITERATIONS))

    p = np.clip(expit(eta), PROBABILITY_BOUND, 1.0 - PROBABILITY_BOUND)
    deviance = float(-2.0 * np.sum(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
    logger.debug("Fitted logistic %s ~ %s in %d iterations", outcome_column, predictor_columns, iteration)
    return LogisticFit(names=predictor_columns, coefficients=beta, converged=converged,
                       n_iterations=iteration, deviance=deviance, ridge=float(ridge))


def fit_marginal(values):
    """P(value = 1) as an intercept-only logistic fit (the empirical proportion)."""
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return float("nan")
    if np.all(values == values[0]):
        # boundary MLE; positivity checks downstream report it
        return float(values[0])
    fit = fit_logistic({"value": values}, "value")
    return float(expit(fit.intercept))
