import numpy as np
import pytest
from scipy.special import expit

from src.errors import SeparationError, SingularDesignError
from src.nuisance.logistic import design_matrix, fit_logistic, fit_marginal


@pytest.fixture(scope="module")
def logistic_rows():
    rng = np.random.default_rng(0)
    x = rng.normal(size=20000)
    z = rng.binomial(1, 0.4, size=20000)
    y = rng.binomial(1, expit(-0.5 + 1.2 * x - 0.8 * z))
    return {"x": x, "z": z, "y": y}


def test_recovers_coefficients(logistic_rows):
    fit = fit_logistic(logistic_rows, "y", ("x", "z"))
    assert fit.converged
    assert fit.intercept == pytest.approx(-0.5, abs=0.1)
    assert fit.coefficient("x") == pytest.approx(1.2, abs=0.1)
    assert fit.coefficient("z") == pytest.approx(-0.8, abs=0.1)


def test_score_vanishes_at_solution(logistic_rows):
    fit = fit_logistic(logistic_rows, "y", ("x", "z"))
    x = design_matrix(logistic_rows, ("x", "z"))
    score = x.T @ (logistic_rows["y"] - fit.predict(logistic_rows))
    assert np.max(np.abs(score)) < 1e-6


def test_ridge_shrinks_slopes(logistic_rows):
    plain = fit_logistic(logistic_rows, "y", ("x",))
    shrunk = fit_logistic(logistic_rows, "y", ("x",), ridge=5000.0)
    assert abs(shrunk.coefficient("x")) < abs(plain.coefficient("x"))


def test_density_of_binary_values(logistic_rows):
    fit = fit_logistic(logistic_rows, "y", ("x",))
    data = {"x": np.array([0.0, 0.0])}
    p = fit.predict(data)
    np.testing.assert_allclose(fit.density(np.array([1, 0]), data), [p[0], 1 - p[1]])


def test_scalar_predictors_broadcast(logistic_rows):
    fit = fit_logistic(logistic_rows, "y", ("x", "z"))
    assert fit.predict({"x": 0.5, "z": np.array([0, 1, 1])}, n=3).shape == (3,)


def test_perfect_separation():
    x = np.repeat([-2.0, -1.0, 1.0, 2.0], 50)
    rows = {"x": x, "y": (x > 0).astype(int)}
    with pytest.raises(SeparationError):
        fit_logistic(rows, "y", ("x",))


def test_separation_resolved_by_ridge():
    x = np.repeat([-2.0, -1.0, 1.0, 2.0], 50)
    fit = fit_logistic({"x": x, "y": (x > 0).astype(int)}, "y", ("x",), ridge=1.0)
    assert fit.converged
    assert fit.coefficient("x") > 0


def test_constant_outcome():
    with pytest.raises(SeparationError):
        fit_logistic({"x": np.arange(10.0), "y": np.ones(10)}, "y", ("x",))


def test_rank_deficient_design(logistic_rows):
    rows = dict(logistic_rows, x2=2.0 * logistic_rows["x"])
    with pytest.raises(SingularDesignError):
        fit_logistic(rows, "y", ("x", "x2"))


def test_marginal_is_empirical_proportion():
    values = np.array([1, 0, 0, 1, 1, 0, 1, 1])
    assert fit_marginal(values) == pytest.approx(values.mean(), abs=1e-9)


def test_marginal_edge_cases():
    assert np.isnan(fit_marginal([]))
    assert fit_marginal([0, 0, 0]) == 0.0
    assert fit_marginal([1, 1]) == 1.0


def test_influence_is_centered_and_matches_inverse_information(logistic_rows):
    fit = fit_logistic(logistic_rows, "y", ("x", "z"))
    influence = fit.influence(logistic_rows, "y")
    n = len(logistic_rows["y"])
    np.testing.assert_allclose(influence.mean(axis=0), 0.0, atol=1e-6)
    x = design_matrix(logistic_rows, ("x", "z"))
    p = fit.predict(logistic_rows)
    inverse_information = np.linalg.inv((x * (p * (1 - p))[:, None]).T @ x)
    np.testing.assert_allclose(np.cov(influence, rowvar=False) / n, inverse_information, rtol=0.1, atol=1e-6)
    assert np.array_equal(fit.with_parameters(fit.parameters()).coefficients, fit.coefficients)
