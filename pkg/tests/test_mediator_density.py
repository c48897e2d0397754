from dataclasses import replace

import numpy as np
import pytest
from scipy import integrate
from scipy.special import expit
from scipy.stats import norm

from src.errors import DegenerateDensityError
from src.nuisance.fit import NuisanceFit, NuisanceOptions
from src.nuisance.gaussian import GaussianConditionalFit
from src.nuisance.logistic import LogisticFit
from src.nuisance.mediator_density import gaussian_nodes, intermediate_nodes, mediator_intervention_density


def _logistic(names, coefficients):
    return LogisticFit(names=tuple(names), coefficients=np.asarray(coefficients, dtype=float),
                       converged=True, n_iterations=1, deviance=0.0)


def _gaussian(names, coefficients, sd):
    return GaussianConditionalFit(names=tuple(names), coefficients=np.asarray(coefficients, dtype=float),
                                  residual_sd=sd, n_obs=100)


def _hand_fit(mediator, intermediate, options):
    return NuisanceFit(
        outcome_model=_logistic(("a", "c", "r", "w"), [0.0, 0.2, 1.0, 0.0, 0.0]),
        mediator_models={(s, w): mediator for s in (0, 1) for w in (0, 1)},
        intermediate_models={0: intermediate, 1: intermediate},
        treatment_marginal=0.5,
        treatment_marginal_target=0.5,
        selection_marginal=0.5,
        group_marginal_target=0.3,
        group_marginal_source=0.5,
        options=options,
    )


def test_continuous_closed_form(reference_fit):
    g_star = mediator_intervention_density(reference_fit, a_star=1, s=0, w=0)
    weight, mean, sd = g_star.components[0]
    assert weight == 1.0
    # 1.5 * 0.7 + 0.8 and sqrt(0.75^2 + 0.5^2)
    assert mean == pytest.approx(1.85, abs=0.1)
    assert sd == pytest.approx(0.901, abs=0.05)


@pytest.fixture(scope="module")
def monte_carlo_fit(reference_fit):
    return replace(reference_fit, options=NuisanceOptions(marginalization="monte_carlo"))


def test_draws_match_closed_form(monte_carlo_fit):
    g_star = mediator_intervention_density(monte_carlo_fit, a_star=0, s=0, w=0, n_mc=4000)
    _, mean, sd = g_star.components[0]
    assert len(g_star.support) == 4000
    assert g_star.weights.sum() == pytest.approx(1.0)
    assert g_star.mean() == pytest.approx(mean, abs=4 * sd / np.sqrt(4000))


def test_density_integrates_to_one(reference_fit):
    g_star = mediator_intervention_density(reference_fit, a_star=1, s=0, w=1)
    total, _ = integrate.quad(lambda c: float(g_star.pdf(np.array([c]))[0]), -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_seeded_draws(monte_carlo_fit):
    first = mediator_intervention_density(monte_carlo_fit, 1, 0, 0, seed=3)
    second = mediator_intervention_density(monte_carlo_fit, 1, 0, 0, seed=3)
    other = mediator_intervention_density(monte_carlo_fit, 0, 0, 0, seed=3)
    np.testing.assert_array_equal(first.support, second.support)
    assert not np.array_equal(first.support, other.support)


def test_binary_mediator_sums_to_one():
    options = NuisanceOptions(mediator_type="binary", n_mc=2000)
    fit = _hand_fit(_logistic(("a", "r"), [-0.3, 0.5, 1.0]), _gaussian(("a",), [0.0, 0.7], 0.5), options)
    g_star = mediator_intervention_density(fit, a_star=1, s=0, w=0)
    assert g_star.kind == "binary"
    assert g_star.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert g_star.pdf(np.array([0.0, 1.0, 0.5])).tolist() == [g_star.weights[0], g_star.weights[1], 0.0]


def test_binary_mediator_binary_intermediate_is_exact():
    options = NuisanceOptions(mediator_type="binary", intermediate_type="binary")
    fit = _hand_fit(_logistic(("a", "r"), [-0.3, 0.5, 1.0]), _logistic(("a",), [0.1, 0.6]), options)
    g_star = mediator_intervention_density(fit, a_star=1, s=0, w=1)
    p_r1 = expit(0.7)
    expected = (1 - p_r1) * expit(0.2) + p_r1 * expit(1.2)
    assert g_star.weights[1] == pytest.approx(expected, abs=1e-12)


def test_continuous_mediator_binary_intermediate_mixture():
    options = NuisanceOptions(intermediate_type="binary", n_mc=100)
    fit = _hand_fit(_gaussian(("a", "r"), [0.0, 0.5, 2.0], 0.4), _logistic(("a",), [0.0, 0.0]), options)
    g_star = mediator_intervention_density(fit, a_star=1, s=0, w=0)
    np.testing.assert_allclose(g_star.components[:, 0], [0.5, 0.5])
    np.testing.assert_allclose(g_star.components[:, 1], [0.5, 2.5])


def test_degenerate_mediator_model():
    fit = _hand_fit(_gaussian(("a", "r"), [0.0, 0.5, 2.0], 0.0), _gaussian(("a",), [0.0, 0.7], 0.5),
                    NuisanceOptions())
    with pytest.raises(DegenerateDensityError):
        mediator_intervention_density(fit, a_star=1, s=0, w=0)


def test_quadrature_nodes_reproduce_moments(reference_fit):
    g_star = mediator_intervention_density(reference_fit, a_star=1, s=0, w=0)
    _, mean, sd = g_star.components[0]
    assert len(g_star.support) == reference_fit.options.n_nodes
    assert g_star.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert g_star.mean() == pytest.approx(mean, abs=1e-10)
    assert g_star.variance() == pytest.approx(sd ** 2, abs=1e-10)


def test_quadrature_integrates_logistic_against_closed_form_mixture():
    points, weights = gaussian_nodes([(0.3, -1.0, 0.5), (0.7, 2.0, 1.2)], 40)

    def density(c):
        return 0.3 * norm.pdf(c, -1.0, 0.5) + 0.7 * norm.pdf(c, 2.0, 1.2)

    expected, _ = integrate.quad(lambda c: expit(c) * density(c), -np.inf, np.inf)
    assert np.sum(weights * expit(points)) == pytest.approx(expected, abs=1e-8)
    assert np.sum(weights) == pytest.approx(1.0)


def test_binary_mediator_quadrature_agrees_with_draws():
    mediator, intermediate = _logistic(("a", "r"), [-0.3, 0.5, 1.0]), _gaussian(("a",), [0.0, 0.7], 0.5)
    exact = _hand_fit(mediator, intermediate, NuisanceOptions(mediator_type="binary"))
    sampled = _hand_fit(mediator, intermediate,
                        NuisanceOptions(mediator_type="binary", marginalization="monte_carlo", n_mc=20000))
    p_exact = mediator_intervention_density(exact, a_star=1, s=0, w=0).weights[1]
    p_sampled = mediator_intervention_density(sampled, a_star=1, s=0, w=0).weights[1]
    assert p_exact == pytest.approx(p_sampled, abs=0.01)


def test_intermediate_nodes():
    fit = _hand_fit(_gaussian(("a", "r"), [0.0, 0.5, 2.0], 0.4), _gaussian(("a",), [0.1, 0.7], 0.5),
                    NuisanceOptions())
    points, weights = intermediate_nodes(fit, a=1, s=0)
    assert np.sum(weights * points) == pytest.approx(0.8, abs=1e-10)
    binary = _hand_fit(_gaussian(("a", "r"), [0.0, 0.5, 2.0], 0.4), _logistic(("a",), [0.1, 0.6]),
                       NuisanceOptions(intermediate_type="binary"))
    points, weights = intermediate_nodes(binary, a=1, s=0)
    assert points.tolist() == [0.0, 1.0]
    assert weights[1] == pytest.approx(expit(0.7))
