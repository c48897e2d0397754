import pytest

from src.nuisance.fit import NuisanceOptions, fit_nuisance
from src.simulation.generate import generate
from src.simulation.missingness import MissingnessSpec, apply_missingness
from src.simulation.params import REFERENCE_PARAMS


@pytest.fixture(scope="session")
def reference_table():
    return generate(REFERENCE_PARAMS, n_source=2000, n_target=2000, seed=11)


@pytest.fixture(scope="session")
def small_table():
    return generate(REFERENCE_PARAMS, n_source=1000, n_target=1000, seed=5)


@pytest.fixture(scope="session")
def options():
    return NuisanceOptions(n_mc=500)


@pytest.fixture(scope="session")
def reference_fit(reference_table, options):
    return fit_nuisance(reference_table, options)


@pytest.fixture(scope="session")
def masked_table(reference_table):
    spec = MissingnessSpec(mechanism="MNAR", lam=1.0, target_group=0, target_proportion=0.3)
    return apply_missingness(reference_table, spec, seed=7)


def pytest_addoption(parser):
    parser.addoption("--update-golden", action="store_true", default=False,
                     help="rewrite the expected run outputs under tests/golden")


@pytest.fixture
def update_golden(request):
    return request.config.getoption("--update-golden")
