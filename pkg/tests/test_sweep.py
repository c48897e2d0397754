import importlib

import numpy as np
import pytest

from src.errors import ConfigError
from src.nuisance.fit import NuisanceOptions, fit_nuisance
from src.sensitivity.bounds import SensitivityAnalysis, SensitivityConfig
from src.sensitivity.sweep import (CURVE_COLUMNS, CurvePoint, SensitivityCurve, _running_extremes, empirical_r2,
                                   sweep)
from src.simulation.generate import generate
from src.simulation.missingness import MissingnessSpec, apply_missingness
from src.simulation.params import REFERENCE_PARAMS, StructuralParams
from src.tmle.estimator import TransportedMediationEstimator


def _point(group_w, r2, low, high, ci_low, ci_high):
    return CurvePoint(group_w=group_w, r2=r2, sie_lower=low, sie_upper=high, ci_low=ci_low, ci_high=ci_high,
                      point=(low + high) / 2, grid_value=r2)


@pytest.fixture
def curve():
    return SensitivityCurve(grid_kind="r2", points=[
        _point(0, 0.0, 0.10, 0.10, 0.05, 0.15),
        _point(0, 0.1, 0.05, 0.15, -0.01, 0.20),
        _point(0, 0.2, 0.01, 0.20, -0.05, 0.25),
        _point(1, 0.0, 0.30, 0.30, 0.20, 0.40),
        _point(1, 0.1, 0.25, 0.35, 0.15, 0.45),
    ])


def test_frame_columns(curve):
    frame = curve.to_frame()
    assert list(frame.columns) == CURVE_COLUMNS
    assert len(frame) == 5
    assert frame["contains_null"].tolist() == [False, True, True, False, False]


def test_null_crossings(curve):
    crossings = {c.group_w: c.r2_star for c in curve.null_crossings()}
    assert crossings == {0: 0.1, 1: None}


def test_curve_to_dict(curve):
    document = curve.to_dict()
    assert document["grid_kind"] == "r2"
    assert len(document["points"]) == 5
    assert document["null_crossings"][1] == {"group_w": 1, "r2_star": None}


def test_running_extremes_nest_intervals():
    points = [_point(0, 0.0, 0.1, 0.1, 0.0, 0.2), _point(0, 0.1, 0.12, 0.11, 0.05, 0.15)]
    _running_extremes(points)
    assert points[1].sie_lower == 0.1
    assert points[1].sie_upper == 0.11
    assert (points[1].ci_low, points[1].ci_high) == (0.0, 0.2)


def test_empirical_r2_zero_without_missingness(reference_fit, reference_table):
    estimator = TransportedMediationEstimator(reference_fit, reference_table)
    assert empirical_r2(estimator, estimator, 0) == 0.0


def test_empirical_r2_increases_with_missing_proportion(reference_fit, reference_table, options):
    truth = TransportedMediationEstimator(reference_fit, reference_table)
    spec = MissingnessSpec(mechanism="MNAR", lam=1.0, target_group=0)
    values = []
    for proportion in (0.1, 0.4, 0.7):
        masked = apply_missingness(reference_table, spec.with_proportion(proportion), seed=3)
        estimator = TransportedMediationEstimator(fit_nuisance(masked, options), masked)
        values.append(empirical_r2(estimator, truth, 0))
        assert empirical_r2(estimator, truth, 1) == 0.0
    assert 0.0 < values[0] < values[1] < values[2] <= 0.99


def test_missingness_curve_is_grouped_by_w(monkeypatch, small_table, options):
    def no_spread(table, options, group_ws, r2_values, config, environment=0):
        return np.zeros((config.n_bootstrap, len(group_ws), len(r2_values), 2))

    monkeypatch.setattr(importlib.import_module("src.sensitivity.sweep"), "bootstrap_bounds", no_spread)
    config = SensitivityConfig(n_bootstrap=100)
    spec = MissingnessSpec(mechanism="MNAR", lam=1.0, target_group=0)
    curve, _ = sweep(small_table, options, config, spec=spec, proportions=[0.0, 0.3])
    assert [p.group_w for p in curve.points] == [0, 0, 1, 1]
    assert [p.grid_value for p in curve.points] == [0.0, 0.3, 0.0, 0.3]
    assert curve.to_frame()["grid_value"].tolist() == [0.0, 0.3, 0.0, 0.3]
    # W=1 keeps every mediator, so its curve never widens
    assert all(p.r2 == 0.0 and p.sie_lower == p.sie_upper for p in curve.group(1))
    assert curve.group(0)[1].r2 > 0


def test_proportion_grid_needs_spec(small_table, options):
    config = SensitivityConfig(n_bootstrap=100)
    with pytest.raises(ConfigError):
        sweep(small_table, options, config, spec=None, proportions=[0.1])
    with pytest.raises(ConfigError):
        sweep(small_table, options, config, spec=MissingnessSpec(), proportions=[])


@pytest.fixture(scope="module")
def masked_small_table(small_table):
    spec = MissingnessSpec(mechanism="MNAR", lam=1.0, target_group=0, target_proportion=0.3)
    return apply_missingness(small_table, spec, seed=4)


@pytest.mark.slow
def test_r2_sweep_nests_and_crosses(masked_small_table, options):
    config = SensitivityConfig(r2_grid=(0.0, 0.3, 0.6), n_bootstrap=100, seed=1)
    curve, crossings = sweep(masked_small_table, options, config, groups=(0,))
    points = curve.group(0)
    assert [p.r2 for p in points] == [0.0, 0.3, 0.6]
    assert points[0].sie_lower == points[0].sie_upper == points[0].point
    assert points[2].sie_upper - points[2].sie_lower > points[1].sie_upper - points[1].sie_lower > 0
    for previous, current in zip(points, points[1:]):
        assert current.sie_lower <= previous.sie_lower
        assert current.sie_upper >= previous.sie_upper
        assert current.ci_low <= previous.ci_low
    for p in points:
        assert p.ci_low <= p.sie_lower <= p.sie_upper <= p.ci_high
    assert crossings[0].group_w == 0


@pytest.mark.slow
def test_missingness_sweep(small_table, options):
    config = SensitivityConfig(n_bootstrap=100, seed=2)
    spec = MissingnessSpec(mechanism="MNAR", lam=1.0, target_group=0)
    curve, _ = sweep(small_table, options, config, spec=spec, proportions=[0.0, 0.3], groups=(0,))
    first, second = curve.group(0)
    assert curve.grid_kind == "missingness"
    assert first.r2 == 0.0
    assert first.missing_fraction == 0.0
    assert second.missing_fraction == pytest.approx(0.3, abs=0.005)
    assert second.grid_value == 0.3
    assert 0.0 < second.r2 <= 0.99
    assert second.sie_lower < second.point < second.sie_upper
    assert np.isfinite([second.sie_lower, second.sie_upper, second.ci_low, second.ci_high]).all()


@pytest.mark.slow
def test_null_crossing_only_where_mediators_are_missing():
    table = generate(REFERENCE_PARAMS, n_source=5000, n_target=5000, seed=17)
    spec = MissingnessSpec(mechanism="MNAR", lam=1.0, target_group=0, target_proportion=0.3)
    masked = apply_missingness(table, spec, seed=17)
    config = SensitivityConfig(n_bootstrap=100, seed=17, n_jobs=-1)
    curve, crossings = sweep(masked, NuisanceOptions(), config)
    r2_star = {c.group_w: c.r2_star for c in crossings}
    assert r2_star[0] is not None and 0.14 <= r2_star[0] <= 0.44
    assert r2_star[1] is None
    widths = {w: [p.sie_upper - p.sie_lower for p in curve.group(w)] for w in (0, 1)}
    assert widths[1][-1] - widths[1][0] < 0.1 * (widths[0][-1] - widths[0][0])


@pytest.mark.slow
def test_bounds_nest_over_random_designs():
    rng = np.random.default_rng(2024)
    grid = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    violations = 0
    for design in range(50):
        params = StructuralParams(coef_r_given_a=rng.uniform(0.3, 1.0), coef_c_given_r=rng.uniform(0.5, 2.0),
                                  noise_sd_c=rng.uniform(0.3, 0.8), outcome_coef_a=rng.uniform(-0.5, 0.5),
                                  outcome_coef_c=rng.uniform(0.5, 3.0), outcome_coef_w=rng.uniform(-1.0, 1.0))
        table = generate(params, n_source=1000, n_target=1000, seed=design)
        spec = MissingnessSpec(mechanism="MNAR", lam=rng.uniform(1.0, 2.0), target_group=0,
                               target_proportion=rng.uniform(0.1, 0.5))
        masked = apply_missingness(table, spec, seed=design)
        analysis = SensitivityAnalysis(TransportedMediationEstimator(fit_nuisance(masked), masked), group_w=0)
        bounds = [analysis.bounds(r2) for r2 in grid]
        for (low, high), (next_low, next_high) in zip(bounds, bounds[1:]):
            violations += int(next_low > low + 1e-12 or next_high < high - 1e-12)
    assert violations == 0
