"""
Command-line entry point.

    medtransport --mode simulate --config configs/reference_simulation.yaml --out-dir out/
    medtransport --mode sweep --missingness 0,0.1,0.3,0.5,0.7,0.9 --target-group 0
    medtransport --mode analyze --input site.csv --r2-grid 0.1

Exit status: 0 success, 1 unexpected failure, 2 configuration error,
3 schema or data error, 4 estimation error.

"""

import argparse
import logging
import sys
from dataclasses import replace

from src.cli.config import MODES, RunConfig, apply_overrides, load_config, thread_count
from src.cli.results import ResultDocument, write_curve_csv, write_json
from src.errors import MedTransportError
from src.extractors.csv_loader import load_csv, write_table_csv
from src.nuisance.fit import fit_nuisance
from src.oracle.oracle import oracle_effects
from src.sensitivity.bootstrap import bootstrap_bounds, percentile_interval
from src.sensitivity.bounds import SensitivityAnalysis
from src.sensitivity.sweep import CurvePoint, SensitivityCurve, sweep
from src.simulation.generate import generate
from src.simulation.missingness import MissingnessSpec, apply_missingness
from src.tmle.estimator import GROUPS, TransportedMediationEstimator

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def build_parser():
    parser = argparse.ArgumentParser(
        prog="medtransport",
        description="Transported stochastic mediation effects with missing-mediator sensitivity analysis")
    parser.add_argument("--mode", choices=MODES, default=None)
    parser.add_argument("--config", type=str, default=None, help="YAML run configuration")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--input", type=str, default=None, help="CSV with columns S, A, W, R, C, Y")
    parser.add_argument("--out-dir", type=str, default=None)
    parser.add_argument("--r2-grid", type=str, default=None, help="comma-separated R2 values")
    parser.add_argument("--missingness", type=str, default=None,
                        help="missing proportion, or comma-separated proportions for a sweep")
    parser.add_argument("--target-group", type=int, choices=(0, 1), default=None)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--bootstrap", type=int, default=None, help="number of bootstrap replicates")
    parser.add_argument("--n-mc", type=int, default=None, help="Monte-Carlo draws of the mediator intervention")
    parser.add_argument("--keep-truth", action="store_true", help="write the true mediator as C_TRUE")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true")
    verbosity.add_argument("--quiet", action="store_true")
    return parser


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    root = logging.getLogger()
    for handler in root.handlers[:]:
        root.removeHandler(handler)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)


def simulated_table(config):
    table = generate(config.dgp, config.n_source, config.n_target, config.seed)
    spec = config.missingness
    sweeping = config.mode == "sweep" and config.missingness_grid is not None
    if spec is not None and spec.target_proportion is not None and not sweeping:
        table = apply_missingness(table, spec, seed=config.seed)
    return table


def effect_rows(estimator):
    effects = []
    for group_w in GROUPS + (None,):
        for effect in (estimator.sde(group_w), estimator.sie(group_w)):
            effects.append(effect.to_dict())
            logger.info("%s (W=%s): %.4f [%.4f, %.4f]", effect.kind, group_w, effect.point,
                        effect.ci_low, effect.ci_high)
    return effects


def run_simulate(config):
    table = simulated_table(config)
    path = write_table_csv(table, config.out_path / "dataset.csv", keep_truth=config.keep_truth)
    document = ResultDocument(config=config.to_dict(), outputs={"dataset": "dataset.csv"})
    document.diagnostics = {key: value for key, value in table.metadata.items()}
    document.diagnostics["stratum_counts"] = {"s{}_w{}".format(*k): v for k, v in table.stratum_counts().items()}
    logger.info("Simulated dataset written to %s", path)
    return document


def run_oracle(config):
    effects = oracle_effects(config.dgp, config.oracle_n_mc, config.seed)
    write_json(effects.to_dict(), config.out_path / "oracle.json")
    return ResultDocument(config=config.to_dict(), oracle=effects.to_dict(), outputs={"oracle": "oracle.json"})


def run_analyze(config):
    table = load_csv(config.input_path)
    fit = fit_nuisance(table, config.nuisance)
    estimator = TransportedMediationEstimator(fit, table)
    document = ResultDocument(config=config.to_dict(), effects=effect_rows(estimator))

    r2 = config.analysis_r2
    analyses = {w: SensitivityAnalysis(estimator, w) for w in GROUPS}
    replicates = bootstrap_bounds(table, config.nuisance, GROUPS, (r2,), config.sensitivity)
    curve = SensitivityCurve(grid_kind="r2")
    for i, group_w in enumerate(GROUPS):
        lower, upper = analyses[group_w].bounds(r2, config.sensitivity.n_scale)
        ci_low, ci_high = percentile_interval(replicates[:, i, 0], config.sensitivity.alpha, (lower, upper))
        curve.points.append(CurvePoint(group_w=group_w, r2=r2, sie_lower=lower, sie_upper=upper, ci_low=ci_low,
                                       ci_high=ci_high, point=analyses[group_w].sie, grid_value=r2,
                                       missing_fraction=float((table.m == 0).mean()),
                                       n_clipped=analyses[group_w].clipping(r2)))

    document.curve = curve.to_dict()
    document.null_crossings = [c.to_dict() for c in curve.null_crossings(GROUPS)]
    document.diagnostics = dict(estimator.diagnostics(), nuisance=fit.to_dict(),
                                tan={str(w): analyses[w].tan(r2, config.sensitivity.lam) for w in GROUPS})
    write_curve_csv(curve, config.out_path / "curve.csv")
    document.outputs = {"curve": "curve.csv"}
    return document


def run_sweep(config):
    document = ResultDocument(config=config.to_dict())
    if config.input_path is not None:
        table = load_csv(config.input_path)
    else:
        table = simulated_table(config)
        document.oracle = oracle_effects(config.dgp, config.oracle_n_mc, config.seed).to_dict()

    if config.missingness_grid is not None:
        spec = config.missingness or MissingnessSpec()
        curve, crossings = sweep(table, config.nuisance, config.sensitivity, spec=spec,
                                 proportions=config.missingness_grid)
    else:
        curve, crossings = sweep(table, config.nuisance, config.sensitivity)

    fit = fit_nuisance(table, config.nuisance)
    estimator = TransportedMediationEstimator(fit, table)
    document.effects = effect_rows(estimator)
    document.curve = curve.to_dict()
    document.null_crossings = [c.to_dict() for c in crossings]
    document.diagnostics = dict(estimator.diagnostics(), missing_fraction=table.metadata.get("missing_fraction"))
    write_curve_csv(curve, config.out_path / "curve.csv")
    document.outputs = {"curve": "curve.csv"}
    return document


RUNNERS = {
    "simulate": run_simulate,
    "oracle": run_oracle,
    "analyze": run_analyze,
    "sweep": run_sweep,
}


def run(config):
    config.out_path.mkdir(parents=True, exist_ok=True)
    logger.info("Processing %s run (seed %d)", config.mode, config.seed)
    document = RUNNERS[config.mode](config)
    document.outputs["results"] = "results.json"
    document.write_json(config.out_path / "results.json")
    return document


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        config = load_config(args.config) if args.config else RunConfig(mode=args.mode or "sweep",
                                                                         input_path=args.input)
        config = apply_overrides(config, args)
        config = replace(config, sensitivity=replace(config.sensitivity, n_jobs=thread_count()))
        run(config)
    except MedTransportError as e:
        logger.error("%s", e)
        return e.exit_code
    except Exception:
        logger.exception("Unexpected failure")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
