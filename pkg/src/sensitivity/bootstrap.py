"""
Stratified nonparametric bootstrap of the bounded SIE.

Each replicate resamples rows with replacement within every (S, W) stratum,
refits the nuisance models, and records the inf and sup of SIE* at every
requested R2. CI(alpha) takes the alpha/2 quantile of the replicate infima
and the 1 - alpha/2 quantile of the replicate suprema.

"""

import logging

import numpy as np
from joblib import Parallel, delayed

from src.errors import BootstrapError, EstimationError
from src.nuisance.fit import fit_nuisance
from src.sensitivity.bounds import SensitivityAnalysis
from src.tmle.estimator import TransportedMediationEstimator

logger = logging.getLogger(__name__)

MAX_RETRIES = 10


def stratified_resample(table, rng):
    """Row indices drawn with replacement inside each (S, W) stratum, in stratum order."""
    frame = table.frame if hasattr(table, "frame") else table
    indices = []
    for _, positions in sorted(frame.groupby(["s", "w"]).indices.items()):
        indices.append(rng.choice(positions, size=len(positions), replace=True))
    return np.concatenate(indices)


def replicate_bounds(table, options, group_ws, r2_values, seed, index, environment=0, n_scale=21):
    """(len(group_ws), len(r2_values), 2) array of [inf, sup] for one bootstrap replicate."""
    rng = np.random.default_rng([int(seed), int(index)])
    last_error = None
    for attempt in range(MAX_RETRIES + 1):
        sample = table.take(stratified_resample(table, rng))
        try:
            fit = fit_nuisance(sample, options)
            estimator = TransportedMediationEstimator(fit, sample, environment=environment)
            result = np.empty((len(group_ws), len(r2_values), 2))
            for i, group_w in enumerate(group_ws):
                analysis = SensitivityAnalysis(estimator, group_w)
                for j, r2 in enumerate(r2_values):
                    result[i, j] = analysis.bounds(r2, n_scale)
            return result
        except EstimationError as e:
            last_error = e
            logger.debug("Bootstrap replicate %d attempt %d failed: %s", index, attempt + 1, e)
    raise BootstrapError("bootstrap replicate {} failed after {} retries: {}".format(index, MAX_RETRIES, last_error))


def bootstrap_bounds(table, options, group_ws, r2_values, config, environment=0):
    """Stacked replicate bounds, shape (n_bootstrap, groups, r2 values, 2)."""
    logger.info("Processing %d bootstrap replicates (n_jobs=%d)", config.n_bootstrap, config.n_jobs)
    results = Parallel(n_jobs=config.n_jobs)(
        delayed(replicate_bounds)(table, options, tuple(group_ws), tuple(r2_values), config.seed, index,
                                  environment, config.n_scale)
        for index in range(config.n_bootstrap)
    )
    logger.info("Completed %d bootstrap replicates", len(results))
    return np.stack(results)


def percentile_interval(replicates, alpha, point_bounds=None):
    """CI(alpha) from replicate [inf, sup] pairs, widened to contain `point_bounds`."""
    replicates = np.asarray(replicates, dtype=float)
    ci_low = float(np.quantile(replicates[..., 0], alpha / 2.0))
    ci_high = float(np.quantile(replicates[..., 1], 1.0 - alpha / 2.0))
    if point_bounds is not None:
        ci_low = min(ci_low, point_bounds[0])
        ci_high = max(ci_high, point_bounds[1])
    return ci_low, ci_high


def ci_alpha(fit, rows, group_w, r2, config, environment=0):
    estimator = TransportedMediationEstimator(fit, rows, environment=environment)
    point_bounds = SensitivityAnalysis(estimator, group_w).bounds(r2, config.n_scale)
    replicates = bootstrap_bounds(rows, fit.options, (group_w,), (r2,), config, environment=environment)
    return percentile_interval(replicates[:, 0, 0], config.alpha, point_bounds)
