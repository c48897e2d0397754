from src.tmle.estimator import (EffectEstimate, PsiEstimate, TransportedMediationEstimator, estimate_psi,
                                estimate_sde, estimate_sie, standard_error, wald_interval)
from src.tmle.targeting import TargetedOutcome, marginalize, target_outcome_model
from src.tmle.weights import TargetingWeights, compute_targeting_weights, truncate_weights

__all__ = [
    "EffectEstimate",
    "PsiEstimate",
    "TransportedMediationEstimator",
    "estimate_psi",
    "estimate_sde",
    "estimate_sie",
    "standard_error",
    "wald_interval",
    "TargetedOutcome",
    "marginalize",
    "target_outcome_model",
    "TargetingWeights",
    "compute_targeting_weights",
    "truncate_weights",
]
