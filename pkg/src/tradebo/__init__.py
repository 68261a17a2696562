"""Bayesian optimization that trades off model accuracy against training time.

The optimizer maintains two Gaussian-process surrogates over an enriched
hyperparameter space (the model's own knobs plus the training-set fraction):
one for validation accuracy and one for normalized training time. Candidates
are proposed by an expected-improvement acquisition penalized by the expected
time exceedance, weighted by a tunable tradeoff parameter alpha, and the
final model maximizes accuracy - alpha * normalized_time over everything
evaluated.
"""

from .acquisition import (
    IncumbentState,
    TradeoffSettings,
    expected_improvement,
    propose_next,
    tradeoff_acquisition,
)
from .loop import (
    Observation,
    RunResult,
    normalize_time,
    run,
    select_final,
    tradeoff_value,
)
from .objectives import (
    EvalOutcome,
    SynthSpec,
    benchmark_space,
    eval_external,
    eval_synthetic,
    subsample_indices,
)
from .space import (
    Configuration,
    ParamDomain,
    SearchSpace,
    candidate_pool,
    decode,
    encode,
    sobol_init,
    validate_space,
)
from .surrogate import (
    GpHyperparams,
    GpSurrogate,
    PosteriorPrediction,
    fit,
    log_marginal_likelihood,
    predict,
)

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "EvalOutcome",
    "GpHyperparams",
    "GpSurrogate",
    "IncumbentState",
    "Observation",
    "ParamDomain",
    "PosteriorPrediction",
    "RunResult",
    "SearchSpace",
    "SynthSpec",
    "TradeoffSettings",
    "benchmark_space",
    "candidate_pool",
    "decode",
    "encode",
    "eval_external",
    "eval_synthetic",
    "expected_improvement",
    "fit",
    "log_marginal_likelihood",
    "normalize_time",
    "predict",
    "propose_next",
    "run",
    "select_final",
    "sobol_init",
    "subsample_indices",
    "tradeoff_acquisition",
    "tradeoff_value",
    "validate_space",
]
