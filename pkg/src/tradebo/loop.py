"""The sequential optimization loop.

Evaluates a Sobol initialization, freezes the time-normalization reference,
then alternates surrogate refits with tradeoff-acquisition proposals until
the evaluation budget is spent. The final model is the evaluated
configuration maximizing accuracy - alpha * normalized_time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Optional

import numpy as np

from .acquisition import IncumbentState, TradeoffSettings, propose_next
from .objectives import EvalOutcome
from .space import Configuration, SearchSpace, encode_many, sobol_init, validate_space
from .surrogate import fit

logger = logging.getLogger(__name__)

Objective = Callable[[Configuration, int], EvalOutcome]
ObservationSink = Callable[["Observation", float], None]
Clock = Callable[[], datetime]

_MASK64 = (1 << 64) - 1


class NonPositiveReferenceError(ValueError):
    """Time normalization needs a strictly positive reference."""


class EmptyTraceError(ValueError):
    """Final selection needs at least one observation."""


class ObjectiveFailureError(RuntimeError):
    """The evaluation callback failed; the run aborts with a partial trace."""

    def __init__(self, round_index: int, config: Configuration, cause: BaseException):
        super().__init__(f"objective failed at round {round_index} on {config.values}: {cause}")
        self.round_index = round_index
        self.config = config


@dataclass(frozen=True)
class Observation:
    """One evaluated configuration with its raw and normalized measurements."""

    config: Configuration
    accuracy: float
    seconds: float
    sigma: float
    round_index: int
    wall_clock: datetime


@dataclass(frozen=True)
class RunResult:
    trace: tuple[Observation, ...]
    selected: Configuration
    selected_tradeoff: float
    t_ref: float
    settings: TradeoffSettings


def normalize_time(t: float, t_ref: float) -> float:
    """Raw seconds mapped into [0,1] against the frozen reference, clamped."""
    if not t_ref > 0:
        raise NonPositiveReferenceError(f"reference time must be > 0, got {t_ref}")
    if t < 0:
        raise ValueError(f"seconds must be >= 0, got {t}")
    return min(max(t / t_ref, 0.0), 1.0)


def tradeoff_value(accuracy: float, sigma: float, alpha: float) -> float:
    """The scalarized objective: accuracy minus alpha times normalized time."""
    return accuracy - alpha * sigma


def select_final(trace, alpha: float) -> tuple[Configuration, float]:
    """Configuration with the best tradeoff value; ties go to the earliest round."""
    observations = sorted(trace, key=lambda o: o.round_index)
    if not observations:
        raise EmptyTraceError("cannot select from an empty trace")
    best = observations[0]
    best_value = tradeoff_value(best.accuracy, best.sigma, alpha)
    for obs in observations[1:]:
        value = tradeoff_value(obs.accuracy, obs.sigma, alpha)
        if value > best_value:
            best, best_value = obs, value
    return best.config, best_value


def _mix64(*parts: int) -> int:
    # splitmix64-style mixing; platform-independent and order-sensitive
    h = 0x9E3779B97F4A7C15
    for p in parts:
        h = (h ^ (p & _MASK64)) & _MASK64
        h = (h * 0xBF58476D1CE4E5B9) & _MASK64
        h ^= h >> 27
        h = (h * 0x94D049BB133111EB) & _MASK64
        h ^= h >> 31
    return h


def fit_seed(run_seed: int, round_index: int, target: str) -> int:
    """Deterministic per-round, per-target surrogate fitting seed.

    Independent derivation keeps the accuracy surrogate's fit unaffected by
    whether or how the time surrogate is fitted.
    """
    code = {"accuracy": 1, "sigma": 2}[target]
    return _mix64(run_seed, round_index, code) >> 1


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


def _evaluate(objective: Objective, config: Configuration, round_index: int) -> EvalOutcome:
    try:
        return objective(config, round_index)
    except Exception as e:
        raise ObjectiveFailureError(round_index, config, e) from e


def run(
    objective: Objective,
    space: SearchSpace,
    settings: TradeoffSettings,
    on_observation: Optional[ObservationSink] = None,
    clock: Optional[Clock] = None,
) -> RunResult:
    """Run the full optimization: init, surrogate-guided rounds, final selection.

    `on_observation(obs, t_ref)` is invoked as each evaluation completes so
    callers can persist the trace incrementally; an objective failure aborts
    the run after everything already observed has been emitted. Deterministic
    for a fixed seed and a deterministic objective.
    """
    validate_space(space)
    settings.validate()
    now = clock if clock is not None else _utc_now

    init_configs = sobol_init(space, settings.init_count, settings.seed)
    initial: list[tuple[Configuration, EvalOutcome, datetime]] = []
    for i, config in enumerate(init_configs, start=1):
        outcome = _evaluate(objective, config, i)
        initial.append((config, outcome, now()))

    if settings.t_ref == "auto":
        t_ref = max(outcome.seconds for _, outcome, _ in initial)
    else:
        t_ref = float(settings.t_ref)

    trace: list[Observation] = []

    def record(config, outcome, stamp, round_index):
        obs = Observation(
            config=config,
            accuracy=outcome.accuracy,
            seconds=outcome.seconds,
            sigma=normalize_time(outcome.seconds, t_ref),
            round_index=round_index,
            wall_clock=stamp,
        )
        trace.append(obs)
        if on_observation is not None:
            on_observation(obs, t_ref)

    for i, (config, outcome, stamp) in enumerate(initial, start=1):
        record(config, outcome, stamp, i)

    for j in range(settings.init_count + 1, settings.iterations + 1):
        encoded = encode_many(space, [o.config for o in trace])
        accuracies = np.array([o.accuracy for o in trace])
        sigmas = np.array([o.sigma for o in trace])
        vl = fit(encoded, accuracies, fit_seed(settings.seed, j, "accuracy"))
        vsigma = fit(encoded, sigmas, fit_seed(settings.seed, j, "sigma"))
        logger.info(
            "round %d refit: accuracy ls=%s sv=%.4g nv=%.4g | sigma ls=%s sv=%.4g nv=%.4g",
            j,
            np.array2string(vl.hyperparams.length_scales, precision=3),
            vl.hyperparams.signal_variance,
            vl.hyperparams.noise_variance,
            np.array2string(vsigma.hyperparams.length_scales, precision=3),
            vsigma.hyperparams.signal_variance,
            vsigma.hyperparams.noise_variance,
        )
        incumbent = IncumbentState(
            best_accuracy=float(accuracies.max()),
            best_sigma=float(sigmas.min()),
        )
        evaluated = frozenset(o.config for o in trace)
        config = propose_next(vl, vsigma, incumbent, space, evaluated, settings, j)
        outcome = _evaluate(objective, config, j)
        record(config, outcome, now(), j)

    selected, selected_tradeoff = select_final(trace, settings.alpha)
    return RunResult(
        trace=tuple(trace),
        selected=selected,
        selected_tradeoff=selected_tradeoff,
        t_ref=t_ref,
        settings=settings,
    )
