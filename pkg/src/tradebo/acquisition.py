"""Expected-improvement acquisitions and the per-round proposal step.

The accuracy acquisition is classic EI over the best accuracy seen. The
time acquisition reuses the same closed form against the lowest normalized
time seen, so it measures the expected amount by which a candidate's time
would exceed the fastest run. The two surrogates are treated as independent
and combined linearly with the tradeoff weight: score = EI_accuracy -
alpha * EI_time_exceedance. alpha = 0 reduces exactly to accuracy-only EI.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Container, Union

import numpy as np
from scipy.special import ndtr

from .space import Configuration, SearchSpace, candidate_pool, encode_many
from .surrogate import GpSurrogate, PosteriorPrediction, predict_many

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class IncumbentState:
    """Best accuracy (max) and best normalized time (min) observed so far."""

    best_accuracy: float
    best_sigma: float


@dataclass(frozen=True)
class TradeoffSettings:
    """Knobs of one optimization run.

    alpha weighs training-time efficiency against accuracy (0 = accuracy
    only). iterations is the total evaluation budget including the
    init_count Sobol points. t_ref is the time-normalization reference in
    seconds, or "auto" to freeze it at the slowest initialization run.
    """

    alpha: float
    iterations: int = 20
    init_count: int = 3
    candidate_max: int = 4096
    seed: int = 0
    t_ref: Union[float, str] = "auto"

    def validate(self) -> None:
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.init_count >= 1:
            raise ValueError(f"init_count must be >= 1, got {self.init_count}")
        if not self.iterations >= self.init_count:
            raise ValueError(
                f"iterations ({self.iterations}) must be >= init_count ({self.init_count})"
            )
        if not self.candidate_max >= 1:
            raise ValueError(f"candidate_max must be >= 1, got {self.candidate_max}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.t_ref != "auto":
            if not isinstance(self.t_ref, (int, float)) or not self.t_ref > 0:
                raise ValueError(f't_ref must be positive seconds or "auto", got {self.t_ref!r}')


def ei_values(means, stds, best: float) -> np.ndarray:
    """Vectorized closed-form EI of exceeding `best`: E[max(v - best, 0)].

    (mu - best) * Phi(z) + std * phi(z) with z = (mu - best) / std; the
    deterministic limit max(mu - best, 0) is used where std = 0. Clamped at
    zero against floating-point cancellation.
    """
    means = np.asarray(means, dtype=float)
    stds = np.asarray(stds, dtype=float)
    if np.any(stds < 0):
        raise ValueError("predictive std must be >= 0")
    gap = means - best
    safe = np.where(stds > 0.0, stds, 1.0)
    z = gap / safe
    spread = gap * ndtr(z) + stds * (_INV_SQRT_2PI * np.exp(-0.5 * z * z))
    out = np.where(stds > 0.0, spread, np.maximum(gap, 0.0))
    return np.maximum(out, 0.0)


def expected_improvement(pred: PosteriorPrediction, best: float) -> float:
    """Closed-form expected improvement of a single prediction over `best`."""
    return float(ei_values(np.array([pred.mean]), np.array([pred.std]), best)[0])


def tradeoff_acquisition(
    pred_l: PosteriorPrediction,
    pred_sigma: PosteriorPrediction,
    incumbent: IncumbentState,
    alpha: float,
) -> float:
    """Accuracy EI minus alpha times the expected time exceedance. May be negative."""
    return expected_improvement(pred_l, incumbent.best_accuracy) - alpha * expected_improvement(
        pred_sigma, incumbent.best_sigma
    )


def tradeoff_scores(
    vl: GpSurrogate,
    vsigma: GpSurrogate,
    encoded: np.ndarray,
    incumbent: IncumbentState,
    alpha: float,
) -> np.ndarray:
    """Tradeoff acquisition for a batch of encoded candidates."""
    means_l, stds_l = predict_many(vl, encoded)
    means_s, stds_s = predict_many(vsigma, encoded)
    return ei_values(means_l, stds_l, incumbent.best_accuracy) - alpha * ei_values(
        means_s, stds_s, incumbent.best_sigma
    )


def propose_next(
    vl: GpSurrogate,
    vsigma: GpSurrogate,
    incumbent: IncumbentState,
    space: SearchSpace,
    evaluated: Container[Configuration],
    settings: TradeoffSettings,
    round_index: int,
) -> Configuration:
    """Pick the candidate maximizing the tradeoff acquisition.

    The candidate pool is rebuilt each round with a round-derived seed.
    Already-evaluated configurations are excluded unless that would empty
    the pool; exact score ties break toward the lexicographically smallest
    encoded vector.
    """
    pool = candidate_pool(space, settings.candidate_max, settings.seed ^ round_index)
    fresh = [c for c in pool if c not in evaluated]
    if fresh:
        pool = fresh
    encoded = encode_many(space, pool)
    scores = tradeoff_scores(vl, vsigma, encoded, incumbent, settings.alpha)
    ties = np.flatnonzero(scores == scores.max())
    pick = min(ties, key=lambda i: tuple(encoded[i]))
    return pool[pick]
