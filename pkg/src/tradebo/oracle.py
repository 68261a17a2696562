"""Brute-force reference implementations for verification.

Everything here exists to double-check the main code paths from a different
direction: Monte Carlo integration instead of the closed-form expected
improvement, a from-scratch dense solve instead of the cached Cholesky
machinery, and a plain exhaustive scan instead of the optimization loop.
Deliberately slow, deliberately independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable

import numpy as np

from .objectives import EvalOutcome
from .space import CONTINUOUS, Configuration, SearchSpace, validate_space
from .surrogate import GpHyperparams, PosteriorPrediction


class SingularMatrixError(RuntimeError):
    pass


class SpaceTooLargeError(ValueError):
    pass


class ContinuousDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class OracleReport:
    value: float
    samples_or_nodes: int
    estimated_error: float


def mc_expected_improvement(
    mean: float, std: float, best: float, n: int, seed: int
) -> OracleReport:
    """Monte Carlo estimate of E[max(v - best, 0)], v ~ Normal(mean, std^2).

    estimated_error is the standard error of the mean. std = 0 returns the
    deterministic value exactly.
    """
    if n < 10_000:
        raise ValueError(f"need at least 10_000 samples for a usable estimate, got {n}")
    if std < 0:
        raise ValueError(f"std must be >= 0, got {std}")
    if std == 0:
        return OracleReport(value=max(mean - best, 0.0), samples_or_nodes=n, estimated_error=0.0)
    rng = np.random.default_rng(seed)
    gains = np.maximum(mean + std * rng.standard_normal(n) - best, 0.0)
    return OracleReport(
        value=float(gains.mean()),
        samples_or_nodes=n,
        estimated_error=float(gains.std(ddof=1) / math.sqrt(n)),
    )


def _matern52(a, b, hp: GpHyperparams) -> float:
    r2 = 0.0
    for k in range(len(a)):
        delta = (a[k] - b[k]) / hp.length_scales[k]
        r2 += delta * delta
    r = math.sqrt(r2)
    s5 = math.sqrt(5.0)
    return hp.signal_variance * (1.0 + s5 * r + 5.0 * r2 / 3.0) * math.exp(-s5 * r)


def _solve_dense(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Textbook Gaussian elimination with partial pivoting; A is (n,n), B (n,m)."""
    A = np.array(A, dtype=float)
    B = np.array(B, dtype=float)
    n = A.shape[0]
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[pivot_row, col]) == 0.0:
            raise SingularMatrixError(f"zero pivot in column {col}")
        if pivot_row != col:
            A[[col, pivot_row]] = A[[pivot_row, col]]
            B[[col, pivot_row]] = B[[pivot_row, col]]
        for row in range(col + 1, n):
            factor = A[row, col] / A[col, col]
            if factor != 0.0:
                A[row, col:] -= factor * A[col, col:]
                B[row] -= factor * B[col]
    X = np.zeros_like(B)
    for row in range(n - 1, -1, -1):
        X[row] = (B[row] - A[row, row + 1 :] @ X[row + 1 :]) / A[row, row]
    return X


def exact_gp_posterior(inputs, targets, hp: GpHyperparams, query) -> PosteriorPrediction:
    """Textbook GP posterior via a direct dense solve (no factorization reuse).

    Same model convention as the fast path: mean-centered targets, latent
    (noise-free) predictive variance.
    """
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(targets, dtype=float).ravel()
    q = np.asarray(query, dtype=float).ravel()
    n = X.shape[0]
    if n > 64:
        raise ValueError(f"oracle posterior is test-scale only (n <= 64), got n={n}")
    hp.validate(X.shape[1])
    prior_mean = float(sum(y) / n)
    K = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            K[i, j] = _matern52(X[i], X[j], hp)
        K[i, i] += hp.noise_variance
    kstar = np.array([_matern52(X[i], q, hp) for i in range(n)])
    rhs = np.column_stack([y - prior_mean, kstar])
    solved = _solve_dense(K, rhs)
    mean = prior_mean + float(kstar @ solved[:, 0])
    var = hp.signal_variance - float(kstar @ solved[:, 1])
    return PosteriorPrediction(mean=mean, std=math.sqrt(max(var, 0.0)))


def exhaustive_best(
    space: SearchSpace,
    objective: Callable[[Configuration, int], EvalOutcome],
    alpha: float,
    t_ref: float,
) -> tuple[Configuration, float]:
    """Global tradeoff argmax by evaluating every configuration once.

    Requires a fully discrete space and a deterministic objective; the caller
    supplies the frozen time reference. Ties keep the earliest configuration
    in enumeration order, matching the loop's earliest-round rule.
    """
    validate_space(space)
    if not t_ref > 0:
        raise ValueError(f"t_ref must be > 0, got {t_ref}")
    grids = []
    total = 1
    for dom in space.dims:
        if dom.kind == CONTINUOUS:
            raise ContinuousDimensionError(
                f"dimension {dom.name!r} is continuous; exhaustive search needs a finite space"
            )
        values = dom.grid_values()
        grids.append(values)
        total *= len(values)
        if total > 10_000:
            raise SpaceTooLargeError("space exceeds 10_000 configurations")
    best_config: Configuration | None = None
    best_value = -math.inf
    for combo in product(*grids):
        config = Configuration(combo)
        outcome = objective(config, 0)
        sigma = min(max(outcome.seconds / t_ref, 0.0), 1.0)
        value = outcome.accuracy - alpha * sigma
        if value > best_value:
            best_config, best_value = config, value
    assert best_config is not None
    return best_config, best_value
