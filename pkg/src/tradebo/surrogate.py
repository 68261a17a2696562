"""Gaussian-process regression over the unit hypercube.

One GP class serves both regression targets of the optimizer (accuracy and
normalized training time). The kernel is Matern-5/2 with per-dimension ARD
length scales, the prior mean is the arithmetic mean of the targets, and the
noise variance is fitted within bounds. Kernel hyperparameters are chosen by
maximizing the log marginal likelihood with a derivative-free multi-start
coordinate search; the hot path is JIT-compiled so the optimizer can refit
every round at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import solve_triangular

LENGTH_SCALE_BOUNDS = (1e-3, 1e3)
SIGNAL_VARIANCE_BOUNDS = (1e-6, 1e2)
NOISE_VARIANCE_BOUNDS = (1e-8, 1e-1)

N_RESTARTS = 32
MAX_LINE_SEARCHES = 50
GOLDEN_MAX_ITER = 50
LOG_TOL = 1e-3
JITTER_CAP = 1e-4
NEG_VARIANCE_TOL = 1e-10
DEGENERATE_SIGNAL_VARIANCE = 1.0

_SQRT5 = np.sqrt(5.0)
_LOG_2PI = np.log(2.0 * np.pi)
_BIG = 1e300
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


class FactorizationFailedError(RuntimeError):
    """Kernel matrix stayed indefinite after full jitter escalation."""


class NegativeVarianceError(RuntimeError):
    """Posterior variance came out below the numerical tolerance."""


@dataclass
class GpHyperparams:
    """ARD kernel hyperparameters: one length scale per encoded dimension."""

    length_scales: np.ndarray
    signal_variance: float
    noise_variance: float

    def __post_init__(self) -> None:
        self.length_scales = np.asarray(self.length_scales, dtype=float)

    def validate(self, n_dims: int) -> None:
        if self.length_scales.shape != (n_dims,):
            raise ValueError(
                f"expected {n_dims} length scales, got shape {self.length_scales.shape}"
            )
        lo, hi = LENGTH_SCALE_BOUNDS
        if not np.all((self.length_scales >= lo) & (self.length_scales <= hi)):
            raise ValueError(f"length scales must lie in [{lo}, {hi}]")
        if not self.signal_variance > 0:
            raise ValueError("signal variance must be positive")
        lo, hi = NOISE_VARIANCE_BOUNDS
        if not lo <= self.noise_variance <= hi:
            raise ValueError(f"noise variance must lie in [{lo}, {hi}]")


@dataclass(frozen=True)
class PosteriorPrediction:
    mean: float
    std: float


@dataclass
class GpSurrogate:
    """Fitted GP: training data, hyperparameters, and the reusable factorization.

    `factor` is the lower-triangular Cholesky factor of (K + noise*I + jitter*I)
    and `alpha` solves that system against the mean-centered targets. A
    degenerate model (constant targets) carries no factorization and predicts
    the constant with the prior signal std.
    """

    inputs: np.ndarray
    targets: np.ndarray
    hyperparams: GpHyperparams
    factor: np.ndarray | None
    alpha: np.ndarray | None
    mean_offset: float
    jitter: float = 0.0
    degenerate: bool = False


@njit(cache=True)
def _cov_matrix(D2, inv_ls2, sv):
    n = D2.shape[0]
    d = D2.shape[2]
    K = np.empty((n, n))
    for i in range(n):
        K[i, i] = sv
        for j in range(i + 1, n):
            r2 = 0.0
            for k in range(d):
                r2 += D2[i, j, k] * inv_ls2[k]
            r = np.sqrt(r2)
            v = sv * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-_SQRT5 * r)
            K[i, j] = v
            K[j, i] = v
    return K


@njit(cache=True)
def _cholesky_inplace(A):
    n = A.shape[0]
    for j in range(n):
        s = A[j, j]
        for k in range(j):
            s -= A[j, k] * A[j, k]
        if s <= 0.0:
            return False
        A[j, j] = np.sqrt(s)
        inv = 1.0 / A[j, j]
        for i in range(j + 1, n):
            t = A[i, j]
            for k in range(j):
                t -= A[i, k] * A[j, k]
            A[i, j] = t * inv
    for i in range(n):
        for j in range(i + 1, n):
            A[i, j] = 0.0
    return True


@njit(cache=True)
def _factorize(K, noise):
    """Cholesky of K + noise*I with escalating diagonal jitter.

    Jitter starts at 1e-10 * trace / n, multiplies by 10, and is capped;
    returns (L, jitter, ok) with ok=False when even the cap fails.
    """
    n = K.shape[0]
    tr = 0.0
    for i in range(n):
        tr += K[i, i] + noise
    j0 = 1e-10 * tr / n
    jitter = 0.0
    while True:
        A = K.copy()
        for i in range(n):
            A[i, i] += noise + jitter
        if _cholesky_inplace(A):
            return A, jitter, True
        if jitter == 0.0:
            jitter = j0
        elif jitter >= JITTER_CAP:
            return K, jitter, False
        else:
            jitter = min(jitter * 10.0, JITTER_CAP)


@njit(cache=True)
def _neg_lml(D2, yc, theta):
    """Negative log marginal likelihood at log-space theta; _BIG on failure."""
    d = D2.shape[2]
    n = yc.shape[0]
    inv_ls2 = np.empty(d)
    for k in range(d):
        inv_ls2[k] = np.exp(-2.0 * theta[k])
    sv = np.exp(theta[d])
    noise = np.exp(theta[d + 1])
    K = _cov_matrix(D2, inv_ls2, sv)
    L, _, ok = _factorize(K, noise)
    if not ok:
        return _BIG
    a = np.empty(n)
    for i in range(n):
        s = yc[i]
        for j in range(i):
            s -= L[i, j] * a[j]
        a[i] = s / L[i, i]
    quad = 0.0
    logdet = 0.0
    for i in range(n):
        quad += a[i] * a[i]
        logdet += np.log(L[i, i])
    return 0.5 * quad + logdet + 0.5 * n * _LOG_2PI


@njit(cache=True)
def _line_search(D2, yc, theta, c, lo, hi, x0, f0):
    """Golden-section search along coordinate c; never accepts an uphill move."""
    a = lo
    b = hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    theta[c] = x1
    f1 = _neg_lml(D2, yc, theta)
    theta[c] = x2
    f2 = _neg_lml(D2, yc, theta)
    it = 0
    while (b - a) > LOG_TOL and it < GOLDEN_MAX_ITER:
        if f1 < f2:
            b = x2
            x2 = x1
            f2 = f1
            x1 = b - _INVPHI * (b - a)
            theta[c] = x1
            f1 = _neg_lml(D2, yc, theta)
        else:
            a = x1
            x1 = x2
            f1 = f2
            x2 = a + _INVPHI * (b - a)
            theta[c] = x2
            f2 = _neg_lml(D2, yc, theta)
        it += 1
    xb = 0.5 * (a + b)
    theta[c] = xb
    fb = _neg_lml(D2, yc, theta)
    if f1 < fb:
        xb = x1
        fb = f1
    if f2 < fb:
        xb = x2
        fb = f2
    if fb < f0:
        theta[c] = xb
        return xb, fb
    theta[c] = x0
    return x0, f0


@njit(cache=True)
def _refine(D2, yc, theta, lo, hi):
    """Coordinate descent from theta, in place; returns the final objective."""
    p = theta.shape[0]
    f = _neg_lml(D2, yc, theta)
    searches = 0
    while searches < MAX_LINE_SEARCHES:
        max_move = 0.0
        for c in range(p):
            x0 = theta[c]
            xn, f = _line_search(D2, yc, theta, c, lo[c], hi[c], x0, f)
            move = abs(xn - x0)
            if move > max_move:
                max_move = move
            searches += 1
            if searches >= MAX_LINE_SEARCHES:
                break
        if max_move < LOG_TOL:
            break
    return f


@njit(cache=True)
def _multistart_search(D2, yc, starts, lo, hi):
    best_f = np.inf
    best = starts[0].copy()
    for s in range(starts.shape[0]):
        theta = starts[s].copy()
        f = _refine(D2, yc, theta, lo, hi)
        if f < best_f:
            best_f = f
            best = theta.copy()
    return best, best_f


def _as_training_arrays(inputs, targets) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} inputs but {y.shape[0]} targets")
    if X.shape[0] < 1:
        raise ValueError("need at least one observation")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ValueError("inputs and targets must be finite")
    if X.min() < -1e-9 or X.max() > 1 + 1e-9:
        raise ValueError("inputs must lie in the unit hypercube")
    return X, y


def _pairwise_sq_diffs(X: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - X[None, :, :]
    return np.ascontiguousarray(diff * diff)


def _theta(hp: GpHyperparams) -> np.ndarray:
    return np.concatenate(
        [np.log(hp.length_scales), [np.log(hp.signal_variance)], [np.log(hp.noise_variance)]]
    )


def _theta_bounds(d: int) -> tuple[np.ndarray, np.ndarray]:
    lo = np.concatenate(
        [
            np.full(d, np.log(LENGTH_SCALE_BOUNDS[0])),
            [np.log(SIGNAL_VARIANCE_BOUNDS[0])],
            [np.log(NOISE_VARIANCE_BOUNDS[0])],
        ]
    )
    hi = np.concatenate(
        [
            np.full(d, np.log(LENGTH_SCALE_BOUNDS[1])),
            [np.log(SIGNAL_VARIANCE_BOUNDS[1])],
            [np.log(NOISE_VARIANCE_BOUNDS[1])],
        ]
    )
    return lo, hi


def log_marginal_likelihood(inputs, targets, hp: GpHyperparams) -> float:
    """log p(targets | inputs, hp) under the mean-centered Matern-5/2 GP."""
    X, y = _as_training_arrays(inputs, targets)
    hp.validate(X.shape[1])
    D2 = _pairwise_sq_diffs(X)
    yc = y - y.mean()
    neg = _neg_lml(D2, yc, _theta(hp))
    if neg >= _BIG:
        raise FactorizationFailedError(
            f"kernel matrix not positive definite after jitter escalation to {JITTER_CAP}"
        )
    return -float(neg)


def from_hyperparams(inputs, targets, hp: GpHyperparams) -> GpSurrogate:
    """Factorize the model at fixed hyperparameters (no fitting)."""
    X, y = _as_training_arrays(inputs, targets)
    hp.validate(X.shape[1])
    K = _cov_matrix(_pairwise_sq_diffs(X), 1.0 / hp.length_scales**2, hp.signal_variance)
    L, jitter, ok = _factorize(K, hp.noise_variance)
    if not ok:
        raise FactorizationFailedError(
            f"kernel matrix not positive definite after jitter escalation to {JITTER_CAP}"
        )
    mean_offset = float(y.mean())
    yc = y - mean_offset
    half = solve_triangular(L, yc, lower=True)
    alpha = solve_triangular(L.T, half, lower=False)
    return GpSurrogate(
        inputs=X,
        targets=y,
        hyperparams=hp,
        factor=L,
        alpha=alpha,
        mean_offset=mean_offset,
        jitter=float(jitter),
    )


def fit(inputs, targets, seed: int) -> GpSurrogate:
    """Fit hyperparameters by multi-start maximization of the marginal likelihood.

    32 seeded log-uniform starts within the hyperparameter bounds, each
    refined by coordinate-wise golden-section descent. Deterministic for a
    fixed seed. Constant targets short-circuit to a flagged prior-mean model
    instead of a degenerate fit.
    """
    X, y = _as_training_arrays(inputs, targets)
    if np.ptp(y) == 0.0:
        d = X.shape[1]
        hp = GpHyperparams(
            length_scales=np.ones(d),
            signal_variance=DEGENERATE_SIGNAL_VARIANCE,
            noise_variance=NOISE_VARIANCE_BOUNDS[0],
        )
        return GpSurrogate(
            inputs=X,
            targets=y,
            hyperparams=hp,
            factor=None,
            alpha=None,
            mean_offset=float(y[0]),
            degenerate=True,
        )
    d = X.shape[1]
    D2 = _pairwise_sq_diffs(X)
    yc = y - y.mean()
    lo, hi = _theta_bounds(d)
    rng = np.random.default_rng(seed)
    starts = lo + rng.random((N_RESTARTS, d + 2)) * (hi - lo)
    theta, _ = _multistart_search(D2, yc, starts, lo, hi)
    hp = GpHyperparams(
        length_scales=np.exp(theta[:d]),
        signal_variance=float(np.exp(theta[d])),
        noise_variance=float(np.exp(theta[d + 1])),
    )
    return from_hyperparams(X, y, hp)


def _cross_cov(train: np.ndarray, X: np.ndarray, hp: GpHyperparams) -> np.ndarray:
    diff = train[:, None, :] - X[None, :, :]
    r2 = np.einsum("ijk,k->ij", diff * diff, 1.0 / hp.length_scales**2)
    r = np.sqrt(r2)
    return hp.signal_variance * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-_SQRT5 * r)


def predict_many(model: GpSurrogate, X) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and std at each query row. Shared by predict and the
    vectorized acquisition scorer so both see bit-identical values."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.inputs.shape[1]:
        raise ValueError(
            f"queries must have shape (m, {model.inputs.shape[1]}), got {X.shape}"
        )
    m = X.shape[0]
    if model.degenerate:
        sv = model.hyperparams.signal_variance
        return (
            np.full(m, model.mean_offset),
            np.full(m, np.sqrt(sv)),
        )
    Kx = _cross_cov(model.inputs, X, model.hyperparams)
    means = model.mean_offset + Kx.T @ model.alpha
    V = solve_triangular(model.factor, Kx, lower=True)
    var = model.hyperparams.signal_variance - np.einsum("ij,ij->j", V, V)
    if np.any(var < -NEG_VARIANCE_TOL):
        raise NegativeVarianceError(
            f"posterior variance {var.min():.3e} below tolerance; factorization is broken"
        )
    stds = np.sqrt(np.maximum(var, 0.0))
    return means, stds


def predict(model: GpSurrogate, x) -> PosteriorPrediction:
    """Posterior prediction at a single encoded point."""
    means, stds = predict_many(model, np.asarray(x, dtype=float).reshape(1, -1))
    return PosteriorPrediction(mean=float(means[0]), std=float(stds[0]))
