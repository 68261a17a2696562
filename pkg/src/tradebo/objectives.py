"""Evaluation backends.

Two synthetic benchmarks give fast, reproducible accuracy/time surfaces for
desk-scale verification, and a line-oriented subprocess protocol lets real
trainers plug in without being bundled. Both report an accuracy in [0,1]
and a positive duration in seconds; time normalization happens later in the
optimization loop.
"""

from __future__ import annotations

import json
import math
import subprocess
import threading
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .space import (
    FRACTION,
    Configuration,
    ParamDomain,
    SearchSpace,
    config_to_dict,
    encode,
    validate_space,
)

_MASK64 = (1 << 64) - 1


class UnknownBenchmarkError(ValueError):
    """Requested synthetic benchmark is not in the registry."""


class SpawnFailureError(RuntimeError):
    """The trainer command could not be started."""


class EvalTimeoutError(TimeoutError):
    """The trainer did not respond within the timeout; it has been killed."""


class ProtocolError(RuntimeError):
    """The trainer's response line was missing or malformed."""


class TrainerError(RuntimeError):
    """The trainer reported a failure for this configuration."""


@dataclass(frozen=True)
class EvalOutcome:
    """Result of one training run: accuracy in [0,1] and positive seconds."""

    accuracy: float
    seconds: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy must lie in [0,1], got {self.accuracy}")
        if not self.seconds > 0:
            raise ValueError(f"seconds must be > 0, got {self.seconds}")


@dataclass(frozen=True)
class SynthSpec:
    """Selects a synthetic benchmark plus its noise level and noise seed."""

    name: str
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.name not in BENCHMARKS:
            raise UnknownBenchmarkError(
                f"unknown benchmark {self.name!r}; available: {sorted(BENCHMARKS)}"
            )
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")


def _gaussian_noise(seed: int, eval_index: int, noise_std: float) -> float:
    """One Normal(0, noise_std^2) draw from a counter-based generator.

    Keyed by (seed, eval_index) so outcomes never depend on evaluation order.
    """
    if noise_std == 0.0:
        return 0.0
    key = np.array([seed & _MASK64, eval_index & _MASK64], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return noise_std * float(gen.standard_normal())


_SATURATING_FRACTIONS = (0.2, 0.4, 0.6, 0.8, 1.0)


def _saturating_space() -> SearchSpace:
    return SearchSpace(
        (
            ParamDomain.continuous("x1", 0.0, 1.0),
            ParamDomain.continuous("x2", 0.0, 1.0),
            ParamDomain.fraction("train_fraction", _SATURATING_FRACTIONS),
        )
    )


def _eval_saturating(spec: SynthSpec, assignment: dict, eval_index: int) -> EvalOutcome:
    x1 = float(assignment["x1"])
    x2 = float(assignment["x2"])
    f = float(assignment["train_fraction"])
    quality_loss = (x1 - 0.55) ** 2 + (x2 - 0.45) ** 2
    accuracy = (0.55 + 0.45 * (1.0 - quality_loss)) * (1.0 - math.exp(-3.0 * f))
    accuracy += _gaussian_noise(spec.seed, eval_index, spec.noise_std)
    accuracy = min(max(accuracy, 0.0), 1.0)
    seconds = (0.5 + 4.5 * x1) * f + 0.05
    return EvalOutcome(accuracy=accuracy, seconds=seconds)


GRID_FRACTIONS = (0.2, 0.4, 0.6, 0.8, 1.0)
GRID_MODELS = ("a", "b", "c")

# (accuracy, seconds) per (train_fraction, model). Noise-free by design:
# accuracy grows with the data fraction at per-model rates while cost scales
# differently per model, so the tradeoff winner moves as alpha grows
# (alpha=0 -> slow accurate "c" on full data, mid alpha -> "b", high alpha
# -> cheap "a" on the smallest fraction).
GRID_TABLE: dict[tuple[float, str], tuple[float, float]] = {
    (0.2, "a"): (0.644, 0.4),
    (0.4, "a"): (0.668, 0.8),
    (0.6, "a"): (0.692, 1.2),
    (0.8, "a"): (0.716, 1.6),
    (1.0, "a"): (0.740, 2.0),
    (0.2, "b"): (0.660, 1.0),
    (0.4, "b"): (0.720, 2.0),
    (0.6, "b"): (0.780, 3.0),
    (0.8, "b"): (0.840, 4.0),
    (1.0, "b"): (0.900, 5.0),
    (0.2, "c"): (0.744, 2.0),
    (0.4, "c"): (0.788, 4.0),
    (0.6, "c"): (0.832, 6.0),
    (0.8, "c"): (0.876, 8.0),
    (1.0, "c"): (0.920, 10.0),
}


def _discrete_grid_space() -> SearchSpace:
    return SearchSpace(
        (
            ParamDomain.fraction("train_fraction", GRID_FRACTIONS),
            ParamDomain.categorical("model", GRID_MODELS),
        )
    )


def _eval_discrete_grid(spec: SynthSpec, assignment: dict, eval_index: int) -> EvalOutcome:
    key = (float(assignment["train_fraction"]), assignment["model"])
    accuracy, seconds = GRID_TABLE[key]
    return EvalOutcome(accuracy=accuracy, seconds=seconds)


BENCHMARKS = {
    "saturating": (_saturating_space, _eval_saturating),
    "discrete-grid": (_discrete_grid_space, _eval_discrete_grid),
}


def benchmark_space(name: str) -> SearchSpace:
    """The search space a synthetic benchmark is defined over."""
    if name not in BENCHMARKS:
        raise UnknownBenchmarkError(
            f"unknown benchmark {name!r}; available: {sorted(BENCHMARKS)}"
        )
    return BENCHMARKS[name][0]()


def eval_synthetic(spec: SynthSpec, config: Configuration, eval_index: int) -> EvalOutcome:
    """Evaluate a configuration on a synthetic benchmark.

    Deterministic given (spec.seed, eval_index, config); the noise draw is
    independent of evaluation order.
    """
    space_factory, evaluator = BENCHMARKS[spec.name]
    space = space_factory()
    assignment = config_to_dict(space, config)
    encode(space, config)  # rejects out-of-domain values
    return evaluator(spec, assignment, eval_index)


def build_request(space: SearchSpace, config: Configuration, seed: int) -> dict:
    """The JSON request object sent to an external trainer.

    The first fraction dimension becomes "train_fraction" (1.0 when the
    space has none); every other dimension is passed by name under
    "hyperparameters".
    """
    validate_space(space)
    assignment = config_to_dict(space, config)
    train_fraction = 1.0
    hyperparameters = {}
    fraction_taken = False
    for dom in space.dims:
        if dom.kind == FRACTION and not fraction_taken:
            train_fraction = float(assignment[dom.name])
            fraction_taken = True
        else:
            hyperparameters[dom.name] = assignment[dom.name]
    return {
        "hyperparameters": hyperparameters,
        "train_fraction": train_fraction,
        "seed": seed,
    }


def _reap(proc: subprocess.Popen) -> None:
    """Make sure the child is gone and its exit status collected."""
    try:
        if proc.poll() is None:
            proc.terminate()
            try:
                proc.wait(timeout=0.5)
            except subprocess.TimeoutExpired:
                proc.kill()
        proc.wait()
    finally:
        for stream in (proc.stdin, proc.stdout):
            if stream is not None:
                try:
                    stream.close()
                except OSError:
                    pass


def _read_line(proc: subprocess.Popen, timeout: float) -> str | None:
    """One stdout line from the child, or None on timeout."""
    holder: dict[str, str] = {}

    def reader():
        holder["line"] = proc.stdout.readline()

    th = threading.Thread(target=reader, daemon=True)
    th.start()
    th.join(timeout)
    if th.is_alive():
        return None
    return holder.get("line", "")


def eval_external(
    command: Sequence[str],
    config: Configuration,
    space: SearchSpace,
    timeout: float,
    seed: int = 0,
) -> EvalOutcome:
    """Evaluate a configuration through an external trainer process.

    Writes one JSON request line to the trainer's stdin and reads one JSON
    response line from its stdout. Wall-clock time measured here is the
    authoritative duration unless the trainer reports "train_seconds". The
    process is killed on timeout and always reaped; its exit code is ignored
    once a valid response arrived.
    """
    request = json.dumps(build_request(space, config, seed))
    start = time.monotonic()
    try:
        proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )
    except OSError as e:
        raise SpawnFailureError(f"could not start trainer {list(command)!r}: {e}") from e
    try:
        try:
            proc.stdin.write(request + "\n")
            proc.stdin.flush()
            proc.stdin.close()
        except (BrokenPipeError, OSError) as e:
            raise ProtocolError(f"trainer closed stdin before reading the request: {e}") from e
        line = _read_line(proc, timeout)
        elapsed = time.monotonic() - start
        if line is None:
            raise EvalTimeoutError(f"trainer exceeded {timeout}s and was killed")
        if not line.strip():
            raise ProtocolError("trainer exited without writing a response line")
    finally:
        _reap(proc)
    try:
        response = json.loads(line)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"trainer response is not valid JSON: {line!r}") from e
    if not isinstance(response, dict):
        raise ProtocolError(f"trainer response must be a JSON object, got: {line!r}")
    if "error" in response:
        raise TrainerError(str(response["error"]))
    if "accuracy" not in response:
        raise ProtocolError(f"trainer response lacks 'accuracy': {line!r}")
    accuracy = response["accuracy"]
    if not isinstance(accuracy, (int, float)) or not 0.0 <= accuracy <= 1.0:
        raise ProtocolError(f"trainer accuracy must be a number in [0,1], got {accuracy!r}")
    seconds = response.get("train_seconds", max(elapsed, 1e-9))
    if not isinstance(seconds, (int, float)) or not seconds > 0:
        raise ProtocolError(f"trainer train_seconds must be > 0, got {seconds!r}")
    return EvalOutcome(accuracy=float(accuracy), seconds=float(seconds))


def subsample_indices(n: int, fraction: float, seed: int) -> np.ndarray:
    """First ceil(fraction*n) positions of one seeded permutation of range(n).

    Prefix construction makes subsets nested: the 40% sample contains the
    20% sample for the same seed.
    """
    if n < 1:
        raise ValueError(f"dataset size must be >= 1, got {n}")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0,1], got {fraction}")
    # tiny guard so e.g. 0.2 * 10 does not ceil to 3 through float error
    count = max(1, math.ceil(fraction * n - 1e-9))
    rng = np.random.default_rng(seed)
    return rng.permutation(n)[:count]
