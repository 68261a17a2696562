"""Mixed hyperparameter search spaces and their unit-hypercube encoding.

A search space is an ordered list of typed dimensions (continuous, integer,
categorical, or a discrete training-fraction grid). Configurations are
encoded into [0,1]^d for the surrogate models: continuous and integer
dimensions are min-max scaled (log-scaled first where declared), the
fraction dimension is rank-scaled so that distance reflects its ordering,
and categoricals are one-hot expanded.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.stats import qmc

Value = Union[float, int, str]

CONTINUOUS = "continuous"
INTEGER = "integer"
CATEGORICAL = "categorical"
FRACTION = "fraction"

_KINDS = (CONTINUOUS, INTEGER, CATEGORICAL, FRACTION)
_SCALES = ("linear", "log")


class SpaceError(ValueError):
    """A search-space declaration violates a domain invariant."""


class DuplicateNameError(SpaceError):
    pass


class EmptyDomainError(SpaceError):
    pass


class BadBoundsError(SpaceError):
    pass


class LogScaleNonPositiveError(SpaceError):
    pass


class EmptySpaceError(SpaceError):
    pass


class OutOfDomainError(ValueError):
    """A configuration value falls outside its declared domain."""


class LengthMismatchError(ValueError):
    """An encoded vector does not match the space's encoded width."""


@dataclass(frozen=True)
class ParamDomain:
    """One hyperparameter dimension. Build through the factory classmethods."""

    name: str
    kind: str
    lo: float = 0.0
    hi: float = 1.0
    scale: str = "linear"
    labels: tuple[str, ...] = ()
    values: tuple[float, ...] = ()

    @classmethod
    def continuous(cls, name: str, lo: float, hi: float, scale: str = "linear") -> "ParamDomain":
        return cls(name=name, kind=CONTINUOUS, lo=float(lo), hi=float(hi), scale=scale)

    @classmethod
    def integer(cls, name: str, lo: int, hi: int) -> "ParamDomain":
        return cls(name=name, kind=INTEGER, lo=int(lo), hi=int(hi))

    @classmethod
    def categorical(cls, name: str, labels: Sequence[str]) -> "ParamDomain":
        return cls(name=name, kind=CATEGORICAL, labels=tuple(labels))

    @classmethod
    def fraction(cls, name: str, values: Sequence[float]) -> "ParamDomain":
        return cls(name=name, kind=FRACTION, values=tuple(float(v) for v in values))

    @property
    def width(self) -> int:
        """Number of unit-hypercube coordinates this dimension occupies."""
        return len(self.labels) if self.kind == CATEGORICAL else 1

    @property
    def is_discrete(self) -> bool:
        return self.kind != CONTINUOUS

    def grid_values(self) -> tuple[Value, ...]:
        """All admissible values, in natural order (discrete kinds only)."""
        if self.kind == INTEGER:
            return tuple(range(int(self.lo), int(self.hi) + 1))
        if self.kind == CATEGORICAL:
            return self.labels
        if self.kind == FRACTION:
            return self.values
        raise ValueError(f"dimension {self.name!r} is continuous and has no finite grid")

    def validate(self) -> None:
        if self.kind not in _KINDS:
            raise SpaceError(f"dimension {self.name!r}: unknown kind {self.kind!r}")
        if self.kind in (CONTINUOUS, INTEGER):
            if not self.lo < self.hi:
                raise BadBoundsError(f"dimension {self.name!r}: requires lo < hi, got [{self.lo}, {self.hi}]")
        if self.kind == CONTINUOUS:
            if self.scale not in _SCALES:
                raise SpaceError(f"dimension {self.name!r}: unknown scale {self.scale!r}")
            if self.scale == "log" and self.lo <= 0:
                raise LogScaleNonPositiveError(f"dimension {self.name!r}: log scale requires lo > 0, got {self.lo}")
        if self.kind == CATEGORICAL:
            if len(set(self.labels)) < 2:
                raise EmptyDomainError(f"dimension {self.name!r}: categorical needs >= 2 distinct labels")
        if self.kind == FRACTION:
            if not self.values:
                raise EmptyDomainError(f"dimension {self.name!r}: fraction needs at least one value")
            if any(v <= 0 for v in self.values):
                raise BadBoundsError(f"dimension {self.name!r}: fraction values must be > 0")
            if self.values[-1] > 1:
                raise BadBoundsError(f"dimension {self.name!r}: fraction values must be <= 1")
            if any(a >= b for a, b in zip(self.values, self.values[1:])):
                raise BadBoundsError(f"dimension {self.name!r}: fraction values must be strictly increasing")


@dataclass(frozen=True)
class SearchSpace:
    """Ordered collection of dimensions defining the optimization domain."""

    dims: tuple[ParamDomain, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", tuple(self.dims))

    @property
    def encoded_width(self) -> int:
        return sum(d.width for d in self.dims)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.dims)


@dataclass(frozen=True)
class Configuration:
    """One assignment of a value to every dimension, in dimension order."""

    values: tuple[Value, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))


def validate_space(space: SearchSpace) -> None:
    """Check every dimension's invariants; raises on the first offender."""
    seen: set[str] = set()
    for dom in space.dims:
        if dom.name in seen:
            raise DuplicateNameError(f"dimension name {dom.name!r} appears more than once")
        seen.add(dom.name)
        dom.validate()


def config_to_dict(space: SearchSpace, config: Configuration) -> dict[str, Value]:
    """Map dimension names to the configuration's values."""
    if len(config.values) != len(space.dims):
        raise OutOfDomainError(
            f"configuration has {len(config.values)} values for {len(space.dims)} dimensions"
        )
    return {d.name: v for d, v in zip(space.dims, config.values)}


def config_from_dict(space: SearchSpace, mapping: Mapping[str, Value]) -> Configuration:
    """Build a Configuration from a name->value mapping covering every dimension."""
    missing = [d.name for d in space.dims if d.name not in mapping]
    if missing:
        raise OutOfDomainError(f"missing values for dimensions: {missing}")
    extra = set(mapping) - set(space.names)
    if extra:
        raise OutOfDomainError(f"unknown dimensions: {sorted(extra)}")
    return Configuration(tuple(mapping[d.name] for d in space.dims))


def _check_value(dom: ParamDomain, v: Value) -> None:
    if dom.kind == CONTINUOUS:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise OutOfDomainError(f"dimension {dom.name!r}: expected a number, got {v!r}")
        if not dom.lo <= float(v) <= dom.hi:
            raise OutOfDomainError(f"dimension {dom.name!r}: {v} outside [{dom.lo}, {dom.hi}]")
    elif dom.kind == INTEGER:
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            raise OutOfDomainError(f"dimension {dom.name!r}: expected an integer, got {v!r}")
        if not dom.lo <= int(v) <= dom.hi:
            raise OutOfDomainError(f"dimension {dom.name!r}: {v} outside [{int(dom.lo)}, {int(dom.hi)}]")
    elif dom.kind == CATEGORICAL:
        if v not in dom.labels:
            raise OutOfDomainError(f"dimension {dom.name!r}: {v!r} not among labels {dom.labels}")
    elif dom.kind == FRACTION:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or float(v) not in dom.values:
            raise OutOfDomainError(f"dimension {dom.name!r}: {v!r} not among fractions {dom.values}")


def encode_many(space: SearchSpace, configs: Sequence[Configuration]) -> np.ndarray:
    """Encode configurations into rows of the unit hypercube, shape (m, encoded_width)."""
    validate_space(space)
    for cfg in configs:
        if len(cfg.values) != len(space.dims):
            raise OutOfDomainError(
                f"configuration has {len(cfg.values)} values for {len(space.dims)} dimensions"
            )
    m = len(configs)
    out = np.empty((m, space.encoded_width), dtype=float)
    col = 0
    for j, dom in enumerate(space.dims):
        vals = [cfg.values[j] for cfg in configs]
        for v in vals:
            _check_value(dom, v)
        if dom.kind == CONTINUOUS:
            arr = np.asarray(vals, dtype=float)
            if dom.scale == "log":
                lo, hi = np.log(dom.lo), np.log(dom.hi)
                out[:, col] = (np.log(arr) - lo) / (hi - lo)
            else:
                out[:, col] = (arr - dom.lo) / (dom.hi - dom.lo)
            col += 1
        elif dom.kind == INTEGER:
            arr = np.asarray(vals, dtype=float)
            out[:, col] = (arr - dom.lo) / (dom.hi - dom.lo)
            col += 1
        elif dom.kind == FRACTION:
            count = len(dom.values)
            rank = {v: i for i, v in enumerate(dom.values)}
            if count == 1:
                out[:, col] = 0.5
            else:
                out[:, col] = np.asarray([rank[float(v)] for v in vals], dtype=float) / (count - 1)
            col += 1
        else:  # categorical
            width = len(dom.labels)
            idx = {lab: i for i, lab in enumerate(dom.labels)}
            block = np.zeros((m, width))
            for i, v in enumerate(vals):
                block[i, idx[v]] = 1.0
            out[:, col : col + width] = block
            col += width
    return out


def encode(space: SearchSpace, config: Configuration) -> np.ndarray:
    """Encode a single configuration into the unit hypercube."""
    return encode_many(space, [config])[0]


def decode_many(space: SearchSpace, U) -> list[Configuration]:
    """Decode rows of unit-hypercube coordinates, rounding to admissible values.

    Integer and fraction coordinates round to the nearest grid point;
    categorical blocks take the argmax coordinate (ties go to the lowest
    label index). Coordinates are clipped into [0,1] before decoding.
    """
    validate_space(space)
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] != space.encoded_width:
        raise LengthMismatchError(
            f"expected rows of {space.encoded_width} coordinates, got shape {U.shape}"
        )
    U = np.clip(U, 0.0, 1.0)
    m = U.shape[0]
    columns: list[list[Value]] = []
    col = 0
    for dom in space.dims:
        if dom.kind == CONTINUOUS:
            x = U[:, col]
            if dom.scale == "log":
                lo, hi = np.log(dom.lo), np.log(dom.hi)
                v = np.exp(lo + x * (hi - lo))
            else:
                v = dom.lo + x * (dom.hi - dom.lo)
            v = np.minimum(np.maximum(v, dom.lo), dom.hi)
            columns.append([float(t) for t in v])
            col += 1
        elif dom.kind == INTEGER:
            v = np.floor(dom.lo + U[:, col] * (dom.hi - dom.lo) + 0.5).astype(np.int64)
            v = np.clip(v, int(dom.lo), int(dom.hi))
            columns.append([int(t) for t in v])
            col += 1
        elif dom.kind == FRACTION:
            count = len(dom.values)
            if count == 1:
                columns.append([dom.values[0]] * m)
            else:
                ranks = np.floor(U[:, col] * (count - 1) + 0.5).astype(np.int64)
                ranks = np.clip(ranks, 0, count - 1)
                columns.append([dom.values[r] for r in ranks])
            col += 1
        else:  # categorical
            width = len(dom.labels)
            idx = np.argmax(U[:, col : col + width], axis=1)
            columns.append([dom.labels[j] for j in idx])
            col += width
    return [Configuration(values) for values in zip(*columns)]


def decode(space: SearchSpace, u: Sequence[float]) -> Configuration:
    """Decode a single unit-hypercube vector into a Configuration."""
    arr = np.asarray(u, dtype=float).ravel()
    return decode_many(space, arr.reshape(1, -1))[0]


def _sobol_engine(d: int, scramble: bool, seed: int | None) -> qmc.Sobol:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return qmc.Sobol(d=d, scramble=scramble, seed=seed)


def _sobol_points(engine: qmc.Sobol, n: int) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return engine.random(n)


def sobol_init(space: SearchSpace, k: int, seed: int = 0) -> list[Configuration]:
    """First k Sobol points (all-zeros point skipped), decoded to configurations.

    Uses the standard unscrambled sequence, so the result depends only on
    (space, k); `seed` is reserved for optional scrambling and currently
    ignored.
    """
    validate_space(space)
    if space.encoded_width == 0:
        raise EmptySpaceError("cannot initialize an empty search space")
    if k < 1:
        raise ValueError(f"init count must be >= 1, got {k}")
    engine = _sobol_engine(space.encoded_width, scramble=False, seed=None)
    pts = _sobol_points(engine, k + 1)[1:]
    return decode_many(space, pts)


def _discrete_size(space: SearchSpace, cap: int) -> int | None:
    """Total number of configurations, or None if continuous/over the cap."""
    total = 1
    for dom in space.dims:
        if not dom.is_discrete:
            return None
        total *= len(dom.grid_values())
        if total > cap:
            return None
    return total


def candidate_pool(space: SearchSpace, n_max: int, seed: int) -> list[Configuration]:
    """Candidate configurations for acquisition maximization.

    Fully discrete spaces that fit in n_max are enumerated exhaustively in
    lexicographic dimension order; otherwise n_max distinct configurations
    are decoded from a seeded scrambled-Sobol sample of the unit hypercube.
    """
    validate_space(space)
    if space.encoded_width == 0:
        raise EmptySpaceError("cannot sample an empty search space")
    if n_max < 1:
        raise ValueError(f"pool size must be >= 1, got {n_max}")
    if _discrete_size(space, n_max) is not None:
        grids = [dom.grid_values() for dom in space.dims]
        return [Configuration(tup) for tup in product(*grids)]
    engine = _sobol_engine(space.encoded_width, scramble=True, seed=seed)
    pool: list[Configuration] = []
    seen: set[Configuration] = set()
    # Decoding can collapse distinct points onto the same discrete config;
    # keep drawing until the pool is full or extra batches stop helping.
    for _ in range(16):
        for cfg in decode_many(space, _sobol_points(engine, n_max)):
            if cfg not in seen:
                seen.add(cfg)
                pool.append(cfg)
                if len(pool) == n_max:
                    return pool
    return pool


def domain_from_dict(obj: Mapping) -> ParamDomain:
    """Build a dimension from its JSON object form (see the run-config schema)."""
    try:
        name = obj["name"]
        kind = obj["kind"]
        if kind == CONTINUOUS:
            return ParamDomain.continuous(name, obj["lo"], obj["hi"], obj.get("scale", "linear"))
        if kind == INTEGER:
            return ParamDomain.integer(name, obj["lo"], obj["hi"])
        if kind == CATEGORICAL:
            return ParamDomain.categorical(name, obj["labels"])
        if kind == FRACTION:
            return ParamDomain.fraction(name, obj["values"])
    except KeyError as e:
        raise SpaceError(f"domain object missing required key {e}") from None
    raise SpaceError(f"dimension {name!r}: unknown kind {kind!r}")


def space_from_json(dims: Iterable[Mapping]) -> SearchSpace:
    """Build and validate a SearchSpace from a list of JSON domain objects."""
    space = SearchSpace(tuple(domain_from_dict(d) for d in dims))
    validate_space(space)
    return space
