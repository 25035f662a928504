"""Queue models of the ultrapeer leaf-connection process.

Four model kinds share one vocabulary:

``simple``
    M/M/m/m loss queue with a single leaf class (infinite ultrapeer life).
``finite``
    The same loss queue, but the ultrapeer dies at rate ``theta``.
``gbn``
    Good / bad LimeWire / non-LimeWire leaves with the full admission rules.
``lnl``
    LimeWire / non-LimeWire leaves whose LimeWire rates switch at the
    good-leaf threshold.

Generators use the column convention: ``A[i, j]`` is the rate of moving
from state ``j`` into state ``i``, so every column sums to zero.
"""
from __future__ import annotations

import itertools
from dataclasses import astuple, dataclass, field, fields
from functools import lru_cache
from typing import ClassVar

import numpy as np
import scipy.sparse as sp

__all__ = [
    "CapacityConfig",
    "RateParams",
    "SimpleRates",
    "FiniteLifeRates",
    "GBNRates",
    "LNLRates",
    "ModelKind",
    "StateSpace",
    "Generator",
    "RateShapeError",
    "MODEL_TAGS",
    "enumerate_states",
    "can_admit",
    "build_generator",
    "generator_matrix",
]

MODEL_TAGS = ("simple", "finite", "gbn", "lnl")


class RateShapeError(ValueError):
    """Rate parameters do not match the model they are used with."""


@dataclass(frozen=True)
class CapacityConfig:
    """Leaf slot limits of a LimeWire ultrapeer.

    The ordering ``0 < c_n < c_g < c_m`` is checked by :class:`ModelKind`
    for the multi-class models only; single-class models just need
    ``c_m >= 1``, which permits tiny test queues such as ``c_m = 1``.

    Parameters
    ----------
    c_m : int
        Maximum number of leaf connections.
    c_g : int
        Good-leaf threshold; above it only good leaves are admitted.
    c_n : int
        Slots reserved for non-LimeWire leaves.
    """

    c_m: int = 30
    c_g: int = 15
    c_n: int = 3

    def __post_init__(self):
        for name in ("c_m", "c_g", "c_n"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ValueError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.c_m < 1 or self.c_g < 0 or self.c_n < 0:
            raise ValueError(f"capacities must be non-negative with c_m >= 1, got {self}")

    def check_ordering(self) -> None:
        if not 0 < self.c_n < self.c_g < self.c_m:
            raise ValueError(
                "capacities must satisfy 0 < c_n < c_g < c_m, got "
                f"c_m={self.c_m}, c_g={self.c_g}, c_n={self.c_n}"
            )

    @property
    def c_gb(self) -> int:
        """Cap on LimeWire (good + bad) leaves, ``c_m - c_n``."""
        return self.c_m - self.c_n


@dataclass(frozen=True)
class RateParams:
    """Base class for the per-model rate vectors.

    Subclasses are frozen dataclasses whose field order defines the
    ordering used by :meth:`as_array` and :meth:`from_array`. Every rate
    must be strictly positive and finite.
    """

    tag: ClassVar[str] = ""

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not np.isfinite(value) or value <= 0.0:
                raise ValueError(f"rate {f.name} must be positive and finite, got {value!r}")
            object.__setattr__(self, f.name, value)

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def keys(cls) -> tuple[str, ...]:
        """External key names (``lambda_g`` rather than ``lam_g``)."""
        return tuple(n.replace("lam", "lambda", 1) if n.startswith("lam") else n for n in cls.names())

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, values) -> "RateParams":
        values = np.asarray(values, dtype=float).ravel()
        if values.size != len(fields(cls)):
            raise RateShapeError(f"{cls.__name__} takes {len(fields(cls))} rates, got {values.size}")
        return cls(*values.tolist())

    @classmethod
    def from_mapping(cls, mapping) -> "RateParams":
        """Build from a mapping keyed by external names (``lambda_g``) or field names."""
        missing = []
        values = []
        for name, key in zip(cls.names(), cls.keys()):
            if key in mapping:
                values.append(mapping[key])
            elif name in mapping:
                values.append(mapping[name])
            else:
                missing.append(key)
        if missing:
            raise RateShapeError(f"missing rates for {cls.tag} model: {', '.join(missing)}")
        return cls(*values)

    def to_mapping(self) -> dict[str, float]:
        return dict(zip(self.keys(), astuple(self)))

    def scaled(self, factor: float) -> "RateParams":
        """Same model with every rate (including ``theta``) multiplied by ``factor``."""
        return type(self).from_array(self.as_array() * factor)


@dataclass(frozen=True)
class SimpleRates(RateParams):
    tag: ClassVar[str] = "simple"
    lam: float
    mu: float


@dataclass(frozen=True)
class FiniteLifeRates(RateParams):
    tag: ClassVar[str] = "finite"
    lam: float
    mu: float
    theta: float


@dataclass(frozen=True)
class GBNRates(RateParams):
    tag: ClassVar[str] = "gbn"
    lam_g: float
    lam_b: float
    lam_n: float
    mu_g: float
    mu_b: float
    mu_n: float
    theta: float


@dataclass(frozen=True)
class LNLRates(RateParams):
    tag: ClassVar[str] = "lnl"
    lam_a: float
    lam_b: float
    lam_n: float
    mu_a: float
    mu_b: float
    mu_n: float
    theta: float


_RATE_TYPES: dict[str, type[RateParams]] = {
    "simple": SimpleRates,
    "finite": FiniteLifeRates,
    "gbn": GBNRates,
    "lnl": LNLRates,
}

_CLASSES = {
    "simple": ("leaf",),
    "finite": ("leaf",),
    "gbn": ("good", "bad", "non"),
    "lnl": ("lime", "non"),
}


@dataclass(frozen=True)
class ModelKind:
    """A model tag together with its capacity configuration."""

    tag: str
    capacity: CapacityConfig = field(default_factory=CapacityConfig)

    def __post_init__(self):
        tag = str(self.tag).lower()
        if tag not in MODEL_TAGS:
            raise ValueError(f"unknown model {self.tag!r}; expected one of {MODEL_TAGS}")
        object.__setattr__(self, "tag", tag)
        if tag in ("gbn", "lnl"):
            self.capacity.check_ordering()

    @property
    def classes(self) -> tuple[str, ...]:
        return _CLASSES[self.tag]

    @property
    def rates_type(self) -> type[RateParams]:
        return _RATE_TYPES[self.tag]

    @property
    def finite_life(self) -> bool:
        return self.tag != "simple"

    def check_rates(self, rates: RateParams) -> None:
        if type(rates) is not self.rates_type:
            raise RateShapeError(
                f"{self.tag} model needs {self.rates_type.__name__}, got {type(rates).__name__}"
            )


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Admissible states of a model, in lexicographic order.

    ``states`` is an integer array with one row per state and one column
    per connection class. Row 0 is always the empty state.
    """

    kind: ModelKind
    states: np.ndarray
    index: dict = field(repr=False)

    def __len__(self) -> int:
        return self.states.shape[0]

    def __contains__(self, state) -> bool:
        return tuple(int(k) for k in state) in self.index

    def position(self, state) -> int:
        try:
            return self.index[tuple(int(k) for k in state)]
        except KeyError:
            raise KeyError(f"{tuple(state)} is not a state of the {self.kind.tag} model") from None

    @property
    def degrees(self) -> np.ndarray:
        """Total leaf degree of every state."""
        return self.states.sum(axis=1)


def _in_space(tag: str, cap: CapacityConfig, state: tuple[int, ...]) -> bool:
    if any(k < 0 for k in state):
        return False
    total = sum(state)
    if total > cap.c_m:
        return False
    if tag == "gbn":
        k_g, k_b, k_n = state
        return k_g + k_b <= cap.c_gb and k_b <= cap.c_g and k_n <= cap.c_g
    if tag == "lnl":
        k_l, k_n = state
        return k_l <= cap.c_gb and k_n <= cap.c_g
    return True


@lru_cache(maxsize=32)
def enumerate_states(kind: ModelKind) -> StateSpace:
    """List every admissible state of ``kind`` in lexicographic order."""
    cap = kind.capacity
    dims = len(kind.classes)
    states = [
        s
        for s in itertools.product(range(cap.c_m + 1), repeat=dims)
        if _in_space(kind.tag, cap, s)
    ]
    arr = np.array(states, dtype=np.int64).reshape(len(states), dims)
    arr.setflags(write=False)
    return StateSpace(kind=kind, states=arr, index={s: i for i, s in enumerate(states)})


def can_admit(kind: ModelKind, state, cls: str) -> bool:
    """Whether a leaf of class ``cls`` arriving in ``state`` is accepted.

    For the ``lnl`` model the answer covers the LimeWire rate that is in
    force at ``state``: below the good-leaf threshold every LimeWire leaf
    is accepted, above it only while there is LimeWire room left.
    """
    if cls not in kind.classes:
        raise ValueError(f"class {cls!r} is not defined for the {kind.tag} model")
    cap = kind.capacity
    state = tuple(int(k) for k in state)
    total = sum(state)
    if kind.tag in ("simple", "finite"):
        return total < cap.c_m
    if kind.tag == "gbn":
        k_g, k_b, k_n = state
        if cls == "good":
            return k_g + k_b < cap.c_gb and total < cap.c_m
        if cls == "bad":
            return total < cap.c_g
        return k_n < cap.c_n or total < cap.c_g
    k_l, k_n = state
    if cls == "lime":
        if total >= cap.c_g:
            return k_l < cap.c_gb and total < cap.c_m
        return True
    return k_n < cap.c_n or total < cap.c_g


# Position of each class's arrival / departure rate in RateParams.as_array().
# LNL carries two LimeWire rates (above / below threshold) for one class.
_ARRIVAL_SLOT = {"simple": (0,), "finite": (0,), "gbn": (0, 1, 2), "lnl": (None, 2)}
_DEPARTURE_SLOT = {"simple": (1,), "finite": (1,), "gbn": (3, 4, 5), "lnl": (None, 5)}


def _arrival_param(kind: ModelKind, state: tuple[int, ...], c: int) -> int:
    if kind.tag == "lnl" and c == 0:
        return 0 if sum(state) >= kind.capacity.c_g else 1
    return _ARRIVAL_SLOT[kind.tag][c]


def _departure_param(kind: ModelKind, state: tuple[int, ...], c: int) -> int:
    if kind.tag == "lnl" and c == 0:
        return 3 if sum(state) >= kind.capacity.c_g else 4
    return _DEPARTURE_SLOT[kind.tag][c]


@lru_cache(maxsize=32)
def _transition_table(kind: ModelKind):
    """Edge list ``(dst, src, param, multiplier)`` independent of rate values."""
    space = enumerate_states(kind)
    dst, src, param, mult = [], [], [], []
    for j, row in enumerate(space.states):
        state = tuple(int(k) for k in row)
        for c, cls in enumerate(kind.classes):
            if can_admit(kind, state, cls):
                up = list(state)
                up[c] += 1
                dst.append(space.index[tuple(up)])
                src.append(j)
                param.append(_arrival_param(kind, state, c))
                mult.append(1.0)
            if state[c] > 0:
                down = list(state)
                down[c] -= 1
                dst.append(space.index[tuple(down)])
                src.append(j)
                param.append(_departure_param(kind, state, c))
                mult.append(float(state[c]))
    table = tuple(np.asarray(a) for a in (dst, src, param, mult))
    for a in table:
        a.setflags(write=False)
    return table


def generator_matrix(kind: ModelKind, values) -> sp.csc_matrix:
    """Sparse generator for a raw rate vector ordered as ``RateParams.as_array``."""
    values = np.asarray(values, dtype=float)
    dst, src, param, mult = _transition_table(kind)
    n = len(enumerate_states(kind))
    off = mult * values[param]
    diag = -np.bincount(src, weights=off, minlength=n)
    rows = np.concatenate([dst, np.arange(n)])
    cols = np.concatenate([src, np.arange(n)])
    data = np.concatenate([off, diag])
    return sp.csc_matrix((data, (rows, cols)), shape=(n, n))


@dataclass(frozen=True, eq=False)
class Generator:
    """Transition-rate matrix over a :class:`StateSpace` (life termination excluded)."""

    space: StateSpace
    matrix: sp.csc_matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()

    def rate(self, src, dst) -> float:
        """Rate of the transition ``src -> dst`` (states given as tuples)."""
        return float(self.matrix[self.space.position(dst), self.space.position(src)])

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def build_generator(kind: ModelKind, rates: RateParams) -> Generator:
    """Assemble the generator of ``kind`` at ``rates``.

    ``theta`` is not folded in; solvers work with ``A - theta*I``.
    """
    kind.check_rates(rates)
    return Generator(space=enumerate_states(kind), matrix=generator_matrix(kind, rates.as_array()))
