"""Equilibrium degree distributions and the L1 fitting metric.

Distributions are plain 1-d float arrays. State-indexed ones follow the
ordering of a :class:`~leafqueue.model.StateSpace`; degree-indexed ones
run over degrees ``0..c_m``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import gammaln, logsumexp

from .model import Generator, ModelKind, RateParams, StateSpace, build_generator, enumerate_states

__all__ = [
    "NumericalFailure",
    "MarginalReport",
    "check_distribution",
    "closed_form_mmmm",
    "solve_finite_life",
    "solve_stationary",
    "degree_marginal",
    "degree_aggregator",
    "class_marginals",
    "l1_distance",
    "equilibrium",
    "degree_distribution",
]

NORM_TOL = 1e-9
RESIDUAL_TOL = 1e-8


class NumericalFailure(RuntimeError):
    """A linear solve did not meet its residual bound."""


def check_distribution(p, tol: float = NORM_TOL) -> np.ndarray:
    """Validate a probability vector and return it as a float array."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("distribution must be a non-empty 1-d vector")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError("distribution entries must be finite and non-negative")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"distribution sums to {p.sum():.12g}, not 1")
    return p


def closed_form_mmmm(lam: float, mu: float, n: int) -> np.ndarray:
    """Truncated Poisson equilibrium of the M/M/n/n loss queue.

    ``q_i`` is proportional to ``(lam/mu)**i / i!`` for ``i = 0..n``;
    evaluated in log space so ``n = 30`` with large loads neither
    overflows nor underflows.
    """
    if not (lam > 0 and mu > 0):
        raise ValueError("arrival and departure rates must be positive")
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    i = np.arange(int(n) + 1)
    logw = i * np.log(lam / mu) - gammaln(i + 1)
    return np.exp(logw - logsumexp(logw))


def _check_residual(M, x, b):
    resid = np.max(np.abs(M @ x - b))
    if not np.isfinite(resid) or resid > RESIDUAL_TOL * max(np.max(np.abs(b)), 1.0):
        raise NumericalFailure(f"linear solve residual {resid:.3e} exceeds tolerance")


def _normalize(x: np.ndarray) -> np.ndarray:
    x = np.where(x < 0, 0.0, x)
    total = x.sum()
    if not np.isfinite(total) or total <= 0:
        raise NumericalFailure("solution has no positive mass")
    return x / total


def _solve_life_integral(A: sp.spmatrix, theta: float) -> np.ndarray:
    n = A.shape[0]
    M = (theta * sp.identity(n, format="csc") - A).tocsc()
    b = np.zeros(n)
    b[0] = 1.0
    try:
        x = spla.splu(M, permc_spec="MMD_AT_PLUS_A").solve(b)
    except RuntimeError as exc:  # exactly singular factor
        raise NumericalFailure(str(exc)) from exc
    _check_residual(M, x, b)
    return _normalize(x)


def solve_finite_life(gen: Generator, theta: float) -> np.ndarray:
    """Equilibrium of a finite-life queue started empty.

    Solves ``(theta*I - A) x = e0`` and normalizes. ``x`` is the expected
    time spent in each state over one ultrapeer life, which is the
    normalized integral of ``exp((A - theta*I) t) e0``.

    Raises
    ------
    ValueError
        If ``theta`` is not strictly positive.
    NumericalFailure
        If the solve residual exceeds ``1e-8``.
    """
    if not (theta > 0) or not np.isfinite(theta):
        raise ValueError(f"death rate theta must be positive and finite, got {theta!r}")
    return _solve_life_integral(gen.matrix, float(theta))


def solve_stationary(gen: Generator) -> np.ndarray:
    """Null vector of ``A`` normalized to a distribution (infinite life).

    One balance equation is replaced by the normalization row, which makes
    the system nonsingular for an irreducible generator.
    """
    A = gen.matrix.tolil(copy=True)
    n = A.shape[0]
    A[n - 1, :] = np.ones(n)
    A = A.tocsc()
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        x = spla.spsolve(A, b)
    except RuntimeError as exc:
        raise NumericalFailure(str(exc)) from exc
    _check_residual(A, x, b)
    return _normalize(x)


def degree_aggregator(space: StateSpace) -> sp.csr_matrix:
    """Sparse 0/1 matrix mapping a state-indexed vector to degrees ``0..c_m``."""
    deg = space.degrees
    n = len(space)
    return sp.csr_matrix(
        (np.ones(n), (deg, np.arange(n))), shape=(space.kind.capacity.c_m + 1, n)
    )


def degree_marginal(dist, space: StateSpace) -> np.ndarray:
    """Probability of each total leaf degree ``0..c_m``."""
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (len(space),):
        raise ValueError(f"distribution has {dist.size} entries, state space has {len(space)}")
    return np.bincount(space.degrees, weights=dist, minlength=space.kind.capacity.c_m + 1)


@dataclass(frozen=True)
class MarginalReport:
    """Per-class and total leaf-degree marginals of a multi-class model."""

    classes: tuple[str, ...]
    marginals: dict
    means: dict
    total: np.ndarray
    total_mean: float


def class_marginals(dist, space: StateSpace) -> MarginalReport:
    """Marginal distribution and mean of every connection class."""
    if len(space.kind.classes) < 2:
        raise ValueError(f"the {space.kind.tag} model has a single connection class")
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (len(space),):
        raise ValueError(f"distribution has {dist.size} entries, state space has {len(space)}")
    size = space.kind.capacity.c_m + 1
    marginals, means = {}, {}
    for c, name in enumerate(space.kind.classes):
        col = space.states[:, c]
        marginals[name] = np.bincount(col, weights=dist, minlength=size)
        means[name] = float(col @ dist)
    total = degree_marginal(dist, space)
    return MarginalReport(
        classes=space.kind.classes,
        marginals=marginals,
        means=means,
        total=total,
        total_mean=float(np.arange(size) @ total),
    )


def l1_distance(p, q) -> float:
    """``sum(|p_i - q_i|)``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"support mismatch: {p.shape} vs {q.shape}")
    return float(np.abs(p - q).sum())


def equilibrium(kind: ModelKind, rates: RateParams) -> np.ndarray:
    """State-indexed equilibrium of ``kind`` at ``rates``.

    The ``simple`` model uses the closed form; every finite-life model
    goes through :func:`solve_finite_life`.
    """
    kind.check_rates(rates)
    if kind.tag == "simple":
        return closed_form_mmmm(rates.lam, rates.mu, kind.capacity.c_m)
    return solve_finite_life(build_generator(kind, rates), rates.theta)


def degree_distribution(kind: ModelKind, rates: RateParams) -> np.ndarray:
    return degree_marginal(equilibrium(kind, rates), enumerate_states(kind))
