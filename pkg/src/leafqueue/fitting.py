"""Fit queue-model rates to an empirical leaf-degree histogram.

The objective is the L1 distance between the model's equilibrium degree
distribution and the histogram. It is minimized with Nelder-Mead over
log-rates, so positivity holds by construction. The search is restarted
from log-normally jittered copies of the initial point and the best
restart wins.

Multiplying every rate (``theta`` included) by the same factor only
rescales time and leaves the equilibrium unchanged. Only rate ratios can
be identified from a degree histogram.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .equilibrium import (
    NumericalFailure,
    _solve_life_integral,
    closed_form_mmmm,
    degree_aggregator,
    l1_distance,
)
from .model import (
    GBNRates,
    LNLRates,
    ModelKind,
    RateParams,
    RateShapeError,
    enumerate_states,
    generator_matrix,
)

__all__ = [
    "DegreeHistogram",
    "FitOptions",
    "FitResult",
    "RestartTrace",
    "fit",
    "lnl_init_from_gbn",
    "limewire_ratio",
    "LOG_RATE_BOUNDS",
]

LOG_RATE_BOUNDS = (np.log(1e-4), np.log(1e3))


@dataclass(frozen=True)
class DegreeHistogram:
    """Empirical leaf-degree histogram over degrees ``0..len-1``.

    ``probabilities`` is always normalized; ``total`` keeps the sample size
    when the histogram was built from counts.
    """

    probabilities: np.ndarray
    total: float | None = None

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("histogram must be a non-empty 1-d vector")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("histogram entries must be finite and non-negative")
        if not p.sum() > 0:
            raise ValueError("histogram has no positive entry")
        p = p / p.sum()
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def from_counts(cls, counts) -> "DegreeHistogram":
        counts = np.asarray(counts, dtype=float)
        return cls(counts, total=float(counts.sum()))

    @property
    def c_m(self) -> int:
        return self.probabilities.size - 1


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 2000
    tol: float = 1e-6
    restarts: int = 5
    simplex_scale: float = 0.25
    jitter: float = 0.25
    seed: int = 0

    def __post_init__(self):
        for name in ("max_iter", "tol", "restarts", "simplex_scale", "jitter"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class RestartTrace:
    """Outcome of one Nelder-Mead run.

    ``best_objective`` holds the best objective value after every
    iteration and is non-increasing.
    """

    start: RateParams
    rates: RateParams
    objective: float
    iterations: int
    evaluations: int
    converged: bool
    best_objective: list = field(repr=False)


@dataclass(frozen=True)
class FitResult:
    rates: RateParams
    distribution: np.ndarray
    objective: float
    iterations: int
    converged: bool
    restarts: list = field(repr=False)

    def report(self) -> dict:
        """JSON-serializable summary."""
        return {
            "model": self.rates.tag,
            "rates": self.rates.to_mapping(),
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "restarts": [
                {
                    "start": t.start.to_mapping(),
                    "rates": t.rates.to_mapping(),
                    "objective": t.objective,
                    "iterations": t.iterations,
                    "evaluations": t.evaluations,
                    "converged": t.converged,
                    "best_objective": t.best_objective,
                }
                for t in self.restarts
            ],
        }


class _DegreeModel:
    """Maps a raw rate vector to the equilibrium degree distribution.

    Transition structure and the degree aggregation matrix are built once;
    each call only refills rate values and factorizes.
    """

    def __init__(self, kind: ModelKind):
        self.kind = kind
        if kind.tag != "simple":
            self.aggregate = degree_aggregator(enumerate_states(kind))

    def __call__(self, values: np.ndarray) -> np.ndarray:
        if self.kind.tag == "simple":
            return closed_form_mmmm(values[0], values[1], self.kind.capacity.c_m)
        A = generator_matrix(self.kind, values)
        return self.aggregate @ _solve_life_integral(A, values[-1])


def _objective(model: _DegreeModel, target: np.ndarray):
    lo, hi = LOG_RATE_BOUNDS

    def f(log_rates):
        values = np.exp(np.clip(log_rates, lo, hi))
        try:
            with np.errstate(all="raise"):
                d = model(values)
        except (NumericalFailure, FloatingPointError, ValueError, ZeroDivisionError):
            return np.inf
        value = l1_distance(d, target)
        return value if np.isfinite(value) else np.inf

    return f


def _initial_simplex(x0: np.ndarray, scale: float) -> np.ndarray:
    lo, hi = LOG_RATE_BOUNDS
    sim = np.tile(x0, (x0.size + 1, 1))
    for i in range(x0.size):
        step = scale if x0[i] + scale <= hi else -scale
        sim[i + 1, i] += step
    return sim


def fit(
    kind: ModelKind,
    empirical: DegreeHistogram,
    init: RateParams,
    opts: FitOptions | None = None,
) -> FitResult:
    """Find rates whose equilibrium degree distribution is L1-closest to ``empirical``.

    The first restart starts exactly at ``init``; the others start at
    ``init`` times independent log-normal factors (sigma ``opts.jitter``)
    drawn from ``opts.seed``. A candidate at which the solver fails scores
    ``+inf`` and the search continues.

    Raises
    ------
    RateShapeError
        If ``init`` does not match ``kind``.
    ValueError
        If the histogram does not cover degrees ``0..c_m``.
    NumericalFailure
        If no restart ever produced a finite objective.
    """
    opts = opts or FitOptions()
    kind.check_rates(init)
    if not isinstance(empirical, DegreeHistogram):
        empirical = DegreeHistogram(empirical)
    if empirical.c_m != kind.capacity.c_m:
        raise ValueError(
            f"histogram covers degrees 0..{empirical.c_m}, model needs 0..{kind.capacity.c_m}"
        )
    target = empirical.probabilities
    model = _DegreeModel(kind)
    objective = _objective(model, target)
    lo, hi = LOG_RATE_BOUNDS
    bounds = [(lo, hi)] * len(init.names())
    x0 = np.clip(np.log(init.as_array()), lo, hi)
    rng = np.random.default_rng(opts.seed)

    traces = []
    for r in range(opts.restarts):
        start = x0 if r == 0 else np.clip(x0 + rng.normal(0.0, opts.jitter, x0.size), lo, hi)
        best = []
        res = minimize(
            objective,
            start,
            method="Nelder-Mead",
            bounds=bounds,
            callback=lambda intermediate_result: best.append(float(intermediate_result.fun)),
            options={
                "maxiter": opts.max_iter,
                "initial_simplex": _initial_simplex(start, opts.simplex_scale),
                "fatol": opts.tol,
                "xatol": np.inf,
                "adaptive": True,
            },
        )
        fsim = res.final_simplex[1]
        converged = bool(np.all(np.isfinite(fsim)) and fsim.max() - fsim.min() < opts.tol)
        traces.append(
            RestartTrace(
                start=type(init).from_array(np.exp(start)),
                rates=type(init).from_array(np.exp(np.clip(res.x, lo, hi))),
                objective=float(res.fun),
                iterations=int(res.nit),
                evaluations=int(res.nfev),
                converged=converged,
                best_objective=best,
            )
        )

    winner = min(traces, key=lambda t: t.objective)
    if not np.isfinite(winner.objective):
        raise NumericalFailure("every restart failed to produce a finite objective")
    distribution = model(winner.rates.as_array())
    return FitResult(
        rates=winner.rates,
        distribution=distribution,
        objective=l1_distance(distribution, target),
        iterations=sum(t.iterations for t in traces),
        converged=winner.converged,
        restarts=traces,
    )


def lnl_init_from_gbn(gbn: RateParams) -> LNLRates:
    """Starting point for an LNL fit from fitted GBN rates.

    Above the threshold LimeWire arrivals are good leaves only; below it
    good and bad arrivals merge.
    """
    if not isinstance(gbn, GBNRates):
        raise RateShapeError(f"expected GBNRates, got {type(gbn).__name__}")
    return LNLRates(
        lam_a=gbn.lam_g,
        lam_b=gbn.lam_g + gbn.lam_b,
        lam_n=gbn.lam_n,
        mu_a=gbn.mu_g,
        mu_b=gbn.mu_b,
        mu_n=gbn.mu_n,
        theta=gbn.theta,
    )


def limewire_ratio(params: RateParams) -> float:
    """Non-LimeWire to LimeWire arrival ratio ``lam_n / (lam_g + lam_b)``."""
    if not isinstance(params, GBNRates):
        raise RateShapeError(f"expected GBNRates, got {type(params).__name__}")
    return params.lam_n / (params.lam_g + params.lam_b)
