"""Finite-life loss-queue models of Gnutella ultrapeer leaf degree."""
from .equilibrium import (
    MarginalReport,
    NumericalFailure,
    class_marginals,
    closed_form_mmmm,
    degree_distribution,
    degree_marginal,
    equilibrium,
    l1_distance,
    solve_finite_life,
    solve_stationary,
)
from .estimator import LeafDegreeQueue
from .fitting import (
    DegreeHistogram,
    FitOptions,
    FitResult,
    fit,
    limewire_ratio,
    lnl_init_from_gbn,
)
from .model import (
    CapacityConfig,
    FiniteLifeRates,
    GBNRates,
    Generator,
    LNLRates,
    ModelKind,
    RateParams,
    RateShapeError,
    SimpleRates,
    StateSpace,
    build_generator,
    can_admit,
    enumerate_states,
)
from .presets import DEFAULT_RATES
from .ssa import EventCapExceeded, SimConfig, SimEstimate, simulate, simulate_infinite_life

__version__ = "0.1.0"
