"""scikit-learn style wrapper around the fitter.

``LeafDegreeQueue`` behaves like a density estimator over leaf degrees:
``fit`` takes observed degrees (one per sampled ultrapeer),
``score_samples`` returns log-probabilities under the fitted model and
``sample`` draws synthetic degrees.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted

from .equilibrium import class_marginals, equilibrium, l1_distance
from .fitting import DegreeHistogram, FitOptions, fit
from .model import CapacityConfig, ModelKind, RateParams, enumerate_states
from .presets import DEFAULT_RATES

__all__ = ["LeafDegreeQueue", "check_degrees", "histogram_from_degrees"]


def check_degrees(X, c_m: int) -> np.ndarray:
    """Validate observed degrees; accepts shape ``(n,)`` or ``(n, 1)``."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != 1:
        raise ValueError(f"expected a single column of degrees, got {X.shape[1]} columns")
    degrees = X[:, 0]
    if np.any(degrees != np.round(degrees)) or np.any(degrees < 0) or np.any(degrees > c_m):
        raise ValueError(f"degrees must be integers in 0..{c_m}")
    return degrees.astype(np.int64)


def histogram_from_degrees(degrees, c_m: int, sample_weight=None) -> DegreeHistogram:
    degrees = check_degrees(degrees, c_m)
    if sample_weight is not None:
        sample_weight = np.asarray(sample_weight, dtype=float)
        if sample_weight.shape != degrees.shape:
            raise ValueError("sample_weight must have one entry per sample")
    counts = np.bincount(degrees, weights=sample_weight, minlength=c_m + 1)
    return DegreeHistogram.from_counts(counts)


class LeafDegreeQueue(BaseEstimator):
    """Leaf-degree distribution of an ultrapeer modeled as a loss queue.

    Parameters
    ----------
    model : {"simple", "finite", "gbn", "lnl"}
        Queue model to fit.
    c_m, c_g, c_n : int
        Maximum leaves, good-leaf threshold, non-LimeWire reserve.
    init : RateParams or dict, optional
        Starting rates; defaults to the reference fit for ``model``.
    max_iter, tol, n_restarts, simplex_scale, jitter :
        Nelder-Mead settings, see :class:`~leafqueue.fitting.FitOptions`.
    random_state : int
        Seed for restart jitter.

    Attributes
    ----------
    rates_ : RateParams
    distribution_ : ndarray of shape (c_m + 1,)
        Fitted equilibrium degree distribution.
    objective_ : float
        L1 distance between ``distribution_`` and the training histogram.
    converged_ : bool
    n_iter_ : int
    fit_result_ : FitResult
    """

    def __init__(
        self,
        model="gbn",
        c_m=30,
        c_g=15,
        c_n=3,
        init=None,
        max_iter=2000,
        tol=1e-6,
        n_restarts=5,
        simplex_scale=0.25,
        jitter=0.25,
        random_state=0,
    ):
        self.model = model
        self.c_m = c_m
        self.c_g = c_g
        self.c_n = c_n
        self.init = init
        self.max_iter = max_iter
        self.tol = tol
        self.n_restarts = n_restarts
        self.simplex_scale = simplex_scale
        self.jitter = jitter
        self.random_state = random_state

    def _kind(self) -> ModelKind:
        return ModelKind(self.model, CapacityConfig(self.c_m, self.c_g, self.c_n))

    def _init_rates(self, kind: ModelKind) -> RateParams:
        if self.init is None:
            return DEFAULT_RATES[kind.tag]
        if isinstance(self.init, RateParams):
            return self.init
        return kind.rates_type.from_mapping(self.init)

    def fit(self, X, y=None, sample_weight=None):
        """Fit rates to observed degrees ``X``."""
        kind = self._kind()
        return self.fit_histogram(histogram_from_degrees(X, kind.capacity.c_m, sample_weight))

    def fit_histogram(self, histogram):
        """Fit rates to an already aggregated degree histogram."""
        kind = self._kind()
        if not isinstance(histogram, DegreeHistogram):
            histogram = DegreeHistogram(histogram)
        opts = FitOptions(
            max_iter=self.max_iter,
            tol=self.tol,
            restarts=self.n_restarts,
            simplex_scale=self.simplex_scale,
            jitter=self.jitter,
            seed=self.random_state,
        )
        result = fit(kind, histogram, self._init_rates(kind), opts)
        self.kind_ = kind
        self.fit_result_ = result
        self.rates_ = result.rates
        self.distribution_ = result.distribution
        self.objective_ = result.objective
        self.converged_ = result.converged
        self.n_iter_ = result.iterations
        return self

    def predict_proba(self, X=None):
        """Fitted degree distribution, one row per sample in ``X`` (or one row)."""
        check_is_fitted(self, "distribution_")
        n = 1 if X is None else check_degrees(X, self.kind_.capacity.c_m).size
        return np.tile(self.distribution_, (n, 1))

    def score_samples(self, X):
        """Log-probability of each observed degree."""
        check_is_fitted(self, "distribution_")
        degrees = check_degrees(X, self.kind_.capacity.c_m)
        with np.errstate(divide="ignore"):
            return np.log(self.distribution_[degrees])

    def score(self, X, y=None, sample_weight=None):
        """Negative L1 distance to the histogram of ``X`` (higher is better)."""
        check_is_fitted(self, "distribution_")
        hist = histogram_from_degrees(X, self.kind_.capacity.c_m, sample_weight)
        return -l1_distance(self.distribution_, hist.probabilities)

    def sample(self, n_samples=1, random_state=None):
        """Draw leaf degrees from the fitted distribution."""
        check_is_fitted(self, "distribution_")
        rng = check_random_state(random_state)
        return rng.choice(self.distribution_.size, size=n_samples, p=self.distribution_)

    def class_marginals(self):
        """Per-class marginals at the fitted rates (multi-class models only)."""
        check_is_fitted(self, "rates_")
        space = enumerate_states(self.kind_)
        return class_marginals(equilibrium(self.kind_, self.rates_), space)
