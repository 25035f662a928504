"""Reference rate vectors, in events per half hour.

``DEFAULT_RATES`` holds the best fits reported for the 2006 LimeWire
ultrapeer measurement; they are the default starting points of the fitter
and the regression anchors of the test suite.
"""
from .model import FiniteLifeRates, GBNRates, LNLRates, SimpleRates

TIME_UNIT_HOURS = 0.5
MEASURED_LEAF_LIFE_HOURS = 2.4
MEASURED_ULTRAPEER_LIFE_HOURS = 10.0

DEFAULT_RATES = {
    "simple": SimpleRates(lam=10.2476, mu=0.21),
    "finite": FiniteLifeRates(lam=10.5179, mu=0.2116, theta=0.0374),
    "gbn": GBNRates(
        lam_g=11.0926, lam_b=5.6722, lam_n=3.5248,
        mu_g=0.1824, mu_b=0.1828, mu_n=0.2980, theta=0.0714,
    ),
    "lnl": LNLRates(
        lam_a=11.1363, lam_b=19.7656, lam_n=3.5906,
        mu_a=0.1849, mu_b=0.5330, mu_n=0.2984, theta=0.0707,
    ),
}


def measured_finite_life(lam: float) -> FiniteLifeRates:
    """Finite-life rates with departure and death taken from measured lifetimes.

    Note the measured ultrapeer life gives ``theta = 0.05``; 0.052 is the
    rounded value usually quoted alongside it.
    """
    return FiniteLifeRates(
        lam=lam,
        mu=TIME_UNIT_HOURS / MEASURED_LEAF_LIFE_HOURS,
        theta=TIME_UNIT_HOURS / MEASURED_ULTRAPEER_LIFE_HOURS,
    )
