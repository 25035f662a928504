import numpy as np
import pytest

from leafqueue.equilibrium import class_marginals, closed_form_mmmm, degree_distribution, equilibrium, l1_distance
from leafqueue.model import CapacityConfig, FiniteLifeRates, GBNRates, LNLRates, ModelKind, SimpleRates, enumerate_states
from leafqueue.presets import DEFAULT_RATES
from leafqueue.ssa import EventCapExceeded, SimConfig, simulate, simulate_infinite_life


def test_no_arrivals_gives_point_mass(finite):
    est = simulate(finite, FiniteLifeRates(1e-9, 1.0, 1.0), SimConfig(lifetimes=2000, seed=3))
    assert est.distribution[0] == pytest.approx(1.0, abs=1e-6)
    assert est.distribution.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(est.stderr >= 0)


def test_finite_life_matches_analytic(finite, finite_rates):
    est = simulate(finite, finite_rates, SimConfig(lifetimes=100_000, seed=11))
    assert l1_distance(est.distribution, degree_distribution(finite, finite_rates)) <= 0.02


def test_gbn_matches_analytic(gbn, gbn_rates):
    est = simulate(gbn, gbn_rates, SimConfig(lifetimes=100_000, seed=12))
    q = equilibrium(gbn, gbn_rates)
    report = class_marginals(q, enumerate_states(gbn))
    assert l1_distance(est.distribution, report.total) <= 0.02
    np.testing.assert_allclose(est.class_means, [report.means[c] for c in gbn.classes], atol=0.3)


def test_lnl_matches_analytic(lnl):
    rates = DEFAULT_RATES["lnl"]
    est = simulate(lnl, rates, SimConfig(lifetimes=50_000, seed=13))
    assert l1_distance(est.distribution, degree_distribution(lnl, rates)) <= 0.02


def test_small_gbn_trajectories_are_legal():
    kind = ModelKind("gbn", CapacityConfig(c_m=8, c_g=5, c_n=2))
    rates = GBNRates(3.0, 2.0, 1.5, 0.2, 0.3, 0.4, 0.05)
    est = simulate(kind, rates, SimConfig(lifetimes=5000, seed=1, check=True))
    assert l1_distance(est.distribution, degree_distribution(kind, rates)) <= 0.03


def test_lnl_trajectories_are_legal(lnl):
    simulate(lnl, DEFAULT_RATES["lnl"], SimConfig(lifetimes=2000, seed=4, check=True))


def test_same_seed_same_estimate(gbn, gbn_rates):
    a = simulate(gbn, gbn_rates, SimConfig(lifetimes=3000, seed=42))
    b = simulate(gbn, gbn_rates, SimConfig(lifetimes=3000, seed=42))
    c = simulate(gbn, gbn_rates, SimConfig(lifetimes=3000, seed=43))
    assert a.distribution.tobytes() == b.distribution.tobytes()
    assert a.stderr.tobytes() == b.stderr.tobytes()
    assert a.events == b.events
    assert a.distribution.tobytes() != c.distribution.tobytes()


def test_stderr_shrinks_like_root_n(finite, finite_rates):
    small = simulate(finite, finite_rates, SimConfig(lifetimes=20_000, seed=5))
    large = simulate(finite, finite_rates, SimConfig(lifetimes=40_000, seed=6))
    ratio = small.stderr.mean() / large.stderr.mean()
    assert 1.2 <= ratio <= 1.7


def test_gbn_collapses_to_single_class():
    # good leaves alone are capped at c_gb = 27
    gbn = ModelKind("gbn")
    rates = GBNRates(11.0926, 1e-9, 1e-9, 0.1824, 0.1828, 0.2980, 0.0714)
    est = simulate(gbn, rates, SimConfig(lifetimes=50_000, seed=8))
    single = ModelKind("finite", CapacityConfig(c_m=27))
    q = degree_distribution(single, FiniteLifeRates(11.0926, 0.1824, 0.0714))
    assert l1_distance(est.distribution[:28], q) <= 0.02
    assert est.distribution[28:].sum() < 1e-6


def test_simple_model_needs_theta(simple):
    with pytest.raises(ValueError):
        simulate(simple, SimpleRates(1.0, 1.0), SimConfig(lifetimes=10))


def test_event_cap(finite, finite_rates):
    with pytest.raises(EventCapExceeded):
        simulate(finite, finite_rates, SimConfig(lifetimes=10, max_events=5))


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(lifetimes=0)


def test_infinite_life_two_state():
    kind = ModelKind("simple", CapacityConfig(c_m=1))
    est = simulate_infinite_life(kind, SimpleRates(1.0, 1.0), 2e5, seed=1)
    np.testing.assert_allclose(est.distribution, [0.5, 0.5], atol=0.01)


def test_infinite_life_matches_closed_form(simple):
    est = simulate_infinite_life(simple, SimpleRates(10.2476, 0.21), 1e5, seed=2, check=True)
    assert l1_distance(est.distribution, closed_form_mmmm(10.2476, 0.21, 30)) <= 0.02
    assert est.distribution.sum() == pytest.approx(1.0, abs=1e-9)


def test_infinite_life_is_deterministic(simple):
    a = simulate_infinite_life(simple, SimpleRates(3.0, 0.5), 1e3, seed=9)
    b = simulate_infinite_life(simple, SimpleRates(3.0, 0.5), 1e3, seed=9)
    assert a.distribution.tobytes() == b.distribution.tobytes()


def test_infinite_life_rejects_zero_time(simple):
    with pytest.raises(ValueError):
        simulate_infinite_life(simple, SimpleRates(1.0, 1.0), 0.0)
