from collections import deque
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leafqueue.model import (
    CapacityConfig,
    FiniteLifeRates,
    GBNRates,
    LNLRates,
    ModelKind,
    RateShapeError,
    SimpleRates,
    build_generator,
    can_admit,
    enumerate_states,
)

RATE_TYPES = {"simple": SimpleRates, "finite": FiniteLifeRates, "gbn": GBNRates, "lnl": LNLRates}
rate = st.floats(min_value=1e-3, max_value=50.0, allow_nan=False)


def brute_force_count(tag, cap):
    n = 0
    for s in itertools.product(range(cap.c_m + 1), repeat={"gbn": 3, "lnl": 2}.get(tag, 1)):
        total = sum(s)
        if total > cap.c_m:
            continue
        if tag == "gbn" and not (s[0] + s[1] <= cap.c_gb and s[1] <= cap.c_g and s[2] <= cap.c_g):
            continue
        if tag == "lnl" and not (s[0] <= cap.c_gb and s[1] <= cap.c_g):
            continue
        n += 1
    return n


def test_capacity_defaults():
    cap = CapacityConfig()
    assert (cap.c_m, cap.c_g, cap.c_n, cap.c_gb) == (30, 15, 3, 27)


@pytest.mark.parametrize("bad", [(30, 3, 15), (30, 30, 3), (30, 15, 0)])
def test_multiclass_capacity_ordering(bad):
    with pytest.raises(ValueError):
        ModelKind("gbn", CapacityConfig(*bad))


def test_single_class_allows_tiny_capacity():
    assert len(enumerate_states(ModelKind("simple", CapacityConfig(c_m=1)))) == 2


def test_unknown_model():
    with pytest.raises(ValueError):
        ModelKind("powerlaw")


@pytest.mark.parametrize(
    "tag, expected", [("simple", 31), ("finite", 31), ("gbn", 4000), ("lnl", 370)]
)
def test_state_counts(tag, expected):
    kind = ModelKind(tag)
    assert len(enumerate_states(kind)) == expected
    assert brute_force_count(tag, kind.capacity) == expected


@pytest.mark.parametrize("tag", ["simple", "gbn", "lnl"])
def test_state_space_index_and_order(tag):
    space = enumerate_states(ModelKind(tag))
    rows = [tuple(r) for r in space.states.tolist()]
    assert rows == sorted(rows)
    assert all(v == 0 for v in rows[0])
    assert [space.index[r] for r in rows] == list(range(len(rows)))


@pytest.mark.parametrize(
    "state, cls, expected",
    [
        ((27, 0, 0), "good", False),
        ((10, 4, 0), "bad", True),
        ((20, 0, 3), "non", False),
        ((5, 0, 3), "non", True),
        ((26, 0, 3), "good", True),
        ((26, 0, 4), "good", False),
        ((10, 5, 0), "bad", False),
    ],
)
def test_can_admit_gbn(gbn, state, cls, expected):
    assert can_admit(gbn, state, cls) is expected


@pytest.mark.parametrize(
    "state, cls, expected",
    [
        ((14, 0), "lime", True),
        ((20, 0), "lime", True),
        ((27, 0), "lime", False),
        ((24, 6), "lime", False),
        ((20, 3), "non", False),
        ((5, 3), "non", True),
    ],
)
def test_can_admit_lnl(lnl, state, cls, expected):
    assert can_admit(lnl, state, cls) is expected


def test_can_admit_unknown_class(gbn):
    with pytest.raises(ValueError):
        can_admit(gbn, (0, 0, 0), "lime")


def test_good_excluded_at_limewire_cap(gbn):
    cap = gbn.capacity
    for k_g in range(cap.c_gb + 1):
        k_b = cap.c_gb - k_g
        for k_n in range(cap.c_m - cap.c_gb + 1):
            if (k_g, k_b, k_n) in enumerate_states(gbn):
                assert not can_admit(gbn, (k_g, k_b, k_n), "good")


def test_simple_two_state_generator():
    kind = ModelKind("simple", CapacityConfig(c_m=1))
    A = build_generator(kind, SimpleRates(1.0, 1.0)).toarray()
    np.testing.assert_array_equal(A, [[-1.0, 1.0], [1.0, -1.0]])


def test_full_state_has_no_arrival():
    kind = ModelKind("simple", CapacityConfig(c_m=4))
    A = build_generator(kind, SimpleRates(2.0, 0.5)).toarray()
    assert A[4, 4] == -4 * 0.5
    assert A[1, 0] == 2.0 and A[3, 4] == 4 * 0.5


def test_gbn_entry_matches_rate(gbn, gbn_rates):
    gen = build_generator(gbn, gbn_rates)
    assert gen.rate((0, 0, 0), (1, 0, 0)) == 11.0926
    assert gen.rate((3, 2, 1), (3, 2, 0)) == pytest.approx(1 * 0.2980)
    assert gen.rate((3, 2, 1), (2, 2, 1)) == pytest.approx(3 * 0.1824)


def test_lnl_threshold_switching(lnl):
    r = LNLRates(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 0.1)
    gen = build_generator(lnl, r)
    assert gen.rate((14, 0), (15, 0)) == 2.0  # below threshold: lam_b
    assert gen.rate((15, 0), (16, 0)) == 1.0  # at threshold: lam_a
    assert gen.rate((14, 0), (13, 0)) == pytest.approx(14 * 5.0)
    assert gen.rate((15, 0), (14, 0)) == pytest.approx(15 * 4.0)
    assert gen.rate((3, 1), (3, 2)) == 3.0  # non-LimeWire uses lam_n
    assert gen.rate((3, 2), (3, 1)) == pytest.approx(2 * 6.0)
    assert gen.rate((20, 2), (20, 1)) == pytest.approx(2 * 6.0)


def test_rate_shape_mismatch(gbn):
    with pytest.raises(RateShapeError):
        build_generator(gbn, LNLRates(*[1.0] * 7))


def test_rates_must_be_positive():
    with pytest.raises(ValueError):
        SimpleRates(0.0, 1.0)
    with pytest.raises(ValueError):
        FiniteLifeRates(1.0, 1.0, float("nan"))


def test_rate_mapping_round_trip(gbn_rates):
    m = gbn_rates.to_mapping()
    assert list(m)[:2] == ["lambda_g", "lambda_b"]
    assert GBNRates.from_mapping(m) == gbn_rates
    with pytest.raises(RateShapeError):
        GBNRates.from_mapping({"lambda_g": 1.0})


@pytest.mark.parametrize("tag", ["simple", "finite", "gbn", "lnl"])
@settings(max_examples=15, deadline=None)
@given(data=st.data())
def test_columns_conserve(tag, data):
    kind = ModelKind(tag)
    cls = RATE_TYPES[tag]
    rates = cls(*data.draw(st.lists(rate, min_size=len(cls.names()), max_size=len(cls.names()))))
    gen = build_generator(kind, rates)
    assert np.max(np.abs(gen.column_sums())) <= 1e-12
    off = gen.matrix.copy()
    off.setdiag(0)
    assert off.min() >= 0


@pytest.mark.parametrize("tag", ["gbn", "lnl"])
def test_edges_stay_inside_space(tag):
    kind = ModelKind(tag)
    space = enumerate_states(kind)
    gen = build_generator(kind, RATE_TYPES[tag](*[1.0] * 7))
    coo = gen.matrix.tocoo()
    for i, j in zip(coo.row, coo.col):
        if i != j:
            step = space.states[i] - space.states[j]
            assert np.abs(step).sum() == 1


def reachable(kind):
    """BFS from the empty state over admissible arrivals and departures."""
    seen = {(0,) * len(kind.classes)}
    queue = deque(seen)
    while queue:
        s = queue.popleft()
        for c, cls in enumerate(kind.classes):
            moves = []
            if can_admit(kind, s, cls):
                moves.append(1)
            if s[c] > 0:
                moves.append(-1)
            for m in moves:
                t = list(s)
                t[c] += m
                t = tuple(t)
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
    return seen


def test_gbn_reachable_set_is_inside_space(gbn):
    # States such as (0, 1, 15) satisfy the constraints but can never be
    # entered: bad and surplus non-LimeWire leaves need total < c_g.
    seen = reachable(gbn)
    space = set(enumerate_states(gbn).index)
    assert seen <= space
    assert len(seen) == 2846
    assert (0, 1, 15) in space - seen


def test_lnl_every_state_reachable(lnl):
    assert reachable(lnl) == set(enumerate_states(lnl).index)
