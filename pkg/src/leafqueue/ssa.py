"""Event-by-event simulation of an ultrapeer's leaf connections.

This is an independent check on the linear-algebra solvers: it applies the
admission rules directly (it never looks at a generator matrix) and
estimates the time-averaged leaf-degree distribution.

Random numbers come from xoshiro256** streams. Life ``i`` of a run with
seed ``s`` is seeded from ``s ^ i`` through splitmix64, so any subset of
lives can be regenerated on its own. Lives are accumulated serially in
index order, which keeps floating-point sums (and therefore the output)
bitwise reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import ModelKind, RateParams

__all__ = ["SimConfig", "SimEstimate", "EventCapExceeded", "simulate", "simulate_infinite_life"]

_MODEL_CODE = {"simple": 0, "finite": 0, "gbn": 1, "lnl": 2}

_OK, _CAP, _ILLEGAL = 0, 1, 2

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = 1.0 / 9007199254740992.0


class EventCapExceeded(RuntimeError):
    """A simulated life produced more events than allowed."""


@dataclass(frozen=True)
class SimConfig:
    lifetimes: int = 100_000
    seed: int = 0
    max_events: int = 10_000_000
    check: bool = False

    def __post_init__(self):
        if int(self.lifetimes) < 1:
            raise ValueError("lifetimes must be at least 1")
        if int(self.max_events) < 1:
            raise ValueError("max_events must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class SimEstimate:
    """Time-weighted leaf-degree histogram from a simulation run."""

    distribution: np.ndarray
    stderr: np.ndarray
    total_time: float
    events: int
    class_means: np.ndarray


# -- random numbers ---------------------------------------------------------

@njit(cache=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True)
def _seed_stream(seed, s):
    z = seed
    for i in range(4):
        z = z + _GAMMA
        x = z
        x = (x ^ (x >> np.uint64(30))) * _MIX1
        x = (x ^ (x >> np.uint64(27))) * _MIX2
        s[i] = x ^ (x >> np.uint64(31))


@njit(cache=True)
def _uniform(s):
    """Next double in [0, 1)."""
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return float(result >> np.uint64(11)) * _U53


# -- model rules --------------------------------------------------------------

@njit(cache=True)
def _event_rates(model, k, p, c_m, c_g, c_n, out):
    """Fill ``out`` with arrival rates (first block) then departure rates."""
    c_gb = c_m - c_n
    if model == 0:
        out[0] = p[0] if k[0] < c_m else 0.0
        out[1] = k[0] * p[1]
    elif model == 1:
        total = k[0] + k[1] + k[2]
        out[0] = p[0] if (k[0] + k[1] < c_gb and total < c_m) else 0.0
        out[1] = p[1] if total < c_g else 0.0
        out[2] = p[2] if (k[2] < c_n or total < c_g) else 0.0
        out[3] = k[0] * p[3]
        out[4] = k[1] * p[4]
        out[5] = k[2] * p[5]
    else:
        total = k[0] + k[1]
        if total >= c_g:
            out[0] = p[0] if (k[0] < c_gb and total < c_m) else 0.0
            out[2] = k[0] * p[3]
        else:
            out[0] = p[1]
            out[2] = k[0] * p[4]
        out[1] = p[2] if (k[1] < c_n or total < c_g) else 0.0
        out[3] = k[1] * p[5]


@njit(cache=True)
def _legal(model, k, c_m, c_g, c_n):
    total = 0
    for c in range(k.size):
        if k[c] < 0:
            return False
        total += k[c]
    if total > c_m:
        return False
    if model == 1:
        return k[0] + k[1] <= c_m - c_n and k[1] <= c_g and k[2] <= c_g
    if model == 2:
        return k[0] <= c_m - c_n and k[1] <= c_g
    return True


@njit(cache=True)
def _step(model, nc, k, p, theta, c_m, c_g, c_n, rates, s):
    """Sample one holding time and the event ending it.

    Returns ``(dt, channel)``; channel ``-1`` is the ultrapeer's death.
    """
    _event_rates(model, k, p, c_m, c_g, c_n, rates)
    total = theta
    for e in range(2 * nc):
        total += rates[e]
    dt = -np.log(1.0 - _uniform(s)) / total
    pick = _uniform(s) * total
    for e in range(2 * nc):
        if pick < rates[e]:
            return dt, e
        pick -= rates[e]
    return dt, -1


@njit(cache=True)
def _simulate_lives(model, nc, p, theta, c_m, c_g, c_n, lifetimes, seed, max_events, check):
    size = c_m + 1
    occ = np.zeros(size)
    occ_sq = np.zeros(size)
    occ_len = np.zeros(size)
    class_time = np.zeros(nc)
    life_time = np.zeros(size)
    k = np.zeros(nc, dtype=np.int64)
    rates = np.zeros(2 * nc)
    s = np.zeros(4, dtype=np.uint64)
    sum_len = 0.0
    sum_len_sq = 0.0
    events = 0
    for i in range(lifetimes):
        _seed_stream(seed ^ np.uint64(i), s)
        k[:] = 0
        life_time[:] = 0.0
        length = 0.0
        n_ev = 0
        while True:
            dt, e = _step(model, nc, k, p, theta, c_m, c_g, c_n, rates, s)
            deg = 0
            for c in range(nc):
                deg += k[c]
                class_time[c] += k[c] * dt
            life_time[deg] += dt
            length += dt
            if e < 0:
                break
            if e < nc:
                k[e] += 1
            else:
                k[e - nc] -= 1
            n_ev += 1
            if n_ev > max_events:
                return occ, occ_sq, occ_len, class_time, sum_len, sum_len_sq, events, _CAP
            if check and not _legal(model, k, c_m, c_g, c_n):
                return occ, occ_sq, occ_len, class_time, sum_len, sum_len_sq, events, _ILLEGAL
        events += n_ev
        for d in range(size):
            occ[d] += life_time[d]
            occ_sq[d] += life_time[d] * life_time[d]
            occ_len[d] += life_time[d] * length
        sum_len += length
        sum_len_sq += length * length
    return occ, occ_sq, occ_len, class_time, sum_len, sum_len_sq, events, _OK


@njit(cache=True)
def _simulate_path(model, nc, p, c_m, c_g, c_n, horizon, n_batches, seed, max_events, check):
    size = c_m + 1
    width = horizon / n_batches
    batch_occ = np.zeros((n_batches, size))
    class_time = np.zeros(nc)
    k = np.zeros(nc, dtype=np.int64)
    rates = np.zeros(2 * nc)
    s = np.zeros(4, dtype=np.uint64)
    _seed_stream(seed, s)
    t = 0.0
    events = 0
    while t < horizon:
        dt, e = _step(model, nc, k, p, 0.0, c_m, c_g, c_n, rates, s)
        end = min(t + dt, horizon)
        deg = 0
        for c in range(nc):
            deg += k[c]
            class_time[c] += k[c] * (end - t)
        while t < end:
            b = min(int(t / width), n_batches - 1)
            stop = min(end, (b + 1) * width) if b < n_batches - 1 else end
            if stop <= t:  # rounding at a batch edge
                stop = end
            batch_occ[b, deg] += stop - t
            t = stop
        if t >= horizon:
            break
        if e < nc:
            k[e] += 1
        else:
            k[e - nc] -= 1
        events += 1
        if events > max_events:
            return batch_occ, class_time, events, _CAP
        if check and not _legal(model, k, c_m, c_g, c_n):
            return batch_occ, class_time, events, _ILLEGAL
    return batch_occ, class_time, events, _OK


def _raise_status(status, max_events):
    if status == _CAP:
        raise EventCapExceeded(
            f"more than {max_events} events in one run; check the rates and their time unit"
        )
    if status == _ILLEGAL:
        raise AssertionError("simulation visited a state outside the model's state space")


def simulate(kind: ModelKind, rates: RateParams, cfg: SimConfig | None = None) -> SimEstimate:
    """Monte Carlo estimate of the finite-life leaf-degree distribution.

    Every life starts with no leaves and ends when the ultrapeer dies at
    rate ``theta``. The estimate is total time spent at each degree over
    all lives divided by total lifetime; standard errors treat lives as
    i.i.d. renewal cycles (ratio-estimator variance).
    """
    cfg = cfg or SimConfig()
    kind.check_rates(rates)
    if kind.tag == "simple":
        raise ValueError("finite-life simulation needs a death rate theta; use the finite model")
    theta = rates.theta
    if not theta > 0:
        raise ValueError("theta must be positive")
    cap = kind.capacity
    p = rates.as_array()
    occ, occ_sq, occ_len, class_time, sum_len, sum_len_sq, events, status = _simulate_lives(
        _MODEL_CODE[kind.tag], len(kind.classes), p, theta, cap.c_m, cap.c_g, cap.c_n,
        int(cfg.lifetimes), np.uint64(int(cfg.seed)), int(cfg.max_events), bool(cfg.check),
    )
    _raise_status(status, cfg.max_events)
    n = int(cfg.lifetimes)
    dist = occ / sum_len
    if n > 1:
        resid = occ_sq - 2.0 * dist * occ_len + dist**2 * sum_len_sq
        stderr = np.sqrt(np.clip(resid, 0.0, None) * n / (n - 1)) / sum_len
    else:
        stderr = np.full_like(dist, np.nan)
    return SimEstimate(
        distribution=dist,
        stderr=stderr,
        total_time=float(sum_len),
        events=int(events),
        class_means=class_time / sum_len,
    )


def simulate_infinite_life(
    kind: ModelKind,
    rates: RateParams,
    total_time: float,
    seed: int = 0,
    *,
    n_batches: int = 20,
    max_events: int = 10**9,
    check: bool = False,
) -> SimEstimate:
    """Long-run time average of one trajectory with an immortal ultrapeer.

    Any ``theta`` carried by ``rates`` is ignored. Standard errors come
    from ``n_batches`` equal-length batch means.
    """
    kind.check_rates(rates)
    if not total_time > 0:
        raise ValueError("total_time must be positive")
    cap = kind.capacity
    batch_occ, class_time, events, status = _simulate_path(
        _MODEL_CODE[kind.tag], len(kind.classes), rates.as_array(), cap.c_m, cap.c_g, cap.c_n,
        float(total_time), int(n_batches), np.uint64(int(seed)), int(max_events), bool(check),
    )
    _raise_status(status, max_events)
    width = total_time / n_batches
    dist = batch_occ.sum(axis=0) / total_time
    stderr = (batch_occ / width).std(axis=0, ddof=1) / np.sqrt(n_batches)
    return SimEstimate(
        distribution=dist,
        stderr=stderr,
        total_time=float(total_time),
        events=int(events),
        class_means=class_time / total_time,
    )
