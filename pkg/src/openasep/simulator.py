"""Continuous-time dynamics of the open ASEP and the basic coupling.

Trajectories use the Gillespie direct method: an exponential holding time at
the total rate, then a categorical choice of the transition. Random streams
are Philox generators keyed by ``(seed, replica)``, so replicas are
independent and reproducible in any order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import ConfigDist, ModelParams, ValidationError


def stream(seed: int, replica: int = 0) -> np.random.Generator:
    """Counter-based random stream for ``(seed, replica)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(replica)])))


def _as_config(init, n: int) -> np.ndarray:
    if isinstance(init, str):
        init = [int(c) for c in init]
    cfg = np.asarray(init, dtype=np.uint8).copy()
    if cfg.shape != (n,) or np.any(cfg > 1):
        raise ValidationError(f"initial configuration must be a 0/1 array of length {n}", "init")
    return cfg


@numba.njit(cache=True)
def _rates(cfg, q, alpha, beta, out):
    n = cfg.shape[0]
    total = 0.0
    for i in range(n - 1):
        r = 0.0
        if cfg[i] == 1 and cfg[i + 1] == 0:
            r = 1.0
        elif cfg[i] == 0 and cfg[i + 1] == 1:
            r = q
        out[i] = r
        total += r
    out[n - 1] = alpha if cfg[0] == 0 else 0.0
    out[n] = beta if cfg[n - 1] == 1 else 0.0
    return total + out[n - 1] + out[n]


@numba.njit(cache=True)
def _fire(cfg, idx):
    """Apply transition ``idx``; returns the site (0-based) whose value changed
    last so traces can report it."""
    n = cfg.shape[0]
    if idx < n - 1:
        a = cfg[idx]
        cfg[idx] = cfg[idx + 1]
        cfg[idx + 1] = a
        return idx
    if idx == n - 1:
        cfg[0] = 1
        return 0
    cfg[n - 1] = 0
    return n - 1


@numba.njit(cache=True)
def _pick(rates, total, u):
    target = u * total
    acc = 0.0
    last = 0
    for i in range(rates.shape[0]):
        if rates[i] > 0.0:
            last = i
            acc += rates[i]
            if target < acc:
                return i
    return last


@numba.njit(cache=True)
def _advance(cfg, t, t_end, q, alpha, beta, rng, rates, occ_time):
    """Run from time ``t`` to ``t_end``; returns the number of events.
    ``occ_time`` accumulates time spent occupied per site."""
    events = 0
    n = cfg.shape[0]
    while True:
        total = _rates(cfg, q, alpha, beta, rates)
        dt = rng.exponential() / total
        if t + dt > t_end:
            for i in range(n):
                occ_time[i] += cfg[i] * (t_end - t)
            return events
        for i in range(n):
            occ_time[i] += cfg[i] * dt
        t += dt
        _fire(cfg, _pick(rates, total, rng.random()))
        events += 1


@numba.njit(cache=True)
def _trace(cfg, t_end, q, alpha, beta, rng, times, sites, values):
    n = cfg.shape[0]
    rates = np.zeros(n + 1)
    t = 0.0
    k = 0
    events = 0
    cap = times.shape[0]
    while True:
        total = _rates(cfg, q, alpha, beta, rates)
        dt = rng.exponential() / total
        if t + dt > t_end:
            return k, True, events
        t += dt
        idx = _pick(rates, total, rng.random())
        s = _fire(cfg, idx)
        events += 1
        if k + 2 > cap:
            return k, False, events
        if idx < n - 1:
            times[k] = t
            sites[k] = idx
            values[k] = cfg[idx]
            k += 1
            times[k] = t
            sites[k] = idx + 1
            values[k] = cfg[idx + 1]
            k += 1
        else:
            times[k] = t
            sites[k] = s
            values[k] = cfg[s]
            k += 1


@dataclass(frozen=True)
class SimState:
    config: np.ndarray
    time: float
    events: int
    seed: int
    replica: int = 0


def simulate(p: ModelParams, init, t_end: float, seed: int, replica: int = 0) -> SimState:
    if t_end < 0:
        raise ValidationError("t_end must be >= 0", "t_end")
    cfg = _as_config(init, p.n)
    rng = stream(seed, replica)
    occ = np.zeros(p.n)
    ev = _advance(cfg, 0.0, float(t_end), p.q, p.alpha, p.beta, rng, np.zeros(p.n + 1), occ)
    return SimState(cfg, float(t_end), int(ev), seed, replica)


def time_average_occupation(p: ModelParams, init, t_end: float, seed: int) -> np.ndarray:
    """Fraction of ``[0, t_end]`` each site spends occupied."""
    if not t_end > 0:
        raise ValidationError("t_end must be positive", "t_end")
    cfg = _as_config(init, p.n)
    occ = np.zeros(p.n)
    _advance(cfg, 0.0, float(t_end), p.q, p.alpha, p.beta, stream(seed), np.zeros(p.n + 1), occ)
    return occ / t_end


def simulate_trace(p: ModelParams, init, t_end: float, seed: int) -> tuple[SimState, str]:
    """Endpoint plus a CSV trace ``time,site,new_value`` (sites 1-based)."""
    cap = 1024
    while True:
        cfg = _as_config(init, p.n)
        times = np.empty(cap)
        sites = np.empty(cap, dtype=np.int64)
        values = np.empty(cap, dtype=np.uint8)
        k, done, events = _trace(cfg, float(t_end), p.q, p.alpha, p.beta, stream(seed), times, sites, values)
        if done:
            break
        cap *= 4
    lines = ["time,site,new_value"]
    lines += [f"{times[i]:.17g},{sites[i] + 1},{values[i]}" for i in range(k)]
    return SimState(cfg, float(t_end), int(events), seed), "\n".join(lines) + "\n"


@numba.njit(cache=True)
def _sample_projected(cfg, q, alpha, beta, rng, burn_in, gap, n_samples, a, width):
    n = cfg.shape[0]
    rates = np.zeros(n + 1)
    occ = np.zeros(n)
    counts = np.zeros(1 << width, dtype=np.int64)
    t = 0.0
    _advance(cfg, t, burn_in, q, alpha, beta, rng, rates, occ)
    t = burn_in
    for s in range(n_samples):
        if s > 0:
            _advance(cfg, t, t + gap, q, alpha, beta, rng, rates, occ)
            t += gap
        idx = 0
        for b in range(width):
            idx |= np.int64(cfg[a + b]) << b
        counts[idx] += 1
    return counts


def empirical_projected(
    p: ModelParams,
    interval: tuple[int, int],
    n_samples: int,
    burn_in: float,
    gap: float | None = None,
    seed: int = 0,
    init=None,
) -> ConfigDist:
    """Empirical law of the configuration on ``interval`` sampled every ``gap``
    time units along one trajectory after ``burn_in`` (default gap: ``n``)."""
    a, b = interval
    if not (1 <= a <= b <= p.n):
        raise ValidationError(f"invalid interval {interval}", "interval")
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1", "n_samples")
    if gap is None:
        gap = float(p.n)
    if not gap > 0:
        raise ValidationError("gap must be positive", "gap")
    if burn_in < 0:
        raise ValidationError("burn_in must be >= 0", "burn_in")
    cfg = _as_config(np.zeros(p.n) if init is None else init, p.n)
    counts = _sample_projected(
        cfg, p.q, p.alpha, p.beta, stream(seed), float(burn_in), float(gap), int(n_samples), a - 1, b - a + 1
    )
    return ConfigDist(b - a + 1, counts / counts.sum())


def endpoint_law(p: ModelParams, init, t_end: float, replicas: int, seed: int) -> ConfigDist:
    """Law of the configuration at ``t_end`` over independent replicas."""
    cfg0 = _as_config(init, p.n)
    counts = np.zeros(1 << p.n, dtype=np.int64)
    weights = 1 << np.arange(p.n)
    rates = np.zeros(p.n + 1)
    occ = np.zeros(p.n)
    for r in range(replicas):
        cfg = cfg0.copy()
        _advance(cfg, 0.0, float(t_end), p.q, p.alpha, p.beta, stream(seed, r), rates, occ)
        counts[int(cfg @ weights)] += 1
    return ConfigDist(p.n, counts / replicas)


# ---------------------------------------------------------------------------
# Basic coupling


@numba.njit(cache=True)
def _coupled(lo, up, q, a_lo, a_up, b_lo, b_up, rng, t_end, max_events, times, ordered):
    """Shared clocks: per bond a rate-1 right clock and a rate-q left clock;
    entry at rate ``a_lo`` for both plus ``a_up - a_lo`` for the upper system
    only; exit at rate ``b_up`` for both plus ``b_lo - b_up`` for the lower
    system only. Every ring counts as an event."""
    n = lo.shape[0]
    nb = n - 1
    extra_in = a_up - a_lo
    extra_out = b_lo - b_up
    total = nb * (1.0 + q) + a_up + b_lo
    t = 0.0
    k = 0
    violations = 0
    while k < max_events:
        dt = rng.exponential() / total
        if t + dt > t_end:
            break
        t += dt
        x = rng.random() * total
        if x < nb:
            i = int(x)
            if i >= nb:
                i = nb - 1
            for cfg in (lo, up):
                if cfg[i] == 1 and cfg[i + 1] == 0:
                    cfg[i] = 0
                    cfg[i + 1] = 1
        elif x < nb * (1.0 + q):
            i = int((x - nb) / q) if q > 0 else 0
            if i >= nb:
                i = nb - 1
            for cfg in (lo, up):
                if cfg[i] == 0 and cfg[i + 1] == 1:
                    cfg[i] = 1
                    cfg[i + 1] = 0
        else:
            y = x - nb * (1.0 + q)
            if y < a_lo:
                lo[0] = 1
                up[0] = 1
            elif y < a_lo + extra_in:
                up[0] = 1
            elif y < a_lo + extra_in + b_up:
                lo[n - 1] = 0
                up[n - 1] = 0
            else:
                lo[n - 1] = 0
        ok = True
        for s in range(n):
            if lo[s] > up[s]:
                ok = False
                break
        times[k] = t
        ordered[k] = ok
        if not ok:
            violations += 1
        k += 1
    return k, violations, t


@dataclass(frozen=True)
class CoupledTrace:
    lower: np.ndarray
    upper: np.ndarray
    times: np.ndarray
    ordered: np.ndarray
    violations: int

    @property
    def events(self) -> int:
        return len(self.times)


def coupled_simulate(
    p_lower: ModelParams,
    p_upper: ModelParams,
    t_end: float,
    seed: int,
    init_lower=None,
    init_upper=None,
    max_events: int = 1_000_000,
    replica: int = 0,
) -> CoupledTrace:
    """Run two systems under the basic coupling until ``t_end`` or
    ``max_events`` clock rings, recording componentwise order at every ring.

    The upper system needs more entry (``alpha' >= alpha``) and less exit
    (``beta' <= beta``)."""
    if p_lower.n != p_upper.n or p_lower.q != p_upper.q:
        raise ValidationError("coupled systems need equal n and q", "params")
    if p_upper.alpha < p_lower.alpha or p_upper.beta > p_lower.beta:
        raise ValidationError(
            "unordered parameters: need alpha_upper >= alpha_lower and beta_upper <= beta_lower",
            "params",
        )
    n = p_lower.n
    lo = _as_config(np.zeros(n) if init_lower is None else init_lower, n)
    up = _as_config(np.zeros(n) if init_upper is None else init_upper, n)
    times = np.empty(max_events)
    ordered = np.empty(max_events, dtype=np.bool_)
    k, viol, _ = _coupled(
        lo, up, p_lower.q, p_lower.alpha, p_upper.alpha, p_lower.beta, p_upper.beta,
        stream(seed, replica), float(t_end), int(max_events), times, ordered,
    )
    return CoupledTrace(lo, up, times[:k].copy(), ordered[:k].copy(), int(viol))
