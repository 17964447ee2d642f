"""Finite matrix product representation and Bernoulli shock mixtures.

When ``u v q**k = 1`` the stationary law has a ``(k+1)``-dimensional matrix
product form and, equivalently, is a finite mixture of Bernoulli shock
measures: product measures whose density climbs through the chain
``rho_0 < rho_1 < ... < rho_k`` across marked shock sites.

Level ``i`` of the matrices corresponds to bulk density ``rho_{k-i}``; the
subdiagonal of ``E`` moves one level down and plays the role of a shock site
that is empty with certainty.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import nnls

from .core import (
    CapacityError,
    ConfigDist,
    ModelParams,
    NumericalError,
    ValidationError,
    bernoulli_product,
    product_measure,
)
from .oracle import MAX_ORACLE_N

FINITE_REP_TOL = 1e-10
MAX_DUAL_STATES = 10**7


def _check_finite_rep(p: ModelParams, k: int):
    if k < 0:
        raise ValidationError("k must be >= 0", "k")
    gap = abs(p.u * p.v * p.q**k - 1.0)
    if gap > FINITE_REP_TOL:
        raise ValidationError(f"u v q**k = 1 violated: |u v q**k - 1| = {gap:.3e}", "k")


@dataclass(frozen=True)
class ShockSystem:
    k: int
    rho: np.ndarray
    rho_star: np.ndarray
    j: np.ndarray
    d: np.ndarray  # d[i] = j_i / j_{i-1} for i = 1..k; d[0] unused (nan)

    @property
    def low_density(self) -> bool:
        return bool(self.k > 0 and self.rho_star[0] == 1.0)


def bulk_densities(p: ModelParams, k: int, rho_star: float | None = None) -> ShockSystem:
    """Density chain ``rho_0..rho_k`` with odds multiplied by ``1/q`` per level.

    ``rho_star`` defaults to 1 when ``u > v`` (low density side) and 0 otherwise.
    """
    _check_finite_rep(p, k)
    if k > 0 and not p.u * p.v > 1.0:
        raise ValidationError("k > 0 needs the shock region u v > 1", "k")
    rho0 = 1.0 / (1.0 + p.u)
    odds = rho0 / (1.0 - rho0) * p.q ** (-np.arange(k + 1, dtype=float))
    rho = odds / (1.0 + odds)
    target = p.v / (1.0 + p.v)
    if abs(rho[-1] - target) > 1e-10:
        raise NumericalError(f"density chain ends at {rho[-1]!r}, expected {target!r}")
    if rho_star is None:
        rho_star = 1.0 if p.u > p.v else 0.0
    if rho_star not in (0.0, 1.0):
        raise ValidationError("shock density must be 0 or 1", "rho_star")
    j = (1.0 - p.q) * rho * (1.0 - rho)
    d = np.full(k + 1, np.nan)
    d[1:] = j[1:] / j[:-1]
    for arr in (rho, j, d):
        arr.setflags(write=False)
    rs = np.full(k + 1, float(rho_star))
    rs.setflags(write=False)
    return ShockSystem(k, rho, rs, j, d)


def shock_measure(x, y: int, s: ShockSystem, n: int) -> ConfigDist:
    """Product measure with shock sites ``x`` shifted by ``y`` along the chain."""
    x = list(x)
    if any(b <= a for a, b in zip(x, x[1:])) or (x and not (1 <= x[0] and x[-1] <= n)):
        raise ValidationError(f"shock positions {x} must increase inside [1, {n}]", "x")
    if not 0 <= y <= s.k - len(x):
        raise ValidationError(f"shift y={y} outside [0, {s.k - len(x)}]", "y")
    dens = np.empty(n)
    bounds = [0] + x + [n + 1]
    for i in range(len(x) + 1):
        dens[bounds[i] : bounds[i + 1] - 1] = s.rho[i + y]
        if i < len(x):
            dens[x[i] - 1] = s.rho_star[i + 1 + y]
    return product_measure(dens)


def dual_stationary(n: int, shock_count: int, d) -> tuple[np.ndarray, np.ndarray]:
    """Stationary law ``prod_i d_i**x_i`` of the dual shock chain.

    Returns ``(positions, probabilities)`` with positions of shape
    ``(C(n, m), m)`` in lexicographic order.
    """
    d = np.broadcast_to(np.asarray(d, dtype=float), (shock_count,))
    size = math.comb(n, shock_count)
    if size > MAX_DUAL_STATES:
        raise CapacityError(f"{size} dual states exceed the cap {MAX_DUAL_STATES}")
    pos = np.array(list(combinations(range(1, n + 1), shock_count)), dtype=np.int64)
    pos = pos.reshape(size, shock_count)
    logw = pos @ np.log(d)
    w = np.exp(logw - logw.max())
    return pos, w / w.sum()


def _log_tails(n: int, shock_count: int, d: np.ndarray) -> np.ndarray:
    """``T[j, a] = log sum over a <= x_j < ... < x_m <= n of prod d_i**x_i``
    (rows ``j = 0..m`` for particles ``j+1..m``, columns ``a = 1..n+1``)."""
    m = shock_count
    sites = np.arange(1, n + 2, dtype=float)
    t = np.full((m + 1, n + 2), -np.inf)
    t[m, 1:] = 0.0
    for jj in range(m - 1, -1, -1):
        # term at x = a: x log d + T[jj+1, a+1]
        term = np.full(n + 2, -np.inf)
        term[1 : n + 1] = sites[:n] * math.log(d[jj]) + t[jj + 1, 2 : n + 2]
        t[jj] = np.logaddexp.accumulate(term[::-1])[::-1]
    return t


def leftmost_shock_tail(n: int, shock_count: int, d, c: int) -> float:
    """``P(x_1 >= n - c)`` under the dual stationary law."""
    if shock_count < 1:
        raise ValidationError("need at least one shock", "shock_count")
    if shock_count > n:
        raise ValidationError("more shocks than sites", "shock_count")
    d = np.broadcast_to(np.asarray(d, dtype=float), (shock_count,))
    t = _log_tails(n, shock_count, d)
    a = max(n - c, 1)
    return float(math.exp(t[0, a] - t[0, 1]))


def dual_jump_rates(s: ShockSystem, i: int) -> tuple[float, float]:
    """Right and left jump rates of the ``i``-th shock."""
    if not 1 <= i <= s.k:
        raise ValidationError(f"particle index {i} outside 1..{s.k}", "i")
    gap = s.rho[i] - s.rho[i - 1]
    if not gap > 1e-15:
        raise NumericalError(f"degenerate density gap {gap!r}")
    return float(s.j[i] / gap), float(s.j[i - 1] / gap)


# ---------------------------------------------------------------------------
# Matrix product form


@dataclass(frozen=True)
class MpaSystem:
    k: int
    D: np.ndarray
    E: np.ndarray
    W: np.ndarray
    V: np.ndarray


def mpa_matrices(p: ModelParams, k: int) -> MpaSystem:
    _check_finite_rep(p, k)
    if not p.v > 0:
        raise ValidationError("matrix representation needs v > 0", "v")
    i = np.arange(k + 1, dtype=float)
    vq = p.v * p.q**i
    D = np.diag(1.0 + vq)
    E = np.diag(1.0 + 1.0 / vq) + np.diag(np.ones(k), -1)
    V = np.zeros(k + 1)
    V[0] = 1.0
    W = np.ones(k + 1)
    for lvl in range(k, 0, -1):
        W[lvl - 1] = W[lvl] / (p.u * (1.0 - p.q ** (k + 1 - lvl)))
    return MpaSystem(k, D, E, W, V)


@dataclass(frozen=True)
class MpaReport:
    boundary_right: float
    boundary_left: float
    bulk_scaling: float
    bulk_residual: float
    bulk_residual_other: float

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def verify_mpa_relations(m: MpaSystem, p: ModelParams) -> MpaReport:
    """Residuals of ``beta D V = (1-q) V``, ``alpha W E = (1-q) W`` and of the
    bulk relation ``DE - qED = c (D + E)`` for the better of ``c = 1`` and
    ``c = 1 - q``."""
    right = float(np.abs(p.beta * m.D @ m.V - (1.0 - p.q) * m.V).max())
    left = float(np.abs(p.alpha * m.W @ m.E - (1.0 - p.q) * m.W).max())
    comm = m.D @ m.E - p.q * m.E @ m.D
    res = {c: float(np.abs(comm - c * (m.D + m.E)).max()) for c in (1.0 - p.q, 1.0)}
    best = min(res, key=res.get)
    other = res[1.0 if best != 1.0 else 1.0 - p.q]
    return MpaReport(right, left, best, res[best], other)


def _mpa_weights(m: MpaSystem, n: int) -> np.ndarray:
    arr = m.W[None, :]
    for _ in range(n):
        arr = np.concatenate([arr @ m.E, arr @ m.D], axis=0)
        arr = arr / np.abs(arr).max()
    return arr @ m.V


def stationary_via_mpa(p: ModelParams, k: int) -> ConfigDist:
    if p.n > MAX_ORACLE_N:
        raise CapacityError(f"matrix product contraction capped at n={MAX_ORACLE_N}")
    w = _mpa_weights(mpa_matrices(p, k), p.n)
    if not w.sum() > 0:
        raise NumericalError(f"non-positive total mass {w.sum()!r}")
    return ConfigDist.from_signed(p.n, w)


def mpa_single_weight(m: MpaSystem, eta) -> tuple[float, float]:
    """``<W| prod X_i |V>`` for one configuration as ``(mantissa, log_scale)``,
    rescaled every 32 sites."""
    vec = m.W.copy()
    log_scale = 0.0
    for i, e in enumerate(eta):
        vec = vec @ (m.D if e else m.E)
        if i % 32 == 31:
            s = np.abs(vec).max()
            vec /= s
            log_scale += math.log(s)
    return float(vec @ m.V), log_scale


# ---------------------------------------------------------------------------
# Shock mixtures


def _components(s: ShockSystem, n: int, low_density: bool) -> np.ndarray:
    """Row ``m`` holds ``sum_x prod_i d_{i+y}**x_i mu^{x,y}`` over all
    placements of ``m`` shocks, as weights on ``{0,1}**n``."""
    k = s.k
    out = np.zeros((k + 1, 1 << n))
    for m in range(k + 1):
        y = 0 if low_density else k - m
        # state: number of shocks already placed
        arr = np.zeros((1, m + 1))
        arr[0, 0] = 1.0
        for site in range(1, n + 1):
            empty = np.zeros_like(arr)
            full = np.zeros_like(arr)
            for st in range(m + 1):
                r = s.rho[st + y]
                empty[:, st] += arr[:, st] * (1.0 - r)
                full[:, st] += arr[:, st] * r
                if st < m:
                    w = s.d[st + 1 + y] ** site
                    rs = s.rho_star[st + 1 + y]
                    empty[:, st + 1] += arr[:, st] * w * (1.0 - rs)
                    full[:, st + 1] += arr[:, st] * w * rs
            arr = np.concatenate([empty, full], axis=0)
        out[m] = arr[:, m]
    return out


def mixture_coefficients(p: ModelParams, s: ShockSystem) -> np.ndarray:
    """Closed-form weight of the ``m``-shock component, ``m = 0..k``.

    High-density form (shock sites empty, chain shifted to end at ``rho_k``)::

        c_m = 1 / ( prod_{j=1}^{k-m} u (1 - q**j) * prod_{l=1}^{m} 1/(rho_{k-l}(1-rho_{k-l})) )

    The low-density form follows from particle-hole reflection, which swaps
    ``u`` and ``v`` and reverses the chain; the reflected positions bring an
    extra ``prod_{i<=m} d_i**-(n+1)``.
    """
    k, n = s.k, p.n
    c = np.empty(k + 1)
    for m in range(k + 1):
        if s.low_density:
            pre = math.prod(p.v * (1.0 - p.q**j) for j in range(1, k - m + 1))
            dens = math.prod(s.rho[l] * (1.0 - s.rho[l]) for l in range(1, m + 1))
            shift = math.prod(s.d[i] ** (-(n + 1)) for i in range(1, m + 1))
            c[m] = dens * shift / pre
        else:
            pre = math.prod(p.u * (1.0 - p.q**j) for j in range(1, k - m + 1))
            dens = math.prod(s.rho[k - l] * (1.0 - s.rho[k - l]) for l in range(1, m + 1))
            c[m] = dens / pre
    return c


def stationary_via_shock_mixture(p: ModelParams, k: int) -> ConfigDist:
    if p.n > MAX_ORACLE_N:
        raise CapacityError(f"shock mixture capped at n={MAX_ORACLE_N}")
    s = bulk_densities(p, k)
    if k == 0:
        return bernoulli_product(float(s.rho[0]), p.n)
    comps = _components(s, p.n, s.low_density)
    w = mixture_coefficients(p, s) @ comps
    if not w.sum() > 0:
        raise NumericalError(f"non-positive total mass {w.sum()!r}")
    return ConfigDist.from_signed(p.n, w)


@dataclass(frozen=True)
class MixtureFit:
    coefficients: np.ndarray
    closed_form: np.ndarray
    residual: float

    def to_json(self) -> str:
        return json.dumps(
            [{"n_shocks": m, "coefficient": float(c)} for m, c in enumerate(self.coefficients)]
        )


def fit_mixture_coefficients(p: ModelParams, k: int) -> MixtureFit:
    """Non-negative least-squares fit of the component weights to the matrix
    product law; both fitted and closed-form weights are normalized so the
    mixture has unit mass."""
    s = bulk_densities(p, k)
    comps = _components(s, p.n, s.low_density)
    target = stationary_via_mpa(p, k).weights
    coef, _ = nnls(comps.T, target)
    mass = comps.sum(axis=1)
    coef = coef / (coef @ mass)
    closed = mixture_coefficients(p, s)
    closed = closed / (closed @ mass)
    resid = float(np.abs(coef @ comps - target).max())
    return MixtureFit(coef, closed, resid)
