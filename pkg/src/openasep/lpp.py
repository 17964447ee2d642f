"""Last passage percolation on the strip ``{(x, y): y <= x <= y + N}``.

Site weights are exponential: rate ``alpha`` on the upper boundary ``x = y``,
rate ``beta`` on the lower boundary ``x - y = N`` and rate 1 in the bulk. They
are generated from a hash of ``(seed, x, y)``, so the field never has to be
stored and a boundary rescaling is just a change of the divisor.

Sites are addressed either by ``(x, y)`` or by ``(column, level)`` with
``column = x - y`` in ``0..N`` and ``level = x + y``. The parents of a site on
column ``i`` and level ``s`` sit on columns ``i - 1`` (``-e1``) and ``i + 1``
(``-e2``) at level ``s - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numba
import numpy as np

from .core import CapacityError, ConfigDist, ValidationError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO53 = 9007199254740992.0


@numba.njit(cache=True)
def _mix(z):
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def _exp1(seed, x, y):
    h = _mix(np.uint64(seed))
    h = _mix(h ^ np.uint64(x))
    h = _mix(h ^ np.uint64(y))
    u = (np.float64(h >> np.uint64(11)) + 0.5) / _TWO53
    return -math.log(u)


@numba.njit(cache=True)
def _weight(seed, x, y, n, alpha, beta):
    c = x - y
    w = _exp1(seed, x, y)
    if c == 0:
        return w / alpha
    if c == n:
        return w / beta
    return w


@numba.njit(cache=True)
def _replica_seed(seed, replica):
    return _mix(np.uint64(seed) ^ _mix(np.uint64(replica) * _GOLDEN))


@dataclass(frozen=True)
class LppEnvironment:
    n: int
    alpha: float
    beta: float
    seed: int
    window: tuple[int, int]

    def in_strip(self, x: int, y: int) -> bool:
        return 0 <= x - y <= self.n

    def weight(self, x: int, y: int) -> float:
        if not self.in_strip(x, y):
            raise ValidationError(f"site {(x, y)} outside the strip", "site")
        return float(_weight(np.uint64(self.seed), x, y, self.n, self.alpha, self.beta))

    def weights(self, xs, ys) -> np.ndarray:
        xs, ys = np.broadcast_arrays(np.asarray(xs, dtype=np.int64), np.asarray(ys, dtype=np.int64))
        return _weights_array(np.uint64(self.seed), xs.ravel(), ys.ravel(), self.n, self.alpha, self.beta).reshape(xs.shape)

    def check_level(self, level: int):
        lo, hi = self.window
        if not lo <= level <= hi:
            raise CapacityError(f"level {level} outside window {self.window}; enlarge the window")


@numba.njit(cache=True)
def _weights_array(seed, xs, ys, n, alpha, beta):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = _weight(seed, xs[i], ys[i], n, alpha, beta)
    return out


def sample_environment(
    n: int, window: tuple[int, int] | None = None, alpha: float = 1.0, beta: float = 1.0, seed: int = 0
) -> LppEnvironment:
    if n < 1:
        raise ValidationError("strip width must be >= 1", "n")
    if not (alpha > 0 and beta > 0):
        raise ValidationError("boundary rates must be positive", "alpha" if not alpha > 0 else "beta")
    if seed < 0:
        raise ValidationError("seed must be non-negative", "seed")
    if window is None:
        window = (-n, 1 << 40)
    return LppEnvironment(int(n), float(alpha), float(beta), int(seed), tuple(window))


def rescale_boundary(env: LppEnvironment, alpha_new: float, beta_new: float) -> LppEnvironment:
    """Same field with boundary weights multiplied by ``alpha/alpha_new`` and
    ``beta/beta_new``; bulk weights are untouched."""
    if not (alpha_new > 0 and beta_new > 0):
        raise ValidationError("boundary rates must be positive", "alpha_new")
    return replace(env, alpha=float(alpha_new), beta=float(beta_new))


# ---------------------------------------------------------------------------
# Point-to-point passage times


@numba.njit(cache=True)
def _rect_dp(seed, n, alpha, beta, vx, vy, wx, wy):
    """``F[a, b]``: best weight of a path from ``v`` to ``v + (a, b)``
    including both endpoints; ``-inf`` off the strip."""
    nx = wx - vx + 1
    ny = wy - vy + 1
    f = np.full((nx, ny), -np.inf)
    for a in range(nx):
        for b in range(ny):
            x = vx + a
            y = vy + b
            c = x - y
            if c < 0 or c > n:
                continue
            best = -np.inf
            if a == 0 and b == 0:
                best = 0.0
            if a > 0 and f[a - 1, b] > best:
                best = f[a - 1, b]
            if b > 0 and f[a, b - 1] > best:
                best = f[a, b - 1]
            if best > -np.inf:
                f[a, b] = best + _weight(seed, x, y, n, alpha, beta)
    return f


def _check_pair(env: LppEnvironment, v, w):
    v = tuple(int(c) for c in v)
    w = tuple(int(c) for c in w)
    if not (w[0] >= v[0] and w[1] >= v[1]):
        raise ValidationError(f"endpoints not ordered: {v} to {w}", "w")
    for z in (v, w):
        if not env.in_strip(*z):
            raise ValidationError(f"site {z} outside the strip", "v")
        env.check_level(z[0] + z[1])
    return v, w


def _dp(env, v, w):
    return _rect_dp(np.uint64(env.seed), env.n, env.alpha, env.beta, v[0], v[1], w[0], w[1])


def passage_time(env: LppEnvironment, v, w) -> float:
    """Maximal weight of an up-right path from ``v`` to ``w`` inside the strip,
    counting ``v`` but not ``w``."""
    v, w = _check_pair(env, v, w)
    if v == w:
        return 0.0
    f = _dp(env, v, w)
    a, b = w[0] - v[0], w[1] - v[1]
    cands = [f[a - 1, b] if a > 0 else -np.inf, f[a, b - 1] if b > 0 else -np.inf]
    return float(max(cands))


def geodesic(env: LppEnvironment, v, w) -> np.ndarray:
    """Maximizing path from ``v`` to ``w`` as an ``(L + 1, 2)`` array; ties go
    to the ``e1`` predecessor."""
    v, w = _check_pair(env, v, w)
    f = _dp(env, v, w)
    a, b = w[0] - v[0], w[1] - v[1]
    path = [(a, b)]
    while (a, b) != (0, 0):
        left = f[a - 1, b] if a > 0 else -np.inf
        down = f[a, b - 1] if b > 0 else -np.inf
        if left >= down:
            a -= 1
        else:
            b -= 1
        path.append((a, b))
    return np.array(path[::-1], dtype=np.int64) + np.array(v, dtype=np.int64)


def path_passage_time(env: LppEnvironment, path) -> float:
    path = np.asarray(path)
    return float(env.weights(path[:-1, 0], path[:-1, 1]).sum())


# ---------------------------------------------------------------------------
# Growth interface and the TASEP correspondence


@dataclass(frozen=True)
class Interface:
    points: np.ndarray  # shape (N + 1, 2)

    def to_config(self) -> np.ndarray:
        return interface_to_config(self)

    def to_csv(self) -> str:
        rows = ["i,x,y"] + [f"{i},{x},{y}" for i, (x, y) in enumerate(self.points)]
        return "\n".join(rows) + "\n"


def _eta_array(eta) -> np.ndarray:
    if isinstance(eta, str):
        eta = [int(c) for c in eta]
    arr = np.asarray(eta, dtype=np.int64)
    if arr.ndim != 1 or len(arr) < 1 or np.any((arr != 0) & (arr != 1)):
        raise ValidationError("configuration must be a non-empty 0/1 sequence", "eta")
    return arr


def initial_interface(eta) -> Interface:
    """Staircase from the origin: ``+e1`` for an empty site, ``-e2`` for a particle."""
    eta = _eta_array(eta)
    steps = np.where(eta[:, None] == 0, [1, 0], [0, -1])
    pts = np.vstack([[0, 0], np.cumsum(steps, axis=0)])
    return Interface(pts.astype(np.int64))


def interface_to_config(iface: Interface) -> np.ndarray:
    d = np.diff(iface.points, axis=0)
    if not np.all((d == [1, 0]).all(axis=1) | (d == [0, -1]).all(axis=1)):
        raise ValidationError("interface steps must be e1 or -e2", "interface")
    return (d[:, 0] == 0).astype(np.uint8)


@numba.njit(cache=True)
def _grow(seed, n, alpha, beta, start, t, level_cap):
    """Levels reached by each column at time ``t``.

    ``start[i]`` is the initial level of column ``i``. Fill times follow
    ``F(z) = max(F(z - e1), F(z - e2)) + w_z`` with ``F = 0`` on and below the
    initial interface and on the missing neighbours of the boundary columns.
    Returns ``(levels, ok)``; ``ok`` is False if ``level_cap`` was exceeded.
    """
    m = n + 1
    val = np.zeros(m)
    dead = np.zeros(m, dtype=np.bool_)
    level = start.copy()
    n_dead = 0
    s = start.min() + 1
    while n_dead < m:
        if s > level_cap:
            return level, False
        # parents of level s sit on the other parity and were written last sweep
        for i in range(m):
            if (s - i) % 2 != 0 or s <= start[i] or dead[i]:
                continue
            left = val[i - 1] if i > 0 else 0.0
            right = val[i + 1] if i < n else 0.0
            f = max(left, right) + _weight(seed, (s + i) // 2, (s - i) // 2, n, alpha, beta)
            val[i] = f
            if f <= t:
                level[i] = s
            else:
                dead[i] = True
                n_dead += 1
        s += 1
    return level, True


@numba.njit(cache=True)
def _grow_many(seed, n, alpha, beta, start, t, level_cap, replicas):
    counts = np.zeros(1 << n, dtype=np.int64)
    for r in range(replicas):
        lv, ok = _grow(_replica_seed(seed, r), n, alpha, beta, start, t, level_cap)
        if not ok:
            return counts, False
        idx = 0
        for i in range(1, n + 1):
            # particle at site i iff the x coordinate does not move
            if lv[i] - lv[i - 1] == -1:
                idx |= 1 << (i - 1)
        counts[idx] += 1
    return counts, True


def _start_levels(eta) -> np.ndarray:
    pts = initial_interface(eta).points
    return (pts[:, 0] + pts[:, 1]).astype(np.int64)


def evolve_interface(env: LppEnvironment, eta_init, t: float) -> tuple[Interface, np.ndarray]:
    eta = _eta_array(eta_init)
    if len(eta) != env.n:
        raise ValidationError(f"configuration length {len(eta)} != strip width {env.n}", "eta_init")
    if t < 0:
        raise ValidationError("t must be >= 0", "t")
    start = _start_levels(eta)
    env.check_level(int(start.min()))
    level, ok = _grow(np.uint64(env.seed), env.n, env.alpha, env.beta, start, float(t), env.window[1])
    if not ok:
        raise CapacityError(f"growth left the window {env.window}; enlarge the window")
    cols = np.arange(env.n + 1)
    pts = np.stack([(level + cols) // 2, (level - cols) // 2], axis=1)
    iface = Interface(pts.astype(np.int64))
    return iface, interface_to_config(iface)


def interface_config_law(
    n: int, alpha: float, beta: float, eta_init, t: float, replicas: int, seed: int
) -> ConfigDist:
    """Law of the decoded configuration at time ``t`` over independent
    environments ``(seed, replica)``."""
    eta = _eta_array(eta_init)
    if len(eta) != n:
        raise ValidationError("configuration length mismatch", "eta_init")
    counts, ok = _grow_many(
        np.uint64(seed), n, float(alpha), float(beta), _start_levels(eta), float(t), 1 << 40, int(replicas)
    )
    if not ok:
        raise CapacityError("growth exceeded the level cap")
    return ConfigDist(n, counts / counts.sum())


# ---------------------------------------------------------------------------
# Line statistics, transversal fluctuations, coalescence


@numba.njit(cache=True)
def _line_stats(seed, n, alpha, beta, n_line, k):
    tmin = np.inf
    tmax = -np.inf
    m = n + 1
    for src in range(m):
        if (n_line - src) % 2 != 0:
            continue
        f = np.full(m, -np.inf)
        f[src] = _weight(seed, (n_line + src) // 2, (n_line - src) // 2, n, alpha, beta)
        for s in range(n_line + 1, n_line + k + 1):
            g = np.full(m, -np.inf)
            for i in range(m):
                if (s - i) % 2 != 0:
                    continue
                best = -np.inf
                if i > 0 and f[i - 1] > best:
                    best = f[i - 1]
                if i < n and f[i + 1] > best:
                    best = f[i + 1]
                if best == -np.inf:
                    continue
                if s == n_line + k:
                    # endpoint weight excluded
                    g[i] = best
                else:
                    g[i] = best + _weight(seed, (s + i) // 2, (s - i) // 2, n, alpha, beta)
            f = g
        for i in range(m):
            if f[i] > -np.inf:
                if f[i] < tmin:
                    tmin = f[i]
                if f[i] > tmax:
                    tmax = f[i]
    return tmin, tmax


def line_stats(env: LppEnvironment, n_line: int, k: int) -> tuple[float, float]:
    """Minimal and maximal passage time from the line ``x + y = n_line`` to
    the line ``x + y = n_line + k`` over ordered endpoint pairs."""
    if k < 1:
        raise ValidationError("k must be >= 1", "k")
    env.check_level(n_line)
    env.check_level(n_line + k)
    tmin, tmax = _line_stats(np.uint64(env.seed), env.n, env.alpha, env.beta, int(n_line), int(k))
    return float(tmin), float(tmax)


def transversal_fluctuation(path, slope: float) -> float:
    """Largest ``l1`` distance between the path after ``l`` steps and the
    straight line through its start with the given slope, measured in excess
    of the closest lattice point on the same level (so a lattice staircase
    hugging the line scores 0)."""
    path = np.asarray(path, dtype=float)
    if path.ndim != 2 or path.shape[1] != 2:
        raise ValidationError("path must be an (L, 2) array", "path")
    if not slope > 0:
        raise ValidationError("slope must be positive", "slope")
    steps = np.diff(path, axis=0)
    if not np.all((steps == [1, 0]).all(axis=1) | (steps == [0, 1]).all(axis=1)):
        raise ValidationError("path must be up-right", "path")
    ell = np.arange(len(path))
    rel = path - path[0]
    line_x = ell / (1.0 + slope)
    dev = 2.0 * np.abs(rel[:, 0] - line_x)
    # closest lattice point on level l: x rounded to the nearest integer
    floor_dev = 2.0 * np.abs(np.round(line_x) - line_x)
    return float(np.max(np.maximum(dev - floor_dev, 0.0)))


def coalescence_check(env: LppEnvironment, a1, a2, a3, a4) -> bool:
    """Whether the geodesics ``a1 -> a4`` and ``a2 -> a3`` share a vertex."""
    g1 = geodesic(env, a1, a4)
    g2 = geodesic(env, a2, a3)
    s1 = {tuple(p) for p in g1.tolist()}
    return any(tuple(p) in s1 for p in g2.tolist())


def coalescence_sites(n: int, k: int, L: float, offset: int) -> tuple[tuple[int, int], ...]:
    """Four-point geometry with ``a1 = (0, L k^{2/3})``, ``a2 = (L k^{2/3}, 0)``,
    ``a3 = (n, n - L n^{2/3})``, ``a4 = (n - L n^{2/3}, n)``, shifted by
    ``(offset, 0)`` so the points sit inside a strip."""
    # guard against k**(2/3) landing just below an integer
    a = int(math.floor(L * k ** (2 / 3) + 1e-9))
    b = int(math.floor(L * n ** (2 / 3) + 1e-9))
    pts = ((0, a), (a, 0), (n, n - b), (n - b, n))
    return tuple((x + offset, y) for x, y in pts)
