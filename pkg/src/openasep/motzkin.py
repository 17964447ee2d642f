"""Weighted bi-colored Motzkin paths and transfer-matrix contraction.

Each site contributes one step. An occupied site carries a north step or a
filled east step, an empty site a south step or an empty east step. Step
weights, with ``h`` the lower endpoint height of the step::

    north   (1 - q**(h+1)) / (1 - q)
    south   (1 - u v q**h) / (1 - q)
    filled  (1 + v q**h) / (1 - q)
    empty   (1 + u q**h) / (1 - q)

With these weights ``B(eta) = sum of W over paths compatible with eta`` is a
basic weight function: ``B(empty) = 1`` and the boundary and bulk relations
hold exactly, so ``Z_{N-1} / Z_N`` is the stationary current.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Sequence

import numpy as np

from .core import (
    CapacityError,
    ConfigDist,
    ModelParams,
    SignedMassError,
    ValidationError,
    finite_rep_order,
)

MAX_PATHS_N = 20
MAX_PATTERN_LEN = 20


class Step(enum.Enum):
    NORTH = "N"
    EAST_FILLED = "E*"
    EAST_EMPTY = "Eo"
    SOUTH = "S"

    @property
    def rise(self) -> int:
        return {"N": 1, "S": -1}.get(self.value, 0)

    @property
    def occupied(self) -> bool:
        return self in (Step.NORTH, Step.EAST_FILLED)


def heights(steps: Sequence[Step]) -> list[int]:
    h = [0]
    for s in steps:
        h.append(h[-1] + s.rise)
    return h


def is_bicolored_motzkin(steps: Sequence[Step]) -> bool:
    h = heights(steps)
    return min(h) >= 0 and h[-1] == 0


def enumerate_paths(n: int) -> Iterator[tuple[Step, ...]]:
    """All bi-colored Motzkin paths of length ``n`` (brute force, small n)."""
    if n > 14:
        raise CapacityError("path enumeration capped at n=14")
    for w in product(list(Step), repeat=n):
        h = 0
        for s in w:
            h += s.rise
            if h < 0:
                break
        else:
            if h == 0:
                yield w


def step_weight(step: Step, h_base: int, p: ModelParams) -> float:
    if h_base < 0:
        raise ValidationError(f"negative height {h_base}", "h_base")
    q, u, v = p.q, p.u, p.v
    qh = q**h_base
    if step is Step.NORTH:
        w = 1.0 - q * qh
    elif step is Step.SOUTH:
        w = 1.0 - u * v * qh
    elif step is Step.EAST_FILLED:
        w = 1.0 + v * qh
    else:
        w = 1.0 + u * qh
    return w / (1.0 - q)


def total_weight(omega: Sequence[Step], p: ModelParams) -> float:
    w = 1.0
    h = 0
    for s in omega:
        if s is Step.SOUTH:
            h -= 1
            if h < 0:
                raise ValidationError("path drops below the axis", "omega")
            w *= step_weight(s, h, p)
        else:
            w *= step_weight(s, h, p)
            h += s.rise
    return w


# ---------------------------------------------------------------------------
# Transfer contraction


@dataclass(frozen=True)
class StepTables:
    """Step weights indexed by base height ``0..h_max``."""

    north: np.ndarray
    south: np.ndarray
    filled: np.ndarray
    empty: np.ndarray

    @property
    def h_max(self) -> int:
        return len(self.north) - 1

    @classmethod
    def build(cls, p: ModelParams, h_max: int) -> "StepTables":
        h = np.arange(h_max + 1, dtype=float)
        qh = p.q**h
        scale = 1.0 / (1.0 - p.q)
        north = (1.0 - p.q * qh) * scale
        # no north step out of the top row
        north[-1] = 0.0
        return cls(
            north=north,
            south=(1.0 - p.u * p.v * qh) * scale,
            filled=(1.0 + p.v * qh) * scale,
            empty=(1.0 + p.u * qh) * scale,
        )

    def signed(self) -> bool:
        return bool(np.any(self.south < 0))

    # forward maps act on weights of prefixes ending at each height

    def fwd_occupied(self, f: np.ndarray) -> np.ndarray:
        g = f * self.filled
        g[..., 1:] += f[..., :-1] * self.north[:-1]
        return g

    def fwd_empty(self, f: np.ndarray) -> np.ndarray:
        g = f * self.empty
        g[..., :-1] += f[..., 1:] * self.south[:-1]
        return g

    def fwd_free(self, f: np.ndarray) -> np.ndarray:
        return self.fwd_occupied(f) + self.fwd_empty(f)

    # backward map acts on weights of suffixes starting at each height

    def bwd_free(self, b: np.ndarray) -> np.ndarray:
        g = b * (self.filled + self.empty)
        g[..., :-1] += self.north[:-1] * b[..., 1:]
        g[..., 1:] += self.south[:-1] * b[..., :-1]
        return g


def default_height_cap(p: ModelParams, n: int) -> int:
    k = finite_rep_order(p)
    cap = (n + 1) // 2
    if k is not None:
        cap = min(cap, k)
    return max(cap, 0)


def _check_cap(p: ModelParams, n: int, h_max: int | None) -> int:
    if h_max is None:
        return default_height_cap(p, n)
    if h_max >= (n + 1) // 2:
        return h_max
    k = finite_rep_order(p)
    if k is not None and h_max >= k:
        return h_max
    raise ValidationError(
        f"h_max={h_max} truncates paths of length {n}; need h_max >= ceil(n/2) "
        "or a finite representation u v q**k = 1 with k <= h_max",
        "h_max",
    )


def basic_weight(eta: Sequence[int], p: ModelParams) -> float:
    """``B(eta)``: total weight of the paths compatible with ``eta``."""
    n = len(eta)
    if n == 0:
        return 1.0
    tables = StepTables.build(p, _check_cap(p, n, None) + 1)
    f = np.zeros(tables.h_max + 1)
    f[0] = 1.0
    for e in eta:
        f = tables.fwd_occupied(f) if e else tables.fwd_empty(f)
    return float(f[0])


def basic_weights_all(length: int, p: ModelParams, h_max: int | None = None) -> tuple[np.ndarray, float]:
    """``B`` for every configuration of ``length`` sites as ``(mantissa, log_scale)``;
    ``B = mantissa * exp(log_scale)``, indexed like :class:`ConfigDist`."""
    if length > MAX_PATHS_N:
        raise CapacityError(f"full path contraction capped at n={MAX_PATHS_N}")
    cap = _check_cap(p, length, h_max)
    tables = StepTables.build(p, cap + 1)
    arr = np.zeros((1, tables.h_max + 1))
    arr[0, 0] = 1.0
    log_scale = 0.0
    for _ in range(length):
        arr = np.concatenate([tables.fwd_empty(arr), tables.fwd_occupied(arr)], axis=0)
        m = np.abs(arr).max()
        if m > 0:
            arr /= m
            log_scale += math.log(m)
    return arr[:, 0].copy(), log_scale


@dataclass(frozen=True)
class PartitionValue:
    """Signed value ``mantissa * exp(log_scale)``."""

    mantissa: float
    log_scale: float

    @property
    def log_abs(self) -> float:
        return math.log(abs(self.mantissa)) + self.log_scale

    @property
    def value(self) -> float:
        return self.mantissa * math.exp(self.log_scale)

    def ratio(self, other: "PartitionValue") -> float:
        return self.mantissa / other.mantissa * math.exp(self.log_scale - other.log_scale)

    def to_json(self) -> dict:
        return {"mantissa": self.mantissa, "log_scale": self.log_scale}


def partition_function(n: int, p: ModelParams, h_max: int | None = None) -> PartitionValue:
    """``Z_n``, the total weight of all bi-colored Motzkin paths of length ``n``."""
    if n < 0:
        raise ValidationError("n must be >= 0", "n")
    if n == 0:
        return PartitionValue(1.0, 0.0)
    cap = _check_cap(p, n, h_max)
    tables = StepTables.build(p, cap + 1)
    f = np.zeros(tables.h_max + 1)
    f[0] = 1.0
    log_scale = 0.0
    for _ in range(n):
        f = tables.fwd_free(f)
        m = np.abs(f).max()
        f /= m
        log_scale += math.log(m)
    return PartitionValue(float(f[0]), log_scale)


def partition_counts(n: int) -> list[int]:
    """Exact number of bi-colored Motzkin paths of lengths ``0..n`` (integer DP)."""
    counts = [1]
    f = [1]
    for _ in range(n):
        g = [0] * (len(f) + 1)
        for h, c in enumerate(f):
            if not c:
                continue
            g[h] += 2 * c
            g[h + 1] += c
            if h > 0:
                g[h - 1] += c
        f = g
        counts.append(f[0])
    return counts


def catalan(m: int) -> int:
    return math.comb(2 * m, m) // (m + 1)


def stationary_via_paths(p: ModelParams) -> ConfigDist:
    """Stationary distribution as normalized basic weights ``B(eta) / Z_N``."""
    if p.n > MAX_PATHS_N:
        raise CapacityError(f"stationary_via_paths capped at n={MAX_PATHS_N}")
    b, _ = basic_weights_all(p.n, p)
    total = b.sum()
    if not total > 0:
        raise SignedMassError(
            f"non-positive partition mass {total!r}; outside the validated parameter set"
        )
    return ConfigDist.from_signed(p.n, b)


def _boundary_vectors(p: ModelParams, interval: tuple[int, int], h_max: int, signed: bool):
    a, b = interval
    tables = StepTables.build(p, h_max)
    if tables.signed() and not signed:
        raise SignedMassError(
            "negative step weights (shock region, u v > 1); pass signed=True to "
            "contract signed weights"
        )
    f = np.zeros(h_max + 1)
    f[0] = 1.0
    for _ in range(a - 1):
        f = tables.fwd_free(f)
        f /= np.abs(f).max()
    g = np.zeros(h_max + 1)
    g[0] = 1.0
    for _ in range(p.n - b):
        g = tables.bwd_free(g)
        g /= np.abs(g).max()
    return tables, f, g


def projected_stationary_transfer(
    p: ModelParams,
    interval: tuple[int, int],
    h_max: int | None = None,
    signed: bool = False,
) -> ConfigDist:
    """Exact marginal of the length-``n`` stationary law on sites ``a..b``.

    Cost ``O((n + 2**|I| |I|) h_max)``. Weights outside the interval are summed
    by forward and backward contraction; only same-position ratios enter the
    result, so no global normalization is formed.
    """
    a, b = interval
    if not (1 <= a <= b <= p.n):
        raise ValidationError(f"invalid interval {interval} for n={p.n}", "interval")
    width = b - a + 1
    if width > MAX_PATTERN_LEN:
        raise CapacityError(f"interval width capped at {MAX_PATTERN_LEN}")
    cap = _check_cap(p, p.n, h_max)
    tables, f, g = _boundary_vectors(p, interval, cap, signed)
    arr = f[None, :]
    for _ in range(width):
        arr = np.concatenate([tables.fwd_empty(arr), tables.fwd_occupied(arr)], axis=0)
        arr /= np.abs(arr).max()
    w = arr @ g
    total = w.sum()
    if not total > 0:
        raise SignedMassError(
            f"signed contraction produced total mass {total!r} (shock-region caveat)"
        )
    return ConfigDist.from_signed(width, w, clip_tol=1e-10)


def current_via_partition(p: ModelParams) -> float:
    """``Z_{N-1} / Z_N``."""
    return partition_function(p.n - 1, p).ratio(partition_function(p.n, p))


def verify_basic_relations(p: ModelParams, n: int) -> float:
    """Largest relative residual of the defining relations of a basic weight
    function over all configurations of total length at most ``n``."""
    if n > 12:
        raise CapacityError("verify_basic_relations capped at n=12")
    table = []
    for length in range(n + 1):
        m, s = basic_weights_all(length, p)
        table.append(m * math.exp(s))
    worst = abs(table[0][0] - 1.0)

    def rel(lhs, rhs):
        denom = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-300)
        return float((np.abs(lhs - rhs) / denom).max()) if len(lhs) else 0.0

    for ell in range(n):
        idx = np.arange(1 << ell)
        worst = max(worst, rel(table[ell], p.alpha * table[ell + 1][idx << 1]))
        worst = max(worst, rel(table[ell], p.beta * table[ell + 1][idx | (1 << ell)]))
    for le in range(n - 1):
        for lz in range(n - 1 - le):
            e = np.arange(1 << le)[:, None]
            z = np.arange(1 << lz)[None, :]
            short = table[le + lz + 1]
            long_ = table[le + lz + 2]
            lhs = short[e | (0 << le) | (z << (le + 1))] + short[e | (1 << le) | (z << (le + 1))]
            rhs = long_[e | (1 << le) | (z << (le + 2))] - p.q * long_[e | (2 << le) | (z << (le + 2))]
            worst = max(worst, rel(lhs.ravel(), rhs.ravel()))
    return worst
