"""Polymer path measures with a hard wall and height-dependent pinning.

A path is a lazy walk ``h_0 = 0, h_1, ..., h_n`` with increments in
``{-1, 0, 1}`` that never goes below zero. Its weight is
``exp(sum_i V(h, y_i))``, where for diagonal steps ``h`` is the lower endpoint
height and for flat steps the common height. The free measure leaves the
endpoint unconstrained; the constraint measure pins ``h_n = 0``.

With this convention the constraint partition function equals
``(1 - q)**n * Z_n`` for the Motzkin partition function ``Z_n``.

Tables store a mantissa per column plus an accumulated log scale, so every
probability below is formed from same-column ratios and ``n`` in the tens of
thousands does not underflow.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import ModelParams, ValidationError

MAX_SAMPLER_N = 100_000


class Mode(enum.Enum):
    FREE = "free"
    CONSTRAINT = "constraint"

    @classmethod
    def coerce(cls, mode) -> "Mode":
        if isinstance(mode, cls):
            return mode
        try:
            return cls(str(mode).lower())
        except ValueError:
            raise ValidationError(f"unknown polymer mode {mode!r}", "mode") from None


class UnsupportedRegionError(ValidationError):
    """Polymer weights are only positive in the fan region ``u v < 1``."""


def potential_v(h: int, y: int, p: ModelParams) -> float:
    if y not in (-1, 0, 1):
        raise ValidationError(f"step must be -1, 0 or 1, got {y!r}", "y")
    if h < 0:
        return -math.inf
    qh = p.q**h
    if y == 0:
        return math.log(2.0 + (p.u + p.v) * qh)
    prod = (1.0 - p.q * qh) * (1.0 - p.u * p.v * qh)
    return 0.5 * math.log(prod) if prod > 0 else -math.inf


def _step_arrays(p: ModelParams, h_max: int) -> tuple[np.ndarray, np.ndarray]:
    """``diag[h] = exp V(h, +-1)`` (step between ``h`` and ``h+1``) and
    ``flat[h] = exp V(h, 0)``."""
    h = np.arange(h_max + 1, dtype=float)
    qh = p.q**h
    diag = np.sqrt(np.clip((1.0 - p.q * qh) * (1.0 - p.u * p.v * qh), 0.0, None))
    diag[-1] = 0.0
    flat = 2.0 + (p.u + p.v) * qh
    return diag, flat


def _require_fan(p: ModelParams):
    if not p.u * p.v < 1.0:
        raise UnsupportedRegionError(
            f"polymer weights need u v < 1, got u v = {p.u * p.v:.6g}", "params"
        )


def _fwd(f: np.ndarray, diag: np.ndarray, flat: np.ndarray) -> np.ndarray:
    g = f * flat
    g[1:] += f[:-1] * diag[:-1]
    g[:-1] += f[1:] * diag[:-1]
    return g


# the walk weights are symmetric in the direction of travel, so the backward
# map is the same operator
_bwd = _fwd


@dataclass(frozen=True)
class TransferTables:
    n: int
    h_max: int
    mode: Mode
    params: ModelParams
    forward: np.ndarray
    forward_log: np.ndarray
    backward: np.ndarray
    backward_log: np.ndarray
    diag: np.ndarray
    flat: np.ndarray

    @property
    def log_z(self) -> float:
        return float(
            math.log(self.forward[0] @ self.backward[0])
            + self.forward_log[0]
            + self.backward_log[0]
        )

    def column_total(self, t: int) -> float:
        """Contraction of column ``t`` as a log; equals ``log_z`` for every ``t``."""
        return float(
            math.log(self.forward[t] @ self.backward[t])
            + self.forward_log[t]
            + self.backward_log[t]
        )


def default_h_max(n: int, mode) -> int:
    return n // 2 if Mode.coerce(mode) is Mode.CONSTRAINT else n


def build_transfer_tables(
    n: int, p: ModelParams, mode="constraint", h_max: int | None = None
) -> TransferTables:
    mode = Mode.coerce(mode)
    _require_fan(p)
    if n < 0:
        raise ValidationError("n must be >= 0", "n")
    need = default_h_max(n, mode)
    if h_max is None:
        h_max = need
    elif h_max < need:
        raise ValidationError(
            f"h_max={h_max} truncates {mode.value} paths of length {n}; need >= {need}",
            "h_max",
        )
    # one spare row so the top diagonal weight can be zeroed
    size = h_max + 2
    diag, flat = _step_arrays(p, size - 1)

    fwd = np.zeros((n + 1, size))
    flog = np.zeros(n + 1)
    fwd[0, 0] = 1.0
    for t in range(n):
        g = _fwd(fwd[t], diag, flat)
        m = g.max()
        fwd[t + 1] = g / m
        flog[t + 1] = flog[t] + math.log(m)

    bwd = np.zeros((n + 1, size))
    blog = np.zeros(n + 1)
    if mode is Mode.CONSTRAINT:
        bwd[n, 0] = 1.0
    else:
        bwd[n, : h_max + 1] = 1.0
    for t in range(n, 0, -1):
        g = _bwd(bwd[t], diag, flat)
        m = g.max()
        bwd[t - 1] = g / m
        blog[t - 1] = blog[t] + math.log(m)

    for arr in (fwd, flog, bwd, blog):
        arr.setflags(write=False)
    return TransferTables(n, h_max, mode, p, fwd, flog, bwd, blog, diag, flat)


def height_marginal(t: TransferTables, position: int) -> np.ndarray:
    """Law of ``h_position``; entry ``h`` is ``P(h_position = h)``."""
    if not 0 <= position <= t.n:
        raise ValidationError(f"position {position} outside 0..{t.n}", "position")
    w = t.forward[position] * t.backward[position]
    return (w / w.sum())[: t.h_max + 1]


def event_prob_a(t: TransferTables, i: int, j: int) -> float:
    """``P(h_i >= j)``."""
    if j < 0:
        raise ValidationError("j must be >= 0", "j")
    marg = height_marginal(t, i)
    return float(marg[j:].sum()) if j < len(marg) else 0.0


@dataclass(frozen=True)
class PolymerSample:
    heights: np.ndarray
    log_weight: float


def _path_log_weights(heights: np.ndarray, diag: np.ndarray, flat: np.ndarray) -> np.ndarray:
    lo = np.minimum(heights[..., 1:], heights[..., :-1])
    y = np.diff(heights, axis=-1)
    w = np.where(y == 0, flat[lo], diag[lo])
    return np.log(w).sum(axis=-1)


def sample_paths(t: TransferTables, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` exact draws, returned as an integer array ``(size, n + 1)``."""
    if t.n > MAX_SAMPLER_N:
        raise ValidationError(f"sampler capped at n={MAX_SAMPLER_N}", "n")
    out = np.zeros((size, t.n + 1), dtype=np.int64)
    h = np.zeros(size, dtype=np.int64)
    diag, flat = t.diag, t.flat
    for s in range(t.n):
        b = t.backward[s + 1]
        hm = np.maximum(h - 1, 0)
        w_down = np.where(h > 0, diag[hm] * b[hm], 0.0)
        w_stay = flat[h] * b[h]
        w_up = diag[h] * b[np.minimum(h + 1, len(b) - 1)]
        total = w_down + w_stay + w_up
        r = rng.random(size) * total
        step = np.where(r < w_down, -1, np.where(r < w_down + w_stay, 0, 1))
        h = h + step
        out[:, s + 1] = h
    return out


def sample_path(t: TransferTables, rng: np.random.Generator) -> PolymerSample:
    heights = sample_paths(t, rng, 1)[0]
    lw = float(_path_log_weights(heights, t.diag, t.flat)) if t.n else 0.0
    return PolymerSample(heights, lw)


def free_energy(n: int, p: ModelParams, mode="constraint") -> float:
    """``log(Z_n) / n`` by a streaming forward pass (no tables kept)."""
    mode = Mode.coerce(mode)
    _require_fan(p)
    if n < 1:
        raise ValidationError("free energy needs n >= 1", "n")
    return log_partition(n, p, mode) / n


def log_partition(n: int, p: ModelParams, mode="constraint") -> float:
    mode = Mode.coerce(mode)
    _require_fan(p)
    diag, flat = _step_arrays(p, n + 1)
    f = np.zeros(n + 2)
    f[0] = 1.0
    log_scale = 0.0
    for _ in range(n):
        f = _fwd(f, diag, flat)
        m = f.max()
        f /= m
        log_scale += math.log(m)
    end = f[0] if mode is Mode.CONSTRAINT else f.sum()
    return math.log(end) + log_scale


def return_time_law(t: TransferTables, m: int) -> np.ndarray:
    """``P(tau_m = s)`` for ``s = 1..n`` (index ``s``; entry 0 unused), where
    ``tau_m = inf{s >= 1 : h_s = m}``. Mass missing from the total is
    ``P(tau_m > n)``."""
    if m < 0:
        raise ValidationError("level m must be >= 0", "m")
    out = np.zeros(t.n + 1)
    if m > t.h_max:
        return out
    log_z = t.log_z
    g = t.forward[0].copy()
    for s in range(1, t.n + 1):
        # not-yet-hit weights carry the forward scaling of their column
        scale = math.exp(t.forward_log[s - 1] - t.forward_log[s])
        if s > 1:
            g[m] = 0.0
        g = _fwd(g, t.diag, t.flat) * scale
        out[s] = math.exp(
            math.log(g[m] * t.backward[s][m]) + t.forward_log[s] + t.backward_log[s] - log_z
        ) if g[m] * t.backward[s][m] > 0 else 0.0
    return out


def return_time_moment(
    p: ModelParams, m: int, k: int, n: int, mode="constraint"
) -> float:
    """``E[min(tau_m, n)**k]`` under the polymer measure of length ``n``."""
    if not 1 <= k <= 4:
        raise ValidationError("moment order k must lie in 1..4", "k")
    t = build_transfer_tables(n, p, mode)
    law = return_time_law(t, m)
    s = np.arange(n + 1, dtype=float)
    head = law[1:n]
    rest = 1.0 - head.sum()
    return float((s[1:n] ** k * head).sum() + n**k * rest)


def excursion_law_estimate(p: ModelParams, n: int) -> np.ndarray:
    """Law of ``tau_0`` under the constraint measure of length ``n``: entry
    ``s`` is ``P(tau_0 = s)`` for ``s = 1..n``."""
    return return_time_law(build_transfer_tables(n, p, Mode.CONSTRAINT), 0)


def h_transform_step_probs(x: int) -> tuple[float, float, float]:
    """``(down, stay, up)`` transition probabilities of the lazy walk
    conditioned to stay non-negative, from height ``x``."""
    if x < 0:
        raise ValidationError("x must be >= 0", "x")
    up = (x + 2) / (4.0 * (x + 1))
    down = x / (4.0 * (x + 1))
    return down, 0.5, up


def height_marginals_csv(t: TransferTables) -> str:
    lines = ["position,height,probability"]
    for pos in range(t.n + 1):
        for h, pr in enumerate(height_marginal(t, pos)):
            if pr > 0:
                lines.append(f"{pos},{h},{pr:.17g}")
    return "\n".join(lines) + "\n"
