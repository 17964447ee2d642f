"""Shared domain types: model parameters, phases, configuration distributions.

Configurations of length ``n`` are indexed by integers in ``[0, 2**n)`` with
bit ``i - 1`` holding the occupation of site ``i`` (site 1 is the lowest-order
bit). The CSV form writes site 1 leftmost.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

PHASE_TOL = 1e-12
MAX_DENSE_LEN = 24


class ValidationError(ValueError):
    """Invalid input. ``field`` names the offending argument when known."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class CapacityError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


class SignedMassError(NumericalError):
    pass


class DensityPhase(enum.Enum):
    HIGH_DENSITY = "HighDensity"
    LOW_DENSITY = "LowDensity"
    MAXIMAL_CURRENT = "MaximalCurrent"
    BOUNDARY = "Boundary"


class Region(enum.Enum):
    FAN = "Fan"
    SHOCK = "Shock"
    PRODUCT_LINE = "ProductLine"


@dataclass(frozen=True)
class Phase:
    density_phase: DensityPhase
    region: Region


@dataclass(frozen=True)
class ModelParams:
    """Open ASEP on ``n`` sites: right hops at rate 1, left hops at rate ``q``,
    entry at site 1 at rate ``alpha``, exit at site ``n`` at rate ``beta``."""

    n: int
    q: float
    alpha: float
    beta: float
    u: float = field(init=False)
    v: float = field(init=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValidationError(f"n must be a positive integer, got {self.n!r}", "n")
        if not (0.0 <= self.q < 1.0):
            raise ValidationError(f"q must lie in [0, 1), got {self.q!r}", "q")
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ValidationError(f"alpha must be positive, got {self.alpha!r}", "alpha")
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise ValidationError(f"beta must be positive, got {self.beta!r}", "beta")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "u", (1.0 - self.q) / self.alpha - 1.0)
        object.__setattr__(self, "v", (1.0 - self.q) / self.beta - 1.0)

    def with_n(self, n: int) -> "ModelParams":
        return ModelParams(n, self.q, self.alpha, self.beta)


def make_params(n: int, q: float, alpha: float, beta: float) -> ModelParams:
    return ModelParams(n, q, alpha, beta)


def params_from_uv(n: int, q: float, u: float, v: float) -> ModelParams:
    """Parameters with prescribed boundary fugacities ``u`` and ``v``."""
    if u <= -1.0:
        raise ValidationError(f"u must exceed -1, got {u!r}", "u")
    if v <= -1.0:
        raise ValidationError(f"v must exceed -1, got {v!r}", "v")
    return ModelParams(n, q, (1.0 - q) / (1.0 + u), (1.0 - q) / (1.0 + v))


@dataclass(frozen=True)
class WasepSpec:
    """Weakly asymmetric scaling: ``q(N) = exp(-c_q N**-epsilon)`` with fixed
    ``u`` and ``v``."""

    epsilon: float
    c_q: float
    u: float
    v: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive", "epsilon")
        if not self.c_q > 0:
            raise ValidationError("c_q must be positive", "c_q")
        if self.u <= -1.0:
            raise ValidationError(f"u must exceed -1, got {self.u!r}", "u")
        if self.v <= -1.0:
            raise ValidationError(f"v must exceed -1, got {self.v!r}", "v")

    def q_of(self, n: int) -> float:
        return math.exp(-self.c_q * float(n) ** (-self.epsilon))


def wasep_params(spec: WasepSpec, n: int) -> ModelParams:
    if n < 1:
        raise ValidationError("n must be >= 1", "n")
    return params_from_uv(n, spec.q_of(n), spec.u, spec.v)


def classify_phase(p: ModelParams, tol: float = PHASE_TOL) -> Phase:
    """Phase labels; values within ``tol`` of a phase boundary are labelled
    ``Boundary`` / ``ProductLine``."""
    u, v = p.u, p.v
    if v > max(u, 1.0) + tol:
        dp = DensityPhase.HIGH_DENSITY
    elif u > max(1.0, v) + tol:
        dp = DensityPhase.LOW_DENSITY
    elif max(u, v) < 1.0 - tol:
        dp = DensityPhase.MAXIMAL_CURRENT
    else:
        dp = DensityPhase.BOUNDARY
    uv = u * v
    if uv < 1.0 - tol:
        region = Region.FAN
    elif uv > 1.0 + tol:
        region = Region.SHOCK
    else:
        region = Region.PRODUCT_LINE
    return Phase(dp, region)


def finite_rep_order(p: ModelParams, tol: float = 1e-10, k_max: int = 64) -> int | None:
    """Smallest ``k >= 0`` with ``u v q**k == 1`` within ``tol``, or None."""
    uv = p.u * p.v
    for k in range(k_max + 1):
        val = uv * p.q**k
        if abs(val - 1.0) <= tol:
            return k
        if val < 1.0 - tol:
            break
    return None


# ---------------------------------------------------------------------------
# Distributions over binary configurations


def config_to_string(index: int, length: int) -> str:
    return "".join("1" if (index >> i) & 1 else "0" for i in range(length))


def string_to_config(s: str) -> int:
    idx = 0
    for i, ch in enumerate(s):
        if ch == "1":
            idx |= 1 << i
        elif ch != "0":
            raise ValidationError(f"invalid configuration string {s!r}", "config")
    return idx


def occupation_table(length: int) -> np.ndarray:
    """Boolean array of shape ``(2**length, length)``; entry ``[c, i]`` is the
    occupation of site ``i + 1`` in configuration ``c``."""
    idx = np.arange(1 << length, dtype=np.int64)
    return ((idx[:, None] >> np.arange(length)) & 1).astype(bool)


@dataclass(frozen=True)
class ConfigDist:
    """Finitely supported distribution on ``{0,1}**length``, stored densely."""

    length: int
    weights: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        if self.length < 0 or self.length > MAX_DENSE_LEN:
            raise CapacityError(
                f"dense distributions are capped at length {MAX_DENSE_LEN}, got {self.length}"
            )
        w = np.array(self.weights, dtype=float)
        if w.shape != (1 << self.length,):
            raise ValidationError(
                f"weights must have shape ({1 << self.length},), got {w.shape}", "weights"
            )
        if self.normalized:
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ValidationError(
                    "normalized distribution needs non-negative entries summing to 1",
                    "weights",
                )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_signed(cls, length: int, weights, clip_tol: float = 1e-12) -> "ConfigDist":
        """Normalize a signed weight vector. Negative entries smaller than
        ``clip_tol`` relative to the total are treated as rounding noise."""
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if not total > 0:
            raise SignedMassError(f"total mass {total!r} is not positive")
        w = w / total
        if np.any(w < -clip_tol):
            raise SignedMassError(f"normalized weights have negative entry {w.min():.3e}")
        w = np.clip(w, 0.0, None)
        return cls(length, w / w.sum(), True)

    def prob(self, config: str | int) -> float:
        if isinstance(config, str):
            if len(config) != self.length:
                raise ValidationError("configuration length mismatch", "config")
            config = string_to_config(config)
        return float(self.weights[config])

    def site_marginals(self) -> np.ndarray:
        return self.weights @ occupation_table(self.length)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["config", "probability"])
        for c, pr in enumerate(self.weights):
            writer.writerow([config_to_string(c, self.length), f"{pr:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ConfigDist":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["config", "probability"]:
            raise ValidationError("expected header 'config,probability'", "csv")
        body = rows[1:]
        if not body:
            raise ValidationError("empty distribution", "csv")
        length = len(body[0][0])
        w = np.zeros(1 << length)
        for cfg, pr in body:
            if len(cfg) != length:
                raise ValidationError("inconsistent configuration lengths", "csv")
            w[string_to_config(cfg)] = float(pr)
        return cls(length, w, True)


def point_mass(config: str) -> ConfigDist:
    w = np.zeros(1 << len(config))
    w[string_to_config(config)] = 1.0
    return ConfigDist(len(config), w)


def tv_distance(a: ConfigDist, b: ConfigDist) -> float:
    if a.length != b.length:
        raise ValidationError(f"length mismatch: {a.length} vs {b.length}", "length")
    return float(min(1.0, 0.5 * np.abs(a.weights - b.weights).sum()))


def project(d: ConfigDist, interval: tuple[int, int]) -> ConfigDist:
    """Marginal on sites ``a..b`` (1-based, inclusive)."""
    a, b = interval
    if not (1 <= a <= b <= d.length):
        raise ValidationError(f"invalid interval {interval} for length {d.length}", "interval")
    width = b - a + 1
    idx = (np.arange(1 << d.length) >> (a - 1)) & ((1 << width) - 1)
    w = np.bincount(idx, weights=d.weights, minlength=1 << width)
    return ConfigDist(width, w / w.sum())


def bernoulli_product(rho: float, length: int) -> ConfigDist:
    if not (0.0 <= rho <= 1.0):
        raise ValidationError(f"rho must lie in [0,1], got {rho!r}", "rho")
    ones = occupation_table(length).sum(axis=1)
    w = rho**ones * (1.0 - rho) ** (length - ones)
    return ConfigDist(length, w / w.sum())


def product_measure(densities: Iterable[float]) -> ConfigDist:
    """Independent sites with the given occupation probabilities."""
    rho = np.asarray(list(densities), dtype=float)
    occ = occupation_table(len(rho))
    w = np.prod(np.where(occ, rho, 1.0 - rho), axis=1)
    return ConfigDist(len(rho), w / w.sum())


def q_pochhammer(z: float, q: float, tol: float = 1e-17) -> float:
    """Infinite product ``prod_{i>=0} (1 - z q**i)``.

    Factors are taken until ``|z q**i| < tol``. For ``tol <= 1/2`` the
    neglected tail changes the result by a relative amount of at most
    ``2 tol / (1 - q)``.
    """
    if not (0.0 <= q < 1.0):
        raise ValidationError(f"q-Pochhammer needs 0 <= q < 1, got {q!r}", "q")
    result = 1.0
    term = z
    while abs(term) >= tol:
        result *= 1.0 - term
        term *= q
    return result


def liggett_limit_density(p: ModelParams, tol: float = PHASE_TOL) -> float | None:
    """Bulk density of the local limit, or None on the excluded boundaries."""
    half = (1.0 - p.q) / 2.0
    a, b = p.alpha, p.beta
    if a < min(b, half) - tol:
        return a / (1.0 - p.q)
    if b < min(a, half) - tol:
        return 1.0 - b / (1.0 - p.q)
    if min(a, b) > half + tol:
        return 0.5
    return None
