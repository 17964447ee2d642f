"""Brute-force stationary distribution from the full ``2**n``-state generator."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import (
    CapacityError,
    ConfigDist,
    ModelParams,
    NumericalError,
    ValidationError,
    liggett_limit_density,
)

MAX_ORACLE_N = 20
DIRECT_SOLVE_MAX_N = 14


def _transitions(p: ModelParams):
    """Arrays ``(src, dst, rate)`` of all non-zero off-diagonal rates."""
    n = p.n
    states = np.arange(1 << n, dtype=np.int64)
    src, dst, rate = [], [], []

    def add(mask, target, r):
        if r > 0 and mask.any():
            src.append(states[mask])
            dst.append(target[mask])
            rate.append(np.full(int(mask.sum()), r))

    first = states & 1
    add(first == 0, states | 1, p.alpha)
    last = (states >> (n - 1)) & 1
    add(last == 1, states ^ (1 << (n - 1)), p.beta)
    for i in range(n - 1):
        a = (states >> i) & 1
        b = (states >> (i + 1)) & 1
        swapped = states ^ ((1 << i) | (1 << (i + 1)))
        add((a == 1) & (b == 0), swapped, 1.0)
        add((a == 0) & (b == 1), swapped, p.q)
    return np.concatenate(src), np.concatenate(dst), np.concatenate(rate)


def build_generator(p: ModelParams) -> sp.csr_matrix:
    """Sparse generator ``L`` with ``L[x, y]`` the rate from ``x`` to ``y``."""
    if p.n > MAX_ORACLE_N:
        raise CapacityError(f"generator capped at n={MAX_ORACLE_N}, got n={p.n}")
    size = 1 << p.n
    src, dst, rate = _transitions(p)
    off = sp.coo_matrix((rate, (src, dst)), shape=(size, size)).tocsr()
    exit_rates = np.asarray(off.sum(axis=1)).ravel()
    return (off - sp.diags(exit_rates)).tocsr()


def uniformization_rate(p: ModelParams) -> float:
    if max(p.alpha, p.beta, 1.0 + p.q) <= 1.0:
        return p.n + 1.0
    return p.alpha + p.beta + p.n * (1.0 + p.q)


def _residual(pi: np.ndarray, gen: sp.csr_matrix) -> float:
    return float(np.abs(gen.T @ pi).max())


def stationary_exact(
    p: ModelParams, tol: float = 1e-12, max_iter: int = 2_000_000
) -> ConfigDist:
    """Unique probability vector ``pi`` with ``pi L = 0``.

    Sparse LU on the system with one balance equation replaced by the
    normalization for ``n <= 14``; power iteration on the uniformized kernel
    above that.
    """
    gen = build_generator(p)
    size = gen.shape[0]
    if p.n <= DIRECT_SOLVE_MAX_N:
        a = gen.T.tolil()
        a[size - 1, :] = np.ones(size)
        rhs = np.zeros(size)
        rhs[-1] = 1.0
        pi = spla.spsolve(a.tocsc(), rhs)
    else:
        lam = uniformization_rate(p)
        kernel = (sp.identity(size, format="csr") + gen / lam).T.tocsr()
        pi = np.full(size, 1.0 / size)
        for _ in range(max_iter):
            nxt = kernel @ pi
            nxt /= nxt.sum()
            # the step threshold alone can stop with residual ~ lam * 1e-13
            if np.abs(nxt - pi).max() < 1e-13 and _residual(nxt, gen) <= tol:
                pi = nxt
                break
            pi = nxt
        else:
            raise NumericalError(
                f"power iteration did not converge; residual {_residual(pi, gen):.3e}"
            )
    res = _residual(pi, gen)
    if not np.all(np.isfinite(pi)) or res > tol:
        raise NumericalError(f"stationary solve failed; residual {res:.3e}")
    pi = np.clip(pi, 0.0, None)
    return ConfigDist(p.n, pi / pi.sum())


def current_exact(d: ConfigDist, p: ModelParams, i: int) -> float:
    """Stationary current across bond ``(i, i+1)``."""
    if not (1 <= i <= d.length - 1):
        raise ValidationError(f"bond index {i} outside 1..{d.length - 1}", "i")
    idx = np.arange(1 << d.length)
    a = (idx >> (i - 1)) & 1
    b = (idx >> i) & 1
    w = d.weights
    return float(w[(a == 1) & (b == 0)].sum() - p.q * w[(a == 0) & (b == 1)].sum())


def current_limit(p: ModelParams) -> float | None:
    rho = liggett_limit_density(p)
    if rho is None:
        return None
    return (1.0 - p.q) * rho * (1.0 - rho)
