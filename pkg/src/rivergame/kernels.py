"""Hot numeric loops, jitted with numba when available.

Set ``RIVERGAME_NUMBA=0`` in the environment to force the pure-numpy
fallbacks (useful for debugging and for the benchmark in ``benchmarks/``).
Both paths compute identical results: the numba versions are scalar loops,
the numpy versions sweep vectorized over batch rows.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "NUMBA_ENABLED",
    "forward_profile",
    "forward_profile_batch",
    "closed_form_profile",
    "batch_objective",
    "batch_feasible",
    "KIND_CODES",
]

# Profit kinds encoded for array kernels; mirrors profits.PROFIT_KINDS order.
KIND_CODES = {"linear": 0, "quadratic": 1, "logarithmic": 2, "power": 3}


# -- loop bodies (numba-compiled when enabled) ---------------------------------

def _forward_profile_loop(x, k_in, start_level):
    c = np.empty_like(x)
    level = start_level
    for j in range(x.shape[0]):
        if j > 0:
            level = level * k_in[j]
        level = level + x[j]
        c[j] = level
    return c


def _forward_profile_batch_loop(X, k_in, start_level):
    m, n = X.shape
    C = np.empty_like(X)
    for i in range(m):
        level = start_level
        for j in range(n):
            if j > 0:
                level = level * k_in[j]
            level = level + X[i, j]
            C[i, j] = level
    return C


def _batch_objective_loop(X, kinds, p1, p2, weight):
    m, n = X.shape
    out = np.zeros(m)
    for i in range(m):
        total = 0.0
        for j in range(n):
            w = weight[j]
            if w == 0.0:
                continue
            x = X[i, j]
            kind = kinds[j]
            if kind == 0:
                total += w * p1[j] * x
            elif kind == 1:
                total += w * (p1[j] * x - p2[j] * x * x)
            elif kind == 2:
                total += w * p1[j] * np.log1p(x)
            else:
                total += w * p1[j] * x ** p2[j]
        out[i] = total
    return out


def _batch_feasible_loop(X, k_in, start_level, b, tol):
    m, n = X.shape
    ok = np.empty(m, dtype=np.bool_)
    for i in range(m):
        level = start_level
        good = True
        for j in range(n):
            if j > 0:
                level = level * k_in[j]
            level = level + X[i, j]
            if level > b[j] + tol:
                good = False
                break
        ok[i] = good
    return ok


# -- vectorized numpy fallbacks --------------------------------------------------

def _forward_profile_batch_numpy(X, k_in, start_level):
    C = np.empty_like(X)
    level = np.full(X.shape[0], start_level)
    for j in range(X.shape[1]):
        if j > 0:
            level = level * k_in[j]
        level = level + X[:, j]
        C[:, j] = level
    return C


def _batch_objective_numpy(X, kinds, p1, p2, weight):
    out = np.zeros(X.shape[0])
    for j in range(X.shape[1]):
        w = weight[j]
        if w == 0.0:
            continue
        col = X[:, j]
        kind = kinds[j]
        if kind == 0:
            out += w * p1[j] * col
        elif kind == 1:
            out += w * (p1[j] * col - p2[j] * col * col)
        elif kind == 2:
            out += w * p1[j] * np.log1p(col)
        else:
            out += w * p1[j] * col ** p2[j]
    return out


def _batch_feasible_numpy(X, k_in, start_level, b, tol):
    ok = np.ones(X.shape[0], dtype=bool)
    level = np.full(X.shape[0], start_level)
    for j in range(X.shape[1]):
        if j > 0:
            level = level * k_in[j]
        level = level + X[:, j]
        ok &= level <= b[j] + tol
    return ok


def _want_numba() -> bool:
    flag = os.environ.get("RIVERGAME_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


NUMBA_ENABLED = False
if _want_numba():
    try:
        from numba import njit

        _forward_profile_jit = njit(cache=True)(_forward_profile_loop)
        _forward_profile_batch_jit = njit(cache=True)(_forward_profile_batch_loop)
        _batch_objective_jit = njit(cache=True)(_batch_objective_loop)
        _batch_feasible_jit = njit(cache=True)(_batch_feasible_loop)
        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass


def forward_profile(x, k_in, start_level):
    """Pollution after each node: ``c[j] = k_in[j]*c[j-1] + x[j]``.

    ``k_in[j]`` is the residual rate into span position ``j`` (``k_in[0]`` is
    ignored; ``start_level`` already arrives at position 0).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    k_in = np.ascontiguousarray(k_in, dtype=np.float64)
    if NUMBA_ENABLED:
        return _forward_profile_jit(x, k_in, float(start_level))
    return _forward_profile_loop(x, k_in, float(start_level))


def forward_profile_batch(X, k_in, start_level):
    X = np.ascontiguousarray(X, dtype=np.float64)
    k_in = np.ascontiguousarray(k_in, dtype=np.float64)
    if NUMBA_ENABLED:
        return _forward_profile_batch_jit(X, k_in, float(start_level))
    return _forward_profile_batch_numpy(X, k_in, float(start_level))


def closed_form_profile(x, k_in, start_level):
    """Same profile as :func:`forward_profile` via explicit weighted sums.

    Kept as an independent cross-check of the recursion: position ``j`` gets
    ``sum_i W(i->j) * x[i] + W(0->j) * start_level`` with ``W`` the product of
    the residual rates strictly between the two positions.
    """
    x = np.asarray(x, dtype=np.float64)
    k_in = np.asarray(k_in, dtype=np.float64)
    n = x.shape[0]
    c = np.empty(n)
    for j in range(n):
        total = 0.0
        for i in range(j + 1):
            w = 1.0
            for t in range(i + 1, j + 1):
                w *= k_in[t]
            total += w * x[i]
        w0 = 1.0
        for t in range(1, j + 1):
            w0 *= k_in[t]
        c[j] = total + w0 * start_level
    return c


def batch_objective(X, kinds, p1, p2, weight):
    """Weighted profit totals for a batch of plans (rows of ``X``)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    kinds = np.ascontiguousarray(kinds, dtype=np.int64)
    p1 = np.ascontiguousarray(p1, dtype=np.float64)
    p2 = np.ascontiguousarray(p2, dtype=np.float64)
    weight = np.ascontiguousarray(weight, dtype=np.float64)
    if NUMBA_ENABLED:
        return _batch_objective_jit(X, kinds, p1, p2, weight)
    return _batch_objective_numpy(X, kinds, p1, p2, weight)


def batch_feasible(X, k_in, start_level, b, tol=1e-9):
    """Which plan rows keep every pollution level within tolerance."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    k_in = np.ascontiguousarray(k_in, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if NUMBA_ENABLED:
        return _batch_feasible_jit(X, k_in, float(start_level), b, float(tol))
    return _batch_feasible_numpy(X, k_in, float(start_level), b, float(tol))
