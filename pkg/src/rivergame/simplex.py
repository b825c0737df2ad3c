"""Small dense two-phase simplex with Bland's rule.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x = b_eq`` and
``x >= 0``.  Sized for the least-core programs this package builds (a few
thousand rows at most), so a full dense tableau is maintained and pivots
follow Bland's smallest-index rule throughout, which rules out cycling on
the heavily degenerate programs superadditive games produce.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["LPResult", "solve_lp"]

_PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: Optional[np.ndarray]
    objective: Optional[float]


def solve_lp(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    max_iterations: Optional[int] = None,
) -> LPResult:
    c = np.asarray(c, dtype=float)
    blocks = []
    rhs_parts = []
    n_ub = 0
    if A_ub is not None and len(A_ub):
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
        blocks.append(A_ub)
        rhs_parts.append(np.asarray(b_ub, dtype=float))
        n_ub = A_ub.shape[0]
    if A_eq is not None and len(A_eq):
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
        blocks.append(A_eq)
        rhs_parts.append(np.asarray(b_eq, dtype=float))

    n = c.shape[0]
    if not blocks:
        if np.any(c < -_PIVOT_TOL):
            return LPResult("unbounded", None, None)
        return LPResult("optimal", np.zeros(n), 0.0)

    A = np.vstack(blocks)
    b = np.concatenate(rhs_parts)
    m = A.shape[0]

    # Columns: structural | slacks (ub rows) | artificials (all rows) | rhs.
    total = n + n_ub + m
    T = np.zeros((m, total + 1))
    T[:, :n] = A
    for i in range(n_ub):
        T[i, n + i] = 1.0
    T[:, total] = b
    neg = T[:, total] < 0
    T[neg] = -T[neg]
    for i in range(m):
        T[i, n + n_ub + i] = 1.0
    basis = np.arange(n + n_ub, n + n_ub + m)

    if max_iterations is None:
        max_iterations = 200 * (m + total)

    # Phase 1: minimize the artificial total, starting from the artificial basis.
    c1 = np.zeros(total)
    c1[n + n_ub :] = 1.0
    obj = _objective_row(T, basis, c1, total)
    status = _run(T, basis, obj, allow=n + n_ub, max_iterations=max_iterations)
    if status != "optimal" or obj[total] < -1e-7:
        return LPResult("infeasible", None, None)
    _pivot_out_artificials(T, basis, n + n_ub)

    c2 = np.zeros(total)
    c2[:n] = c
    obj = _objective_row(T, basis, c2, total)
    status = _run(T, basis, obj, allow=n + n_ub, max_iterations=max_iterations)
    if status != "optimal":
        return LPResult(status, None, None)

    x = np.zeros(total)
    x[basis] = T[:, total]
    return LPResult("optimal", x[:n], float(c @ x[:n]))


def _objective_row(T, basis, cost, total) -> np.ndarray:
    """Reduced-cost row for ``cost`` given the current basis; entry ``total``
    carries minus the objective value."""
    row = np.zeros(total + 1)
    row[:total] = cost
    for i, var in enumerate(basis):
        cv = cost[var]
        if cv != 0.0:
            row -= cv * T[i]
    return row


def _run(T, basis, obj, allow, max_iterations) -> str:
    m, width = T.shape
    total = width - 1
    for _ in range(max_iterations):
        entering = -1
        for j in range(allow):
            if obj[j] < -_PIVOT_TOL:
                entering = j
                break
        if entering < 0:
            return "optimal"
        col = T[:, entering]
        leaving = -1
        best = None
        for i in range(m):
            if col[i] > _PIVOT_TOL:
                ratio = T[i, total] / col[i]
                if best is None or ratio < best - _PIVOT_TOL or (
                    abs(ratio - best) <= _PIVOT_TOL and basis[i] < basis[leaving]
                ):
                    best = ratio
                    leaving = i
        if leaving < 0:
            return "unbounded"
        _pivot(T, basis, obj, leaving, entering)
    return "stalled"


def _pivot(T, basis, obj, row, col) -> None:
    T[row] /= T[row, col]
    piv = T[row]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, piv)
    obj -= obj[col] * piv
    basis[row] = col


def _pivot_out_artificials(T, basis, n_real) -> None:
    """Swap artificial basics (necessarily at zero) for real columns when the
    row is not redundant; redundant rows keep their artificial, which phase 2
    simply never lets re-enter."""
    m = T.shape[0]
    for i in range(m):
        if basis[i] < n_real:
            continue
        for j in range(n_real):
            if abs(T[i, j]) > 1e-9:
                dummy = np.zeros(T.shape[1])
                _pivot(T, basis, dummy, i, j)
                break
