"""Independent brute-force valuation of coalitions on small spans.

Validation-only: nothing in the production path calls this module.  The
strategy shares no machinery with the greedy solver or the split recursion.
Each outside node either sits pinned at its cap or saturates its own
tolerance exactly (a selfish node always does one of the two at an optimum).
A saturating node resets the pollution level to a constant, so the span
decomposes into independent segments between saturating nodes; each segment
is a box-and-affine-constrained concave maximization over the member
discharges inside it, solved by sequential quadratic programming from
several starts and then hardened by a shrinking-window grid search around
the incumbent.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .errors import NoFeasibleAssignmentError, SpanTooLargeError
from .hydrology import grand_myopic_profile, span_rates_in
from .instance import Coalition, DischargePlan, Instance

__all__ = ["OracleConfig", "OracleResult", "brute_force_value"]

_TOL = 1e-9


@dataclass(frozen=True)
class OracleConfig:
    grid_divisions: int = 20
    refine_rounds: int = 5
    refine_factor: int = 5
    tolerance: float = 1e-4

    def __post_init__(self) -> None:
        if self.grid_divisions <= 0 or self.refine_rounds < 1 or self.refine_factor <= 1:
            raise ValueError("bad oracle configuration")


@dataclass(frozen=True)
class OracleResult:
    value: float
    plan: DischargePlan


class _Infeasible(Exception):
    pass


def brute_force_value(
    instance: Instance,
    coalition: Coalition | Sequence[int],
    config: Optional[OracleConfig] = None,
) -> OracleResult:
    """Best feasible coalition value over all outside-node behaviours."""
    coalition = (
        coalition if isinstance(coalition, Coalition) else Coalition.of(coalition)
    )
    config = config or OracleConfig()
    lo, hi = coalition.span
    width = hi - lo + 1
    if width > 8:
        raise SpanTooLargeError(f"span width {width} exceeds 8")

    myopic = grand_myopic_profile(instance)
    start = instance.b0 if lo == 1 else myopic.d[lo - 2] * instance.node(lo - 1).k
    k_in = span_rates_in(instance, (lo, hi))
    a = instance.a[lo - 1 : hi]
    u = instance.u[lo - 1 : hi]
    b = instance.b[lo - 1 : hi]
    profits = instance.profits[lo - 1 : hi]
    member = np.array([lo + p in coalition for p in range(width)])
    outside_pos = [p for p in range(width) if not member[p]]

    best: Optional[Tuple[float, np.ndarray]] = None
    for pattern in itertools.product(("cap", "sat"), repeat=len(outside_pos)):
        mode = dict(zip(outside_pos, pattern))
        try:
            value, x = _solve_branch(
                start, a, u, b, k_in, profits, member, mode, config
            )
        except _Infeasible:
            continue
        if best is None or value > best[0] + 1e-12:
            best = (value, x)
    if best is None:
        raise NoFeasibleAssignmentError("no outside-node behaviour is feasible")
    plan = DischargePlan(span=(lo, hi), x=tuple(best[1]), start_level=start)
    return OracleResult(value=best[0], plan=plan)


def _solve_branch(start, a, u, b, k_in, profits, member, mode, config):
    width = len(profits)
    x = np.where(member, a, u).astype(float)  # saturating nodes overwritten below
    total = 0.0

    seg_start = 0
    arrive = float(start)
    while seg_start <= width:
        seg_end = seg_start
        while seg_end < width and mode.get(seg_end) != "sat":
            seg_end += 1
        sat_pos = seg_end if seg_end < width else None
        positions = list(range(seg_start, seg_end))
        if positions:
            value, seg_x, c_last = _solve_segment(
                positions, arrive, a, u, b, k_in, profits, member, sat_pos, config
            )
            total += value
            for p, xp in zip(positions, seg_x):
                x[p] = xp
            exit_level = c_last * (k_in[seg_end] if seg_end < width else 1.0)
        else:
            exit_level = arrive
        if sat_pos is None:
            break
        # The saturating node absorbs exactly the slack left at its tolerance.
        x[sat_pos] = b[sat_pos] - exit_level
        if x[sat_pos] < a[sat_pos] - 1e-7 or x[sat_pos] > u[sat_pos] + 1e-7:
            raise _Infeasible
        x[sat_pos] = min(max(x[sat_pos], a[sat_pos]), u[sat_pos])
        arrive = b[sat_pos] * (k_in[sat_pos + 1] if sat_pos + 1 < width else 1.0)
        seg_start = sat_pos + 1
    return total, x


def _segment_bounds(positions, a, u, b, k_in, sat_pos):
    """Effective per-position tolerance uppers plus a lower bound on the
    pollution at the last position (both induced by a saturating successor)."""
    uppers = np.array([b[p] for p in positions])
    lo_end = -np.inf
    if sat_pos is not None:
        k = k_in[sat_pos]
        hi_end = (b[sat_pos] - a[sat_pos]) / k  # node must discharge >= a
        lo_end = (b[sat_pos] - u[sat_pos]) / k  # tolerance binds before the cap
        uppers[-1] = min(uppers[-1], hi_end)
    return uppers, lo_end


def _solve_segment(positions, arrive, a, u, b, k_in, profits, member, sat_pos, config):
    uppers, lo_end = _segment_bounds(positions, a, u, b, k_in, sat_pos)
    seg_k = np.ones(len(positions))
    for idx, p in enumerate(positions):
        if idx > 0:
            seg_k[idx] = k_in[p]

    base_x = np.array(
        [a[p] if member[p] else u[p] for p in positions], dtype=float
    )
    free = [
        idx
        for idx, p in enumerate(positions)
        if member[p] and u[p] > a[p] + 1e-15
    ]
    weights = np.array([1.0 if member[p] else 0.0 for p in positions])
    kinds = np.array(
        [kernels.KIND_CODES[profits[p].kind] for p in positions], dtype=np.int64
    )
    p1 = np.array([profits[p].params[0] for p in positions])
    p2 = np.array(
        [profits[p].params[1] if len(profits[p].params) > 1 else 0.0 for p in positions]
    )

    def profile(x):
        return kernels.forward_profile(x, seg_k, arrive)

    def feasible(x, tol=1e-7):
        c = profile(x)
        return bool(np.all(c <= uppers + tol) and c[-1] >= lo_end - tol)

    # Feasibility screen: the all-minimum fill carries the least load, the
    # forward-maximal fill reaches the largest possible exit level.
    x_max = base_x.copy()
    level = arrive
    for idx, p in enumerate(positions):
        if idx > 0:
            level *= seg_k[idx]
        cap = uppers[idx] - level
        x_max[idx] = min(u[p], cap) if member[p] else base_x[idx]
        x_max[idx] = max(x_max[idx], a[p] if member[p] else base_x[idx])
        level += x_max[idx]
    if np.any(profile(base_x) > uppers + 1e-7):
        raise _Infeasible
    if profile(x_max)[-1] < lo_end - 1e-7:
        raise _Infeasible

    if not free:
        if not feasible(base_x):
            raise _Infeasible
        value = float(
            kernels.batch_objective(base_x[None, :], kinds, p1, p2, weights)[0]
        )
        return value, base_x, float(profile(base_x)[-1])

    incumbent = _sqp_polish(
        positions, free, base_x, x_max, arrive, seg_k, uppers, lo_end,
        a, u, profits, kinds, p1, p2, weights, feasible, profile, config,
    )
    value = float(
        kernels.batch_objective(incumbent[None, :], kinds, p1, p2, weights)[0]
    )
    return value, incumbent, float(profile(incumbent)[-1])


def _sqp_polish(
    positions, free, base_x, x_max, arrive, seg_k, uppers, lo_end,
    a, u, profits, kinds, p1, p2, weights, feasible, profile, config,
):
    from scipy.optimize import LinearConstraint, minimize

    d = len(free)
    abs_pos = [positions[idx] for idx in free]
    lo_box = np.array([a[p] for p in abs_pos])
    hi_box = np.array([u[p] for p in abs_pos])
    # Gradients are sampled strictly inside the box: a power profit has an
    # unbounded derivative at zero, which otherwise feeds the SQP NaNs.
    grad_floor = lo_box + 1e-10 * (hi_box - lo_box)

    # Affine pollution map c = base + A @ x_free over the segment.
    template = base_x.copy()
    zero = template.copy()
    for idx in free:
        zero[idx] = 0.0
    c_base = profile(zero)
    A = np.zeros((len(positions), d))
    for col, idx in enumerate(free):
        probe = zero.copy()
        probe[idx] = 1.0
        A[:, col] = profile(probe) - c_base

    def objective(xf):
        val = 0.0
        grad = np.zeros(d)
        for col, p in enumerate(abs_pos):
            val += profits[p].value(float(xf[col]))
            grad[col] = profits[p].derivative(float(max(xf[col], grad_floor[col])))
        return -val, -grad

    lb = np.full(len(positions), -np.inf)
    lb[-1] = lo_end
    constraint = LinearConstraint(A, lb - c_base, uppers - c_base)

    # Starts stay strictly inside the box so no gradient is sampled on it.
    inset = 1e-6 * (hi_box - lo_box)
    starts = [lo_box + inset]
    starts.append(np.clip(np.array([x_max[idx] for idx in free]), lo_box + inset, hi_box - inset))
    starts.append(0.5 * (lo_box + hi_box))
    rng = np.random.default_rng(12345)
    for _ in range(2):
        starts.append(lo_box + inset + rng.random(d) * (hi_box - lo_box - 2 * inset))

    best_xf = None
    best_val = -np.inf
    for x0 in starts:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(
                objective,
                np.clip(x0, lo_box, hi_box),
                jac=True,
                method="SLSQP",
                bounds=list(zip(lo_box, hi_box)),
                constraints=[constraint],
                options={"maxiter": 200, "ftol": 1e-12},
            )
        if res.x is None:
            continue
        xf = np.clip(res.x, lo_box, hi_box)
        full = template.copy()
        for col, idx in enumerate(free):
            full[idx] = xf[col]
        if feasible(full):
            val = float(
                kernels.batch_objective(full[None, :], kinds, p1, p2, weights)[0]
            )
            if val > best_val:
                best_val = val
                best_xf = xf

    if best_xf is None:
        # Fall back to the forward-maximal fill, then let the grid search work.
        best_xf = np.array([x_max[idx] for idx in free])

    # Shrinking-window grid search around the incumbent: verifies local
    # optimality independently of the SQP and rescues non-converged cases.
    incumbent = template.copy()
    for col, idx in enumerate(free):
        incumbent[idx] = best_xf[col]
    if not feasible(incumbent):
        incumbent = x_max.copy()
    inc_val = float(
        kernels.batch_objective(incumbent[None, :], kinds, p1, p2, weights)[0]
    )

    h0 = (hi_box - lo_box) / config.grid_divisions
    for round_ in range(config.refine_rounds):
        h = h0 / (config.refine_factor ** round_)
        offsets = [np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * h[col] for col in range(d)]
        grids = np.meshgrid(*offsets, indexing="ij")
        cand_free = np.stack([g.ravel() for g in grids], axis=1)
        cand_free += np.array([incumbent[idx] for idx in free])
        np.clip(cand_free, lo_box, hi_box, out=cand_free)
        X = np.tile(incumbent, (cand_free.shape[0], 1))
        for col, idx in enumerate(free):
            X[:, idx] = cand_free[:, col]
        C = kernels.forward_profile_batch(X, seg_k, arrive)
        ok = np.all(C <= uppers + 1e-9, axis=1) & (C[:, -1] >= lo_end - 1e-9)
        if not ok.any():
            continue
        vals = kernels.batch_objective(X[ok], kinds, p1, p2, weights)
        top = int(np.argmax(vals))
        if vals[top] > inc_val + 1e-15:
            inc_val = float(vals[top])
            incumbent = X[ok][top].copy()
    return incumbent
