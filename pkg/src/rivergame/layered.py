"""Balanced-layer greedy solver for consecutive discharge problems.

The problem: maximize the sum of concave node profits ``f_i(x_i)`` over a
contiguous span, subject to box bounds ``a <= x <= u`` and cumulative
pollution tolerances ``c_i(X) <= b_i`` where ``c`` is the forward profile fed
by a fixed arriving level.

The solver starts every node at its basic discharge ``a`` and repeatedly
raises the group of unfrozen nodes whose *weighted marginal benefit*
``W_i * f_i'(x_i)`` is currently maximal (``W_i`` discounts a unit of
discharge by the residual rates it survives).  Group members move together so
their weighted marginals stay equal; the move stops at the first of three
bounds:

* ``sigma1`` -- the group marginal falls to the best marginal outside the
  group, which therefore joins the group next round;
* ``sigma2`` -- a group member reaches its discharge cap and freezes;
* ``sigma3`` -- a downstream tolerance becomes tight, freezing every node up
  to the most downstream tight one (nothing upstream of a tight tolerance can
  ever increase again).

Linear profits have constant marginals, so they cannot balance against
declining ones.  When the max-marginal group contains a linear node, the most
upstream linear member advances alone until a bound triggers: a constant
marginal should soak up shared slack before any equal-marginal declining node
takes it.

Termination needs at most two iterations per node: each round either freezes
a node or permanently grows the active group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import kernels
from .errors import InfeasibleBaselineError
from .hydrology import myopic_profile, pollution_profile, residual_rate, span_rates_in
from .instance import DischargePlan, Instance, POLLUTION_TOL
from .profits import ProfitFunction

__all__ = [
    "SolveResult",
    "OptimalityViolation",
    "amb",
    "solve_sdp",
    "solve_span_problem",
    "SpanProblem",
    "verify_optimality",
    "find_decomposition_points",
]

#: Relative tolerance used to group nodes into the max-marginal layer.
_GROUP_RTOL = 1e-9


@dataclass(frozen=True)
class SpanProblem:
    """A consecutive solve with explicit per-node data.

    ``first`` is the absolute 1-based index of span position 0; ``profits``
    may differ from the instance's (coalition solves substitute priority
    profits for outside nodes).  ``pinned`` maps span positions to discharges
    that are fixed for the whole solve.
    """

    first: int
    b: np.ndarray
    k_in: np.ndarray
    a: np.ndarray
    u: np.ndarray
    profits: Tuple[ProfitFunction, ...]
    start_level: float
    pinned: Dict[int, float] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.profits)


@dataclass(frozen=True)
class SolveResult:
    plan: DischargePlan
    value: float
    iterations: int
    trace: Tuple[dict, ...] = ()


@dataclass(frozen=True)
class OptimalityViolation:
    kind: str
    nodes: Tuple[int, ...]
    detail: str


def amb(instance: Instance, i: int, x: float) -> float:
    """Weighted marginal benefit of node ``i`` at discharge ``x``.

    One unit discharged at ``i`` consumes ``K(1 -> i)`` units of the slack
    every node downstream shares, so marginals are compared after discounting
    by that survival factor.
    """
    return residual_rate(instance, 1, i) * instance.node(i).profit.derivative(x)


def solve_sdp(
    instance: Instance,
    start_level: Optional[float] = None,
    span: Optional[Tuple[int, int]] = None,
    trace: bool = False,
) -> SolveResult:
    """Solve the discharge problem on a consecutive span of the instance.

    Defaults to the whole line fed by ``b0``.  ``start_level`` is the
    pollution mass arriving at the first span node.  Raises
    :class:`InfeasibleBaselineError` when even the all-minimum plan breaks a
    tolerance.
    """
    if span is None:
        span = (1, instance.n)
    lo, hi = span
    instance._check_index(lo)
    instance._check_index(hi)
    if start_level is None:
        start_level = instance.b0 if lo == 1 else None
    if start_level is None:
        raise ValueError("start_level is required for spans not starting at node 1")
    problem = SpanProblem(
        first=lo,
        b=instance.b[lo - 1 : hi].copy(),
        k_in=span_rates_in(instance, span),
        a=instance.a[lo - 1 : hi].copy(),
        u=instance.u[lo - 1 : hi].copy(),
        profits=instance.profits[lo - 1 : hi],
        start_level=float(start_level),
    )
    return solve_span_problem(problem, trace=trace)


def solve_span_problem(problem: SpanProblem, trace: bool = False) -> SolveResult:
    x, iterations, records = _layered_greedy(problem, collect_trace=trace)
    plan = DischargePlan(
        span=(problem.first, problem.first + problem.size - 1),
        x=tuple(x),
        start_level=problem.start_level,
    )
    value = float(sum(f.value(float(v)) for f, v in zip(problem.profits, x)))
    return SolveResult(plan=plan, value=value, iterations=iterations, trace=tuple(records))


# -- engine ------------------------------------------------------------------

def _layered_greedy(problem: SpanProblem, collect_trace: bool = False):
    m = problem.size
    a, u, b, k_in = problem.a, problem.u, problem.b, problem.k_in
    profits = problem.profits
    # W[j]: survival factor from span position 0 to position j.
    W = np.cumprod(k_in)
    W[0] = 1.0
    big = 1.0 + float(np.max(u - a)) if m else 1.0

    x = a.astype(float).copy()
    frozen = np.zeros(m, dtype=bool)
    for pos, val in problem.pinned.items():
        x[pos] = val
        frozen[pos] = True

    c = kernels.forward_profile(x, k_in, problem.start_level)
    bad = np.nonzero(c > b + POLLUTION_TOL)[0]
    if bad.size:
        raise InfeasibleBaselineError(problem.first + int(bad[0]))

    if m == 1 and not problem.pinned:
        # Trivial span: fill the single node to its cap or the tolerance.
        x[0] = min(u[0], b[0] - problem.start_level)
        x[0] = min(max(x[0], a[0]), u[0])
        return x, 0, []

    records: List[dict] = []
    iterations = 0
    max_iterations = 2 * m + 4

    def deriv(j: int) -> float:
        return profits[j].derivative(x[j])

    def g(j: int, level: float) -> float:
        return profits[j].inverse_derivative(level / W[j])

    while not frozen.all():
        iterations += 1
        if iterations > max_iterations:
            raise RuntimeError("layer greedy failed to terminate")

        ambs = np.array([-math.inf if frozen[j] else W[j] * deriv(j) for j in range(m)])
        top = float(np.max(ambs))
        if top <= 1e-15:
            # Remaining marginals are zero: more discharge adds no profit.
            frozen[:] = True
            break
        if math.isinf(top):
            layer = [j for j in range(m) if not frozen[j] and math.isinf(ambs[j])]
        else:
            layer = [
                j
                for j in range(m)
                if not frozen[j] and ambs[j] >= top - _GROUP_RTOL * abs(top)
            ]
        outside = [j for j in range(m) if not frozen[j] and j not in layer]

        linear_members = [j for j in layer if profits[j].is_linear]
        if linear_members:
            delta, cause, info = _advance_single(
                min(linear_members), x, c, b, u, W, outside, ambs, big
            )
        else:
            delta, cause, info = _advance_layer(
                layer, x, c, b, u, W, profits, outside, ambs, big, g
            )

        c = kernels.forward_profile(x, k_in, problem.start_level)

        if cause == "sigma2":
            frozen[info["cap_node"]] = True
        elif cause == "sigma3":
            frozen[: info["tight_node"] + 1] = True

        if collect_trace:
            spread = _layer_spread(layer, x, W, profits)
            records.append(
                {
                    "layer": [problem.first + j for j in layer],
                    "sigma1": info["sigma1"],
                    "sigma2": info["sigma2"],
                    "sigma3": info["sigma3"],
                    "delta": delta,
                    "cause": cause,
                    "amb_spread": spread,
                    "frozen": [problem.first + j for j in range(m) if frozen[j]],
                }
            )

        if cause == "sigma1" and delta <= 0.0:
            raise RuntimeError("layer greedy stalled without progress")

    np.clip(x, a, u, out=x)
    return x, iterations, records


def _advance_single(adv, x, c, b, u, W, outside, ambs, big):
    """Raise one node (constant marginal) until a cap or a tolerance binds."""
    sigma1 = big  # a constant marginal never declines to the outside level
    sigma2 = u[adv] - x[adv]
    ratios = W[adv:] / W[adv]
    slacks = b[adv:] - c[adv:]
    room = slacks / ratios
    sigma3 = float(np.min(room))
    tight_off = int(np.max(np.nonzero(room <= sigma3 + 1e-9 * max(1.0, abs(sigma3)))[0]))

    delta = max(0.0, min(sigma1, sigma2, sigma3))
    x[adv] += delta
    tol = 1e-12 * max(1.0, delta)
    info = {"sigma1": sigma1, "sigma2": sigma2, "sigma3": sigma3}
    if sigma2 <= delta + tol:
        x[adv] = u[adv]
        info["cap_node"] = adv
        return delta, "sigma2", info
    info["tight_node"] = adv + tight_off
    return delta, "sigma3", info


def _advance_layer(layer, x, c, b, u, W, profits, outside, ambs, big, g):
    """Raise a balanced group of declining-marginal nodes together."""
    alpha = layer[0]

    def level_at(t: float) -> float:
        return W[alpha] * profits[alpha].derivative(x[alpha] + t)

    if outside:
        xi = float(np.max(ambs[outside]))
        sigma1 = g(alpha, xi) - x[alpha]
    else:
        xi = None
        sigma1 = big
    cap_levels = [W[j] * profits[j].derivative(u[j]) for j in layer]
    cap_level = max(cap_levels)
    cap_node = layer[int(np.argmax(cap_levels))]
    sigma2 = g(alpha, cap_level) - x[alpha]

    def increments(t: float) -> np.ndarray:
        level = level_at(t)
        return np.array([max(0.0, g(j, level) - x[j]) for j in layer])

    def load(j_constraint: int, inc: np.ndarray) -> float:
        total = 0.0
        for pos, j in enumerate(layer):
            if j <= j_constraint:
                total += (W[j_constraint] / W[j]) * inc[pos]
        return total

    # sigma3: a tolerance can only matter below the bound already set by
    # sigma1/sigma2, so scan with a shrinking cap and solve only when the cap
    # itself is infeasible for a constraint.
    all_quadratic = all(profits[j].kind == "quadratic" for j in layer)
    inc_zero = increments(0.0)
    inc_one = increments(1.0) if all_quadratic else None
    sigma3 = max(0.0, min(sigma1, sigma2))
    binding = False
    for j in range(alpha, len(b)):
        slack = b[j] - c[j]
        if load(j, increments(sigma3)) <= slack + POLLUTION_TOL:
            continue
        if all_quadratic:
            base = load(j, inc_zero)
            rate = load(j, inc_one) - base
            t_j = sigma3 if rate <= 1e-15 else (slack - base) / rate
        else:
            t_j = _solve_increasing(lambda t: load(j, increments(t)), slack, 0.0, sigma3)
        sigma3 = max(0.0, min(t_j, sigma3))
        binding = True

    delta = max(0.0, min(sigma1, sigma2, sigma3))
    tol = 1e-12 * max(1.0, delta)
    info = {"sigma1": sigma1, "sigma2": sigma2, "sigma3": sigma3 if binding else None}

    if sigma2 <= delta + tol:
        _apply_level(layer, x, u, g, cap_level)
        x[cap_node] = u[cap_node]
        info["cap_node"] = cap_node
        return delta, "sigma2", info
    if binding and sigma3 <= delta + tol:
        # Freeze up to the most downstream tolerance the move makes tight.
        inc_d = increments(delta)
        tight_node = alpha
        for j in range(alpha, len(b)):
            if load(j, inc_d) >= (b[j] - c[j]) - POLLUTION_TOL:
                tight_node = j
        x[alpha] += delta
        level = W[alpha] * profits[alpha].derivative(x[alpha])
        _apply_level(layer, x, u, g, level, skip=alpha)
        info["tight_node"] = tight_node
        return delta, "sigma3", info
    # sigma1: drop the group marginal exactly to the best outside one.
    _apply_level(layer, x, u, g, xi)
    return delta, "sigma1", info


def _apply_level(layer, x, u, g, level, skip=None):
    for j in layer:
        if j == skip:
            continue
        target = g(j, level)
        if math.isfinite(target):
            x[j] = min(max(target, x[j]), u[j])


def _solve_increasing(fn, target, lo, hi, iters: int = 80) -> float:
    """Smallest ``t`` in ``[lo, hi]`` with ``fn(t) = target`` (fn increasing)."""
    f_lo = fn(lo)
    if f_lo >= target:
        return lo
    if fn(hi) <= target:
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def _layer_spread(layer, x, W, profits) -> float:
    vals = [W[j] * profits[j].derivative(x[j]) for j in layer]
    finite = [v for v in vals if math.isfinite(v)]
    if len(finite) < 2:
        return 0.0
    top = max(abs(v) for v in finite)
    return (max(finite) - min(finite)) / max(top, 1.0)


# -- optimality checks --------------------------------------------------------

def verify_optimality(plan: DischargePlan, instance: Instance) -> List[OptimalityViolation]:
    """Check the two necessary optimality conditions of a consecutive solve.

    Returns a list of structured violations; an optimal plan returns ``[]``.
    Never raises: diagnosing a bad plan is the whole point.

    * Pollution: every level stays at or below its myopic bound, and the last
      span node sits exactly on it.
    * Adjacent marginals: for each neighbouring pair, whichever side has the
      strictly larger weighted marginal must be pinned by a box bound or (for
      the upstream side) by a tight myopic level -- otherwise shifting mass
      toward the larger marginal would improve the plan.
    """
    violations: List[OptimalityViolation] = []
    lo, hi = plan.span
    c = pollution_profile(plan, instance)
    prof = myopic_profile(instance, plan.start_level, plan.span)
    d = np.array(prof.d)
    tol = POLLUTION_TOL

    for j in range(hi - lo):
        if c[j] > d[j] + tol:
            violations.append(
                OptimalityViolation(
                    "pollution-above-myopic", (lo + j,), f"c={c[j]!r} d={d[j]!r}"
                )
            )
    if abs(c[hi - lo] - d[hi - lo]) > tol:
        violations.append(
            OptimalityViolation(
                "last-node-not-myopic", (hi,), f"c={c[hi - lo]!r} d={d[hi - lo]!r}"
            )
        )

    for j in range(hi - lo):
        i_abs = lo + j
        nd_i = instance.node(i_abs)
        nd_next = instance.node(i_abs + 1)
        xi, xnext = plan.x[j], plan.x[j + 1]
        left = nd_i.profit.derivative(xi)
        right = nd_i.k * nd_next.profit.derivative(xnext)
        if left < right - tol:
            if not (abs(xi - nd_i.a) <= tol or abs(xnext - nd_next.u) <= tol):
                violations.append(
                    OptimalityViolation(
                        "downstream-marginal-dominates",
                        (i_abs, i_abs + 1),
                        f"f'({xi})={left!r} < k*f'({xnext})={right!r} "
                        "but upstream not at basic level and downstream not capped",
                    )
                )
        elif left > right + tol:
            if not (
                abs(c[j] - d[j]) <= tol
                or abs(xi - nd_i.u) <= tol
                or abs(xnext - nd_next.a) <= tol
            ):
                violations.append(
                    OptimalityViolation(
                        "upstream-marginal-dominates",
                        (i_abs, i_abs + 1),
                        f"f'({xi})={left!r} > k*f'({xnext})={right!r} "
                        "but no bound pins the pair",
                    )
                )
    return violations


def find_decomposition_points(plan: DischargePlan, instance: Instance) -> List[int]:
    """Nodes before the span end whose pollution sits exactly on its myopic bound.

    The plan restricted to the span up to such a node solves that sub-span's
    problem on its own, so solves may be split there.
    """
    lo, hi = plan.span
    c = pollution_profile(plan, instance)
    d = np.array(myopic_profile(instance, plan.start_level, plan.span).d)
    return [lo + j for j in range(hi - lo) if abs(c[j] - d[j]) <= POLLUTION_TOL]
