"""Characteristic values for arbitrary coalitions.

A coalition ``S`` occupies the span between its head and tail.  Nodes above
the head discharge myopically, so the span is fed by the myopic level of the
node right above it.  Outside nodes inside the span discharge selfishly: at
the optimum each sits at its cap or exactly on its myopic discharge.

Two building blocks combine into ``v(S)``:

* the *priority program* ``v_prime``: solve the consecutive span with every
  outside node given a steep linear profit, so outside nodes soak up capacity
  first; only member profits count toward the value.  This equals ``v(S)``
  whenever all outside nodes reach their caps.
* the *split recursion*: cut the coalition's consecutive partition after some
  part, value the left side recursively and the right side with the priority
  program, and let nodes in the gap discharge myopically.  ``v(S)`` is the
  best of the priority program and all such cuts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

from .errors import InfeasibleBaselineError, InfeasibleFixedAssignmentError
from .hydrology import grand_myopic_profile, span_rates_in
from .instance import Coalition, DischargePlan, Instance, POLLUTION_TOL, consecutive_partition
from .layered import SpanProblem, solve_span_problem
from .profits import linear as linear_profit

__all__ = [
    "CoalitionSolution",
    "WFixedResult",
    "CoalitionSolver",
    "v_prime",
    "coalition_value",
    "w_fixed",
]

#: Offset (relative to u - a) used when probing initial marginals; keeps the
#: probe inside the domain even for profits whose derivative diverges at 0.
_PROBE = 1e-10


@dataclass(frozen=True)
class CoalitionSolution:
    """Optimal plan over a coalition's span plus its characteristic value.

    The plan includes discharges of outside span nodes.  ``decomposition``
    lists the nodes after which the split recursion cut the problem, upstream
    first (empty when the priority program already won).  ``outside_at_cap``
    records whether every outside node ended exactly at its cap, the case in
    which the priority program alone is already exact.
    """

    coalition: Coalition
    plan: DischargePlan
    value: float
    decomposition: Tuple[int, ...] = ()
    iterations: int = 0
    outside_at_cap: bool = False


@dataclass(frozen=True)
class WFixedResult:
    value: float
    plan: DischargePlan


class CoalitionSolver:
    """Shared caches for coalition solves on one instance.

    Values and priority-program results are memoized by coalition bitmask, so
    full-table builds reuse every prefix solved along the way.  The caches are
    only mutated through :meth:`value` / :meth:`v_prime`; use one solver per
    thread or guard calls externally when parallelizing.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self.myopic = grand_myopic_profile(instance)
        self._values: Dict[int, CoalitionSolution] = {}
        self._priority: Dict[int, CoalitionSolution] = {}

    def start_level(self, head: int) -> float:
        """Pollution arriving at ``head`` when everything above is myopic."""
        if head == 1:
            return self.instance.b0
        return self.myopic.d[head - 2] * self.instance.node(head - 1).k

    def theta(self, i: int) -> float:
        return self.myopic.theta[i - 1]

    # -- priority program -----------------------------------------------------

    def v_prime(self, coalition: Coalition | Iterable[int]) -> CoalitionSolution:
        coalition = _as_coalition(coalition)
        key = coalition.bitmask()
        hit = self._priority.get(key)
        if hit is None:
            hit = self._solve_priority(coalition)
            self._priority[key] = hit
        return hit

    def _solve_priority(self, coalition: Coalition) -> CoalitionSolution:
        inst = self.instance
        lo, hi = coalition.span
        members = set(coalition.members)
        k_in = span_rates_in(inst, (lo, hi))
        W = np.cumprod(k_in)
        W[0] = 1.0
        a = inst.a[lo - 1 : hi].copy()
        u = inst.u[lo - 1 : hi].copy()

        profits = list(inst.profits[lo - 1 : hi])
        outside_pos = [i - lo for i in coalition.outside_nodes]
        if outside_pos:
            # Outside nodes need strictly dominated-by-none priority: their
            # weighted marginal must exceed every member marginal anywhere, so
            # scale the slope by the smallest survival factor among them.
            top = 0.0
            for i in coalition.members:
                pos = i - lo
                if u[pos] <= a[pos]:
                    continue
                probe = a[pos] + _PROBE * (u[pos] - a[pos])
                top = max(top, W[pos] * profits[pos].derivative(probe))
            beta = (1.0 + top) / float(np.min(W[outside_pos]))
            for pos in outside_pos:
                profits[pos] = linear_profit(beta)

        problem = SpanProblem(
            first=lo,
            b=inst.b[lo - 1 : hi].copy(),
            k_in=k_in,
            a=a,
            u=u,
            profits=tuple(profits),
            start_level=self.start_level(lo),
        )
        result = solve_span_problem(problem)
        value = sum(
            inst.node(i).profit.value(result.plan.discharge(i)) for i in coalition.members
        )
        return CoalitionSolution(
            coalition=coalition,
            plan=result.plan,
            value=value,
            decomposition=(),
            iterations=result.iterations,
            outside_at_cap=self._all_outside_at_cap(coalition, result.plan),
        )

    def _all_outside_at_cap(self, coalition: Coalition, plan: DischargePlan) -> bool:
        return all(
            abs(plan.discharge(i) - self.instance.node(i).u) <= POLLUTION_TOL
            for i in coalition.outside_nodes
        )

    # -- characteristic value ---------------------------------------------------

    def value(self, coalition: Coalition | Iterable[int]) -> CoalitionSolution:
        coalition = _as_coalition(coalition)
        key = coalition.bitmask()
        hit = self._values.get(key)
        if hit is None:
            hit = self._solve_value(coalition)
            self._values[key] = hit
        return hit

    def _solve_value(self, coalition: Coalition) -> CoalitionSolution:
        parts = consecutive_partition(coalition)
        best = self.v_prime(coalition)
        for cut in range(1, len(parts)):
            left_members = tuple(i for part in parts[:cut] for i in part.members)
            right_members = tuple(i for part in parts[cut:] for i in part.members)
            left = self.value(Coalition(left_members))
            right = self.v_prime(Coalition(right_members))
            if left.value + right.value > best.value:
                best = self._combine(coalition, left, right)
        return best

    def _combine(
        self, coalition: Coalition, left: CoalitionSolution, right: CoalitionSolution
    ) -> CoalitionSolution:
        lo, hi = coalition.span
        left_hi = left.plan.span[1]
        right_lo = right.plan.span[0]
        x = list(left.plan.x)
        for gap_node in range(left_hi + 1, right_lo):
            x.append(self.theta(gap_node))
        x.extend(right.plan.x)
        plan = DischargePlan(span=(lo, hi), x=tuple(x), start_level=left.plan.start_level)
        return CoalitionSolution(
            coalition=coalition,
            plan=plan,
            value=left.value + right.value,
            decomposition=left.decomposition + (left_hi,),
            iterations=left.iterations + right.iterations,
            outside_at_cap=self._all_outside_at_cap(coalition, plan),
        )


def _as_coalition(members: Coalition | Iterable[int]) -> Coalition:
    return members if isinstance(members, Coalition) else Coalition.of(members)


def v_prime(instance: Instance, coalition: Coalition | Iterable[int]) -> CoalitionSolution:
    return CoalitionSolver(instance).v_prime(coalition)


def coalition_value(
    instance: Instance,
    coalition: Coalition | Iterable[int],
    solver: Optional[CoalitionSolver] = None,
) -> CoalitionSolution:
    solver = solver or CoalitionSolver(instance)
    return solver.value(coalition)


def w_fixed(
    instance: Instance,
    coalition: Coalition | Iterable[int],
    fixed: Mapping[int, float],
    upper: Optional[Mapping[int, float]] = None,
    solver: Optional[CoalitionSolver] = None,
) -> WFixedResult:
    """Best member profit when some span nodes are pinned.

    ``fixed`` maps absolute node ids to pinned discharges and must cover every
    outside node of the span; remaining members optimize freely.  ``upper``
    optionally tightens the cap of free members (used when attributing quota
    transfers, where a donor may not exceed what it previously discharged).

    Raises :class:`InfeasibleFixedAssignmentError` when the pins leave no
    feasible completion.
    """
    coalition = _as_coalition(coalition)
    solver = solver or CoalitionSolver(instance)
    lo, hi = coalition.span
    members = set(coalition.members)
    for i in fixed:
        if not lo <= i <= hi:
            raise ValueError(f"fixed node {i} outside span {coalition.span}")
    missing = [i for i in coalition.outside_nodes if i not in fixed]
    if missing:
        raise ValueError(f"outside nodes must be pinned, missing {missing}")

    a = instance.a[lo - 1 : hi].copy()
    u = instance.u[lo - 1 : hi].copy()
    if upper:
        for i, cap in upper.items():
            if i in fixed or i not in members:
                raise ValueError(f"cap override only applies to free members, got {i}")
            pos = i - lo
            u[pos] = min(u[pos], max(float(cap), a[pos]))
    pinned = {i - lo: float(v) for i, v in fixed.items()}

    problem = SpanProblem(
        first=lo,
        b=instance.b[lo - 1 : hi].copy(),
        k_in=span_rates_in(instance, (lo, hi)),
        a=a,
        u=u,
        profits=instance.profits[lo - 1 : hi],
        start_level=solver.start_level(lo),
        pinned=pinned,
    )
    try:
        result = solve_span_problem(problem)
    except InfeasibleBaselineError as exc:
        raise InfeasibleFixedAssignmentError(str(exc)) from exc
    value = sum(
        instance.node(i).profit.value(result.plan.discharge(i)) for i in coalition.members
    )
    return WFixedResult(value=value, plan=result.plan)
