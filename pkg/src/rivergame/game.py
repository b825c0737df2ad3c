"""Full characteristic tables, quota-transfer ledgers and structure checks.

Cooperation between nodes is measured as transferred discharge quota: when a
downstream node joins a coalition, upstream members may cut their discharge
so the joiner (and any free-riding bystander in between) can raise theirs.
The ledger attributes each such increase to its upstream donors by re-solving
small pinned problems with the receiver held at its old and new levels.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .coalitions import CoalitionSolution, CoalitionSolver, w_fixed
from .errors import InstanceTooLargeError, PreconditionNotMetError
from .instance import Coalition, Instance

__all__ = [
    "GameTable",
    "CooperationLedger",
    "build_table",
    "cooperation_quantities",
    "free_riders",
    "check_prop3",
    "Prop3Result",
    "check_directional_convexity",
    "check_convexity",
    "check_superadditivity",
    "PairViolation",
    "StructureReport",
]

_TOL = 1e-9


@dataclass(frozen=True)
class GameTable:
    """Characteristic value (and optimal plan) of every nonempty coalition."""

    instance: Instance
    values: Dict[Tuple[int, ...], float]
    solutions: Dict[Tuple[int, ...], CoalitionSolution]

    @property
    def n(self) -> int:
        return self.instance.n

    def value(self, members: Iterable[int]) -> float:
        key = tuple(sorted(int(i) for i in members))
        if not key:
            return 0.0
        return self.values[key]

    def solution(self, members: Iterable[int]) -> CoalitionSolution:
        return self.solutions[tuple(sorted(int(i) for i in members))]

    def grand_value(self) -> float:
        return self.values[tuple(range(1, self.n + 1))]

    def coalitions(self) -> List[Tuple[int, ...]]:
        return list(self.values.keys())

    def to_json(self) -> dict:
        return {",".join(map(str, key)): val for key, val in self.values.items()}


def build_table(instance: Instance, n_cap: int = 16) -> GameTable:
    """Solve all ``2**n - 1`` coalitions, reusing prefix solves throughout."""
    n = instance.n
    if n > n_cap:
        raise InstanceTooLargeError(f"n={n} exceeds the table cap {n_cap}")
    solver = CoalitionSolver(instance)
    values: Dict[Tuple[int, ...], float] = {}
    solutions: Dict[Tuple[int, ...], CoalitionSolution] = {}
    for mask in range(1, 1 << n):
        members = tuple(i + 1 for i in range(n) if mask >> i & 1)
        sol = solver.value(Coalition(members))
        values[members] = sol.value
        solutions[members] = sol
    return GameTable(instance=instance, values=values, solutions=solutions)


# -- quota transfers ----------------------------------------------------------

@dataclass(frozen=True)
class CooperationLedger:
    """Quota transfers ``delta[(donor, receiver)]`` accumulated while the
    coalition forms upstream-to-downstream, plus the prefix chain walked."""

    coalition: Coalition
    delta: Dict[Tuple[int, int], float]
    chain: Tuple[Coalition, ...]
    received: Dict[int, float] = field(default_factory=dict)

    def nonzero(self, tol: float = _TOL) -> Dict[Tuple[int, int], float]:
        return {pair: v for pair, v in self.delta.items() if v > tol}

    def get(self, donor: int, receiver: int) -> float:
        return self.delta.get((donor, receiver), 0.0)


def _extended_plan(instance: Instance, solver: CoalitionSolver, sol: CoalitionSolution) -> np.ndarray:
    """Coalition plan continued by myopic discharges outside its span."""
    x = np.array(solver.myopic.theta)
    lo, hi = sol.plan.span
    x[lo - 1 : hi] = sol.plan.x
    return x


def cooperation_quantities(
    instance: Instance,
    coalition: Coalition | Iterable[int],
    solver: Optional[CoalitionSolver] = None,
) -> CooperationLedger:
    """Attribute discharge increases to upstream donors along the formation chain.

    The chain starts from the head member alone and adds members downstream
    one at a time.  After each arrival, a pair ``(i1, i2)`` keeps its previous
    transfer unless ``i1`` cut its discharge while ``i2`` raised its own; in
    that case the transfer is the drop in ``i1``'s best response between two
    pinned solves that differ only in whether ``i2`` sits at its old or new
    level.  Donors that cut their discharge stay capped at their previous
    levels in those solves; everything at or below its old level is pinned.
    """
    coalition = coalition if isinstance(coalition, Coalition) else Coalition.of(coalition)
    if coalition.size < 2:
        raise ValueError("cooperation needs at least two members")
    solver = solver or CoalitionSolver(instance)

    chain = [Coalition(coalition.members[: k + 1]) for k in range(coalition.size)]
    delta: Dict[Tuple[int, int], float] = {}
    received: Dict[int, float] = {}

    old_plan = _extended_plan(instance, solver, solver.value(chain[0]))
    for step in range(1, len(chain)):
        prefix = chain[step]
        new_plan = _extended_plan(instance, solver, solver.value(prefix))
        tail = prefix.tail
        for i2 in range(prefix.head + 1, tail + 1):
            if new_plan[i2 - 1] > old_plan[i2 - 1] + _TOL:
                received[i2] = received.get(i2, 0.0) + (new_plan[i2 - 1] - old_plan[i2 - 1])
        updated: Dict[Tuple[int, int], float] = {}
        for i1 in prefix.members:
            for i2 in range(i1 + 1, tail + 1):
                prior = delta.get((i1, i2), 0.0)
                if new_plan[i1 - 1] >= old_plan[i1 - 1] - _TOL:
                    updated[(i1, i2)] = prior
                elif new_plan[i2 - 1] <= old_plan[i2 - 1] + _TOL:
                    updated[(i1, i2)] = prior
                else:
                    updated[(i1, i2)] = _attributed_transfer(
                        instance, solver, prefix, i1, i2, new_plan, old_plan
                    )
        delta = updated
        old_plan = new_plan

    return CooperationLedger(
        coalition=coalition, delta=delta, chain=tuple(chain), received=received
    )


def _attributed_transfer(instance, solver, prefix, i1, i2, new_plan, old_plan) -> float:
    lo, hi = prefix.span
    members = set(prefix.members)
    donors = [
        j for j in prefix.members if j < i2 and new_plan[j - 1] < old_plan[j - 1] - _TOL
    ]
    fixed: Dict[int, float] = {}
    for j in range(lo, hi + 1):
        if j == i2 or j in donors:
            continue
        fixed[j] = float(new_plan[j - 1] if j < i2 else old_plan[j - 1])
    caps = {j: float(old_plan[j - 1]) for j in donors}

    with_old = w_fixed(
        instance, prefix, {**fixed, i2: float(old_plan[i2 - 1])}, upper=caps, solver=solver
    )
    with_new = w_fixed(
        instance, prefix, {**fixed, i2: float(new_plan[i2 - 1])}, upper=caps, solver=solver
    )
    return with_old.plan.discharge(i1) - with_new.plan.discharge(i1)


# -- free riders ---------------------------------------------------------------

def free_riders(
    instance: Instance,
    coalition: Coalition | Iterable[int],
    solver: Optional[CoalitionSolver] = None,
) -> set:
    """Outside span nodes discharging above their myopic level under ``S``."""
    coalition = coalition if isinstance(coalition, Coalition) else Coalition.of(coalition)
    solver = solver or CoalitionSolver(instance)
    sol = solver.value(coalition)
    riders = set()
    for i in coalition.outside_nodes:
        if sol.plan.discharge(i) > solver.theta(i) + _TOL:
            riders.add(i)
    return riders


# -- structural checks ----------------------------------------------------------

@dataclass(frozen=True)
class Prop3Result:
    holds: bool
    lhs: float
    rhs: float
    gap_nodes: Tuple[int, ...]


def check_prop3(
    instance: Instance,
    s1: Coalition | Iterable[int],
    s2: Coalition | Iterable[int],
    solver: Optional[CoalitionSolver] = None,
) -> Prop3Result:
    """Absorbing the free-ride gap between two gaining halves pays for itself.

    With ``S = S1 | S2`` (``S1`` strictly upstream) and ``v(S) > v(S1) + v(S2)``,
    the coalition extended by every node strictly between the halves is worth
    at least ``v(S)`` plus those nodes' capped profits.
    """
    s1 = s1 if isinstance(s1, Coalition) else Coalition.of(s1)
    s2 = s2 if isinstance(s2, Coalition) else Coalition.of(s2)
    if s1.tail >= s2.head:
        raise ValueError("first part must lie strictly upstream of the second")
    solver = solver or CoalitionSolver(instance)
    union = Coalition.of(s1.members + s2.members)
    v_union = solver.value(union).value
    v_split = solver.value(s1).value + solver.value(s2).value
    if not v_union > v_split + _TOL:
        raise PreconditionNotMetError(
            f"no strict gain: v(S)={v_union!r} vs v(S1)+v(S2)={v_split!r}"
        )
    gap = tuple(range(s1.tail + 1, s2.head))
    lhs = v_union + sum(instance.node(i).profit.value(instance.node(i).u) for i in gap)
    rhs = solver.value(Coalition.of(union.members + gap)).value
    return Prop3Result(holds=lhs <= rhs + _TOL, lhs=lhs, rhs=rhs, gap_nodes=gap)


@dataclass(frozen=True)
class PairViolation:
    s: Tuple[int, ...]
    t: Tuple[int, ...]
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs


@dataclass(frozen=True)
class StructureReport:
    name: str
    holds: bool
    violations: Tuple[PairViolation, ...]
    pairs_checked: int


def _all_coalitions(n: int) -> List[Tuple[int, ...]]:
    out = []
    for size in range(1, n + 1):
        out.extend(itertools.combinations(range(1, n + 1), size))
    return out


def check_directional_convexity(table: GameTable, pi: Optional[Sequence[int]] = None) -> StructureReport:
    """Supermodularity restricted to pairs ordered consistently with ``pi``.

    ``pi[i-1]`` is player ``i``'s rank.  A pair ``(S, T)`` is tested when every
    member of ``T - S`` ranks above all of ``S & T`` and the first-ranked member
    of ``S - T`` ranks above the first-ranked member of ``S & T``; conditions
    over empty sets hold vacuously, so disjoint pairs reduce to
    superadditivity.
    """
    n = table.n
    if pi is None:
        pi = tuple(range(1, n + 1))
    rank = {i + 1: int(pi[i]) for i in range(n)}
    coalitions = _all_coalitions(n)
    violations = []
    checked = 0
    for s, t in itertools.permutations(coalitions, 2):
        s_set, t_set = set(s), set(t)
        inter = s_set & t_set
        t_minus = t_set - s_set
        s_minus = s_set - t_set
        cond1 = not t_minus or not inter or min(rank[i] for i in t_minus) > max(
            rank[i] for i in inter
        )
        cond2 = not s_minus or not inter or min(rank[i] for i in s_minus) > min(
            rank[i] for i in inter
        )
        if not (cond1 and cond2):
            continue
        checked += 1
        lhs = table.value(s) + table.value(t)
        rhs = table.value(s_set | t_set) + table.value(inter)
        if lhs > rhs + _TOL:
            violations.append(PairViolation(s, t, lhs, rhs))
    return StructureReport(
        name="directional-convexity",
        holds=not violations,
        violations=tuple(violations),
        pairs_checked=checked,
    )


def check_convexity(table: GameTable) -> StructureReport:
    """Unrestricted supermodularity over all coalition pairs."""
    coalitions = _all_coalitions(table.n)
    violations = []
    checked = 0
    for s, t in itertools.combinations(coalitions, 2):
        s_set, t_set = set(s), set(t)
        checked += 1
        lhs = table.value(s) + table.value(t)
        rhs = table.value(s_set | t_set) + table.value(s_set & t_set)
        if lhs > rhs + _TOL:
            violations.append(PairViolation(s, t, lhs, rhs))
    return StructureReport(
        name="convexity", holds=not violations, violations=tuple(violations), pairs_checked=checked
    )


def check_superadditivity(table: GameTable) -> StructureReport:
    """``v(S | T) >= v(S) + v(T)`` over all disjoint pairs."""
    coalitions = _all_coalitions(table.n)
    violations = []
    checked = 0
    for s, t in itertools.combinations(coalitions, 2):
        s_set, t_set = set(s), set(t)
        if s_set & t_set:
            continue
        checked += 1
        lhs = table.value(s) + table.value(t)
        rhs = table.value(s_set | t_set)
        if lhs > rhs + _TOL:
            violations.append(PairViolation(s, t, lhs, rhs))
    return StructureReport(
        name="superadditivity",
        holds=not violations,
        violations=tuple(violations),
        pairs_checked=checked,
    )
