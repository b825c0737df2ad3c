"""Core allocations: membership checks, constructive vertices, least core.

Budget-balanced payoff vectors that no coalition can improve upon.  Three
producers are implemented:

* the downstream incremental allocation, paying each node its marginal
  contribution to the prefix of everyone upstream;
* the joining-order vertices: rearrange the upstream-to-downstream order by a
  binary vector, then pay marginal contributions along the rearranged order;
* the least-core linear program, which also serves as a constructive
  emptiness certificate (its optimal excess is nonpositive exactly when the
  core is nonempty).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InstanceTooLargeError, InvalidPsiError
from .game import GameTable
from .simplex import solve_lp

__all__ = [
    "Allocation",
    "PsiVector",
    "CoreMembershipReport",
    "downstream_incremental",
    "rearranged_permutation",
    "joining_order",
    "psi_vertex",
    "enumerate_psi_vectors",
    "core_membership",
    "least_core",
]

_TOL = 1e-9


@dataclass(frozen=True)
class Allocation:
    """Per-player payoffs with a record of how they were produced."""

    payoffs: Tuple[float, ...]
    provenance: str  # "downstream-incremental", "psi-vertex", "lp" or "user"
    psi: Optional[Tuple[int, ...]] = None

    @property
    def total(self) -> float:
        return float(sum(self.payoffs))

    def payoff(self, i: int) -> float:
        return self.payoffs[i - 1]

    def coalition_payoff(self, members: Iterable[int]) -> float:
        return float(sum(self.payoffs[i - 1] for i in members))


@dataclass(frozen=True)
class PsiVector:
    """Binary rearrangement vector; first and last entries must be 0."""

    bits: Tuple[int, ...]

    def __post_init__(self) -> None:
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise InvalidPsiError("empty vector")
        if any(b not in (0, 1) for b in bits):
            raise InvalidPsiError("entries must be 0 or 1")
        if bits[0] != 0 or bits[-1] != 0:
            raise InvalidPsiError("first and last entries must be 0")
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return len(self.bits)


def downstream_incremental(table: GameTable) -> Allocation:
    """Pay node ``i`` its marginal contribution to the prefix ``[1..i-1]``."""
    n = table.n
    payoffs = []
    previous = 0.0
    for i in range(1, n + 1):
        current = table.value(range(1, i + 1))
        payoffs.append(current - previous)
        previous = current
    return Allocation(tuple(payoffs), "downstream-incremental")


def _identity(n: int) -> Tuple[int, ...]:
    return tuple(range(1, n + 1))


def rearranged_permutation(
    psi: PsiVector | Sequence[int], pi: Optional[Sequence[int]] = None
) -> Tuple[int, ...]:
    """Rearrange ``pi`` by ``psi``; returns the new rank of each player.

    ``pi[i-1]`` is player ``i``'s rank.  The joiner at position ``j`` of the
    rearranged order is the player ranked ``j+1`` when ``psi[j] = 1``, and
    otherwise the player ranked one past the previous position with a zero
    bit (position 0 counting as rank 0).  The all-zero vector reproduces
    ``pi``.
    """
    psi = psi if isinstance(psi, PsiVector) else PsiVector(tuple(psi))
    n = psi.n
    if pi is None:
        pi = _identity(n)
    if sorted(pi) != list(range(1, n + 1)):
        raise ValueError("pi must be a permutation of ranks 1..n")
    player_at_rank = {rank: i + 1 for i, rank in enumerate(pi)}

    joiners = []
    for j in range(1, n + 1):
        if psi.bits[j - 1] == 1:
            joiners.append(player_at_rank[j + 1])
        else:
            last_zero = max((m for m in range(1, j) if psi.bits[m - 1] == 0), default=0)
            joiners.append(player_at_rank[last_zero + 1])
    if len(set(joiners)) != n:
        raise InvalidPsiError(f"rearrangement is not a bijection: {joiners}")
    ranks = [0] * n
    for position, player in enumerate(joiners, start=1):
        ranks[player - 1] = position
    return tuple(ranks)


def joining_order(pi: Sequence[int]) -> Tuple[int, ...]:
    """Players sorted by rank: the order in which they join the coalition."""
    return tuple(sorted(range(1, len(pi) + 1), key=lambda i: pi[i - 1]))


def enumerate_psi_vectors(n: int) -> List[PsiVector]:
    """All ``2**(n-2)`` admissible vectors (just the zero vector for n <= 2)."""
    if n == 1:
        return [PsiVector((0,))]
    out = []
    for inner in itertools.product((0, 1), repeat=max(0, n - 2)):
        out.append(PsiVector((0, *inner, 0)))
    return out


def psi_vertex(
    table: GameTable,
    psi: PsiVector | Sequence[int],
    pi: Optional[Sequence[int]] = None,
) -> Allocation:
    """Marginal-contribution payoffs along the rearranged joining order."""
    psi = psi if isinstance(psi, PsiVector) else PsiVector(tuple(psi))
    if psi.n != table.n:
        raise InvalidPsiError(f"vector length {psi.n} does not match n={table.n}")
    ranks = rearranged_permutation(psi, pi)
    order = joining_order(ranks)
    payoffs = [0.0] * table.n
    previous = 0.0
    members: List[int] = []
    for player in order:
        members.append(player)
        current = table.value(members)
        payoffs[player - 1] = current - previous
        previous = current
    return Allocation(tuple(payoffs), "psi-vertex", psi=psi.bits)


@dataclass(frozen=True)
class CoreMembershipReport:
    is_member: bool
    budget_gap: float
    violations: Tuple[Tuple[Tuple[int, ...], float], ...]  # (coalition, deficit)
    tight: Tuple[Tuple[int, ...], ...]

    def __bool__(self) -> bool:
        return self.is_member


def core_membership(
    allocation: Allocation | Sequence[float], table: GameTable, tol: float = _TOL
) -> CoreMembershipReport:
    """Check budget balance and every proper-coalition stability constraint."""
    payoffs = (
        allocation.payoffs if isinstance(allocation, Allocation) else tuple(allocation)
    )
    n = table.n
    if len(payoffs) != n:
        raise ValueError(f"allocation length {len(payoffs)} does not match n={n}")
    budget_gap = float(sum(payoffs)) - table.grand_value()
    violations = []
    tight = []
    grand = tuple(range(1, n + 1))
    for members in table.coalitions():
        if members == grand:
            continue
        slack = sum(payoffs[i - 1] for i in members) - table.value(members)
        if slack < -tol:
            violations.append((members, -slack))
        elif abs(slack) <= tol:
            tight.append(members)
    return CoreMembershipReport(
        is_member=abs(budget_gap) <= tol and not violations,
        budget_gap=budget_gap,
        violations=tuple(violations),
        tight=tuple(tight),
    )


def least_core(table: GameTable, n_cap: int = 12) -> Tuple[float, Allocation]:
    """Minimize the worst coalition excess over budget-balanced allocations.

    Solves ``min e`` s.t. ``sum(alpha[S]) >= v(S) - e`` for every proper
    nonempty ``S`` and ``sum(alpha) = v(N)``.  The optimum ``e*`` is
    nonpositive exactly when the core is nonempty, and the returned
    allocation attains it.
    """
    n = table.n
    if n > n_cap:
        raise InstanceTooLargeError(f"n={n} exceeds the least-core cap {n_cap}")
    grand = tuple(range(1, n + 1))
    if n == 1:
        return 0.0, Allocation((table.grand_value(),), "lp")

    # Variables: alpha as pos/neg splits, then e as a pos/neg split.
    width = 2 * n + 2
    c = np.zeros(width)
    c[2 * n] = 1.0
    c[2 * n + 1] = -1.0
    rows = []
    rhs = []
    for members in table.coalitions():
        if members == grand:
            continue
        row = np.zeros(width)
        for i in members:
            row[2 * (i - 1)] = -1.0
            row[2 * (i - 1) + 1] = 1.0
        row[2 * n] = -1.0
        row[2 * n + 1] = 1.0
        rows.append(row)
        rhs.append(-table.value(members))
    eq = np.zeros((1, width))
    for i in range(n):
        eq[0, 2 * i] = 1.0
        eq[0, 2 * i + 1] = -1.0

    result = solve_lp(c, A_ub=rows, b_ub=rhs, A_eq=eq, b_eq=[table.grand_value()])
    if result.status != "optimal":
        raise RuntimeError(f"least-core program ended {result.status}")
    x = result.x
    payoffs = tuple(float(x[2 * i] - x[2 * i + 1]) for i in range(n))
    epsilon = float(x[2 * n] - x[2 * n + 1])
    return epsilon, Allocation(payoffs, "lp")
