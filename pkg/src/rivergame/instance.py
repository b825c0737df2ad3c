"""Problem instances, coalitions and discharge plans.

An instance is an ordered line of nodes, each with a pollution tolerance
``b``, a residual rate ``k`` toward the next node downstream, a discharge
interval ``[a, u]`` and a concave profit function.  Node indices are 1-based
everywhere in the public API, matching the upstream-to-downstream numbering
used in reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import IndexOutOfRangeError, InstanceValidationError
from .profits import ProfitFunction

__all__ = [
    "NodeParams",
    "Instance",
    "Coalition",
    "DischargePlan",
    "validate_instance",
    "instance_violations",
    "parse_instance",
    "instance_to_json",
    "consecutive_partition",
]

#: Absolute tolerance for pollution-level comparisons.
POLLUTION_TOL = 1e-9

#: Sample count used when checking monotonicity/concavity of a profit curve.
_PROFIT_SAMPLES = 64


@dataclass(frozen=True)
class NodeParams:
    """Static data of one node: ``(b, k, a, u, f)``.

    ``k`` is the residual rate applied to pollution travelling from this node
    to the next one downstream; rates above 1 are allowed (mass pick-up).
    """

    b: float
    k: float
    a: float
    u: float
    profit: ProfitFunction

    def __post_init__(self) -> None:
        for name in ("b", "k", "a", "u"):
            object.__setattr__(self, name, float(getattr(self, name)))


@dataclass(frozen=True)
class Instance:
    """Validated line of nodes plus the initial pollution ``b0`` above node 1."""

    b0: float
    nodes: Tuple[NodeParams, ...]

    @property
    def n(self) -> int:
        return len(self.nodes)

    def node(self, i: int) -> NodeParams:
        self._check_index(i)
        return self.nodes[i - 1]

    def _check_index(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise IndexOutOfRangeError(f"node {i} outside 1..{self.n}")

    # Cached parameter arrays (0-based internally; entry j is node j+1).
    @cached_property
    def b(self) -> np.ndarray:
        return np.array([nd.b for nd in self.nodes])

    @cached_property
    def k(self) -> np.ndarray:
        return np.array([nd.k for nd in self.nodes])

    @cached_property
    def a(self) -> np.ndarray:
        return np.array([nd.a for nd in self.nodes])

    @cached_property
    def u(self) -> np.ndarray:
        return np.array([nd.u for nd in self.nodes])

    @cached_property
    def profits(self) -> Tuple[ProfitFunction, ...]:
        return tuple(nd.profit for nd in self.nodes)

    def profit_value(self, i: int, x: float) -> float:
        return self.node(i).profit.value(x)

    def to_json(self) -> dict:
        return {
            "b0": self.b0,
            "nodes": [
                {"b": nd.b, "k": nd.k, "a": nd.a, "u": nd.u, "profit": nd.profit.to_json()}
                for nd in self.nodes
            ],
        }

    def digest_text(self) -> str:
        """Canonical JSON used for instance digests in reports."""
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class Coalition:
    """Nonempty sorted subset of nodes, with its span bookkeeping."""

    members: Tuple[int, ...]

    def __post_init__(self) -> None:
        members = tuple(int(i) for i in self.members)
        if not members:
            raise ValueError("coalition must be nonempty")
        if list(members) != sorted(set(members)):
            raise ValueError("coalition members must be distinct and sorted")
        if members[0] < 1:
            raise ValueError("node indices are 1-based")
        object.__setattr__(self, "members", members)

    @staticmethod
    def of(members: Iterable[int]) -> "Coalition":
        return Coalition(tuple(sorted(set(int(i) for i in members))))

    @property
    def head(self) -> int:
        return self.members[0]

    @property
    def tail(self) -> int:
        return self.members[-1]

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def span(self) -> Tuple[int, int]:
        """Smallest consecutive interval covering the coalition, inclusive."""
        return (self.head, self.tail)

    @property
    def span_nodes(self) -> Tuple[int, ...]:
        return tuple(range(self.head, self.tail + 1))

    @property
    def outside_nodes(self) -> Tuple[int, ...]:
        inside = set(self.members)
        return tuple(i for i in self.span_nodes if i not in inside)

    def parts(self) -> List["Coalition"]:
        return consecutive_partition(self)

    def bitmask(self) -> int:
        mask = 0
        for i in self.members:
            mask |= 1 << (i - 1)
        return mask

    def __contains__(self, i: int) -> bool:
        return i in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)


def consecutive_partition(coalition: Coalition | Iterable[int]) -> List[Coalition]:
    """Split a coalition into maximal runs of adjacent nodes, upstream first.

    The result is the unique ordered partition whose parts are consecutive,
    pairwise disjoint and non-mergeable; their union is the input.
    """
    if not isinstance(coalition, Coalition):
        coalition = Coalition.of(coalition)
    parts: List[Coalition] = []
    run = [coalition.members[0]]
    for i in coalition.members[1:]:
        if i == run[-1] + 1:
            run.append(i)
        else:
            parts.append(Coalition(tuple(run)))
            run = [i]
    parts.append(Coalition(tuple(run)))
    return parts


@dataclass(frozen=True)
class DischargePlan:
    """Per-node discharges over a contiguous span.

    ``span`` is a 1-based inclusive interval; ``x[j]`` is the discharge of node
    ``span[0] + j``.  ``start_level`` is the pollution mass arriving at the
    first span node (already degraded by the rate out of the node above it).
    """

    span: Tuple[int, int]
    x: Tuple[float, ...]
    start_level: float

    def __post_init__(self) -> None:
        lo, hi = self.span
        x = tuple(float(v) for v in self.x)
        if hi - lo + 1 != len(x):
            raise ValueError("plan length does not match span")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "span", (int(lo), int(hi)))

    @property
    def nodes(self) -> Tuple[int, ...]:
        return tuple(range(self.span[0], self.span[1] + 1))

    def discharge(self, i: int) -> float:
        lo, hi = self.span
        if not lo <= i <= hi:
            raise IndexOutOfRangeError(f"node {i} outside span {self.span}")
        return self.x[i - lo]

    def as_array(self) -> np.ndarray:
        return np.array(self.x)

    def objective(self, instance: Instance, coalition: Coalition | None = None) -> float:
        """Total profit of the plan, optionally restricted to a coalition."""
        keep = set(coalition.members) if coalition is not None else None
        total = 0.0
        for i, xi in zip(self.nodes, self.x):
            if keep is None or i in keep:
                total += instance.node(i).profit.value(xi)
        return total


# -- validation -------------------------------------------------------------

def _profit_violations(i: int, node: NodeParams) -> List[Tuple[str, int]]:
    out: List[Tuple[str, int]] = []
    f = node.profit
    lo, hi = node.a, node.u
    if f.kind == "quadratic" and f.params[0] - 2.0 * f.params[1] * hi < -POLLUTION_TOL:
        out.append(("NegativeDerivativeOnDomain", i))
        return out
    # Sampled checks catch anything the closed forms might miss.
    xs = np.linspace(lo, hi, _PROFIT_SAMPLES) if hi > lo else np.array([lo])
    derivs = []
    for x in xs:
        d = f.derivative(float(x))
        if d < -POLLUTION_TOL:
            out.append(("NegativeDerivativeOnDomain", i))
            return out
        derivs.append(d)
    finite = [d for d in derivs if not np.isinf(d)]
    for earlier, later in zip(finite, finite[1:]):
        if later > earlier + 1e-7 * max(1.0, abs(earlier)):
            out.append(("NonConcaveProfit", i))
            break
    return out


def instance_violations(b0: float, nodes: Sequence[NodeParams]) -> List[Tuple[str, int | None]]:
    """All invariant violations of a raw description, empty when valid."""
    out: List[Tuple[str, int | None]] = []
    if not nodes:
        out.append(("BadBounds", None))
        return out
    if b0 < 0:
        out.append(("BadBounds", None))
    for idx, nd in enumerate(nodes, start=1):
        if not (0 <= nd.a <= nd.u) or nd.b <= 0 or nd.k <= 0:
            out.append(("BadBounds", idx))
            continue
        out.extend(_profit_violations(idx, nd))
    if any(code != "NonConcaveProfit" for code, _ in out):
        return out
    # Baseline feasibility: the myopic cascade must stay within tolerances and
    # above every basic discharge level; this also implies that the all-a plan
    # is feasible from b0.
    level = b0
    for idx, nd in enumerate(nodes, start=1):
        d = min(nd.u + level, nd.b)
        theta = d - level
        if theta < nd.a - POLLUTION_TOL:
            out.append(("BaselineInfeasible", idx))
            break
        level = d * nd.k
    return out


def validate_instance(b0: float, nodes: Sequence[NodeParams]) -> Instance:
    """Build an :class:`Instance`, raising with the full violation list."""
    violations = instance_violations(b0, nodes)
    if violations:
        raise InstanceValidationError(violations)
    return Instance(float(b0), tuple(nodes))


# -- JSON schema ------------------------------------------------------------

_NODE_FIELDS = {"b", "k", "a", "u", "profit"}


def parse_instance(source: str | dict) -> Instance:
    """Parse and validate the JSON instance document.

    Expected shape::

        {"b0": 0.0,
         "nodes": [{"b": 3, "k": 1, "a": 0, "u": 3,
                    "profit": {"kind": "quadratic", "params": [20, 2]}}, ...]}

    Unknown fields are rejected so that typos never pass silently.
    """
    obj = json.loads(source) if isinstance(source, str) else source
    if not isinstance(obj, dict):
        raise InstanceValidationError([("BadBounds", None)])
    unknown = set(obj) - {"b0", "nodes"}
    if unknown:
        raise ValueError(f"unknown instance fields: {sorted(unknown)}")
    raw_nodes = obj.get("nodes", [])
    nodes = []
    for idx, raw in enumerate(raw_nodes, start=1):
        extra = set(raw) - _NODE_FIELDS
        if extra:
            raise ValueError(f"unknown node fields at node {idx}: {sorted(extra)}")
        missing = _NODE_FIELDS - set(raw)
        if missing:
            raise ValueError(f"missing node fields at node {idx}: {sorted(missing)}")
        nodes.append(
            NodeParams(
                b=float(raw["b"]),
                k=float(raw["k"]),
                a=float(raw["a"]),
                u=float(raw["u"]),
                profit=ProfitFunction.from_json(raw["profit"]),
            )
        )
    return validate_instance(float(obj.get("b0", 0.0)), nodes)


def instance_to_json(instance: Instance, indent: int | None = 2) -> str:
    return json.dumps(instance.to_json(), indent=indent)
