"""Residual rates, pollution profiles and the myopic cascade.

The myopic profile is what the river looks like when every node selfishly
discharges as much as its cap and the local tolerance allow:

    d[i] = min(u[i] + k[i-1] * d[i-1], b[i]),   theta[i] = d[i] - k[i-1] * d[i-1]

``d`` bounds the pollution of every feasible plan, so it shows up both as a
solver invariant and as the behaviour of nodes left outside a coalition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import kernels
from .errors import IndexOutOfRangeError
from .instance import Instance, DischargePlan

__all__ = [
    "MyopicProfile",
    "residual_rate",
    "myopic_profile",
    "grand_myopic_profile",
    "pollution_profile",
    "span_rates_in",
]


@dataclass(frozen=True)
class MyopicProfile:
    """Myopic pollution levels and discharges over a span."""

    span: Tuple[int, int]
    d: Tuple[float, ...]
    theta: Tuple[float, ...]
    start_level: float

    def level(self, i: int) -> float:
        lo, hi = self.span
        if not lo <= i <= hi:
            raise IndexOutOfRangeError(f"node {i} outside span {self.span}")
        return self.d[i - lo]

    def discharge(self, i: int) -> float:
        lo, hi = self.span
        if not lo <= i <= hi:
            raise IndexOutOfRangeError(f"node {i} outside span {self.span}")
        return self.theta[i - lo]


def residual_rate(instance: Instance, i1: int, i2: int) -> float:
    """Pollution mass fraction surviving transit from node ``i1`` to ``i2``.

    Equals the product of the per-edge rates ``k[i1] * ... * k[i2-1]`` and 1
    when ``i1 == i2``.
    """
    instance._check_index(i1)
    instance._check_index(i2)
    if i1 > i2:
        raise IndexOutOfRangeError(f"need i1 <= i2, got {i1} > {i2}")
    rate = 1.0
    for i in range(i1, i2):
        rate *= instance.node(i).k
    return rate


def span_rates_in(instance: Instance, span: Tuple[int, int]) -> np.ndarray:
    """Residual rate into each span position; entry 0 is unused (set to 1)."""
    lo, hi = span
    instance._check_index(lo)
    instance._check_index(hi)
    if lo > hi:
        raise IndexOutOfRangeError(f"bad span {span}")
    k_in = np.ones(hi - lo + 1)
    for i in range(lo + 1, hi + 1):
        k_in[i - lo] = instance.node(i - 1).k
    return k_in


def myopic_profile(instance: Instance, start_level: float, span: Tuple[int, int]) -> MyopicProfile:
    """Run the myopic cascade over ``span`` from an arriving pollution level."""
    lo, hi = span
    instance._check_index(lo)
    instance._check_index(hi)
    if start_level < 0:
        raise ValueError("start_level must be nonnegative")
    d = []
    theta = []
    arriving = float(start_level)
    for i in range(lo, hi + 1):
        nd = instance.node(i)
        level = min(nd.u + arriving, nd.b)
        d.append(level)
        theta.append(level - arriving)
        arriving = level * nd.k
    return MyopicProfile((lo, hi), tuple(d), tuple(theta), float(start_level))


def grand_myopic_profile(instance: Instance) -> MyopicProfile:
    """Myopic cascade over the whole line, starting from ``b0``."""
    return myopic_profile(instance, instance.b0, (1, instance.n))


def pollution_profile(plan: DischargePlan, instance: Instance) -> np.ndarray:
    """Post-discharge pollution at every span node of the plan."""
    lo, hi = plan.span
    k_in = span_rates_in(instance, (lo, hi))
    return kernels.forward_profile(plan.as_array(), k_in, plan.start_level)
