"""Concave node profit functions and their inverse derivatives.

Every node earns profit ``f(x)`` from discharging ``x``.  The solver needs
three things from ``f``: the value, the first derivative ``f'`` and, for the
balanced-layer greedy, the inverse of the derivative ``g = (f')^{-1}``.  To
keep ``g`` exact we restrict profits to a closed family of four kinds with
closed-form inverses; linear profits have a constant derivative and expose no
inverse at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

__all__ = [
    "ProfitFunction",
    "PROFIT_KINDS",
    "linear",
    "quadratic",
    "logarithmic",
    "power",
]

PROFIT_KINDS = ("linear", "quadratic", "logarithmic", "power")


class InverseUnavailableError(RuntimeError):
    """Raised when asking a constant-derivative profit for its inverse."""


@dataclass(frozen=True)
class ProfitFunction:
    """One node's profit curve, ``f(0) = 0``, increasing and concave.

    kind/params:
      * ``linear``       -- ``(p,)``     with ``f(x) = p*x``, ``p > 0``
      * ``quadratic``    -- ``(p, q)``   with ``f(x) = p*x - q*x**2``, ``q > 0``
      * ``logarithmic``  -- ``(p,)``     with ``f(x) = p*log(1 + x)``, ``p > 0``
      * ``power``        -- ``(p, r)``   with ``f(x) = p*x**r``, ``0 < r < 1``
    """

    kind: str
    params: Tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind not in PROFIT_KINDS:
            raise ValueError(f"unknown profit kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        p = self.params
        if self.kind == "linear":
            if len(p) != 1 or p[0] <= 0:
                raise ValueError("linear profit needs a single positive slope")
        elif self.kind == "quadratic":
            if len(p) != 2 or p[0] <= 0 or p[1] <= 0:
                raise ValueError("quadratic profit needs params (p, q) with p, q > 0")
        elif self.kind == "logarithmic":
            if len(p) != 1 or p[0] <= 0:
                raise ValueError("logarithmic profit needs a single positive scale")
        else:  # power
            if len(p) != 2 or p[0] <= 0 or not 0.0 < p[1] < 1.0:
                raise ValueError("power profit needs params (p, r) with p > 0, 0 < r < 1")

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear"

    @property
    def has_inverse_derivative(self) -> bool:
        return self.kind != "linear"

    def value(self, x: float) -> float:
        p = self.params
        if self.kind == "linear":
            return p[0] * x
        if self.kind == "quadratic":
            return p[0] * x - p[1] * x * x
        if self.kind == "logarithmic":
            return p[0] * math.log1p(x)
        return p[0] * x ** p[1]

    def derivative(self, x: float) -> float:
        p = self.params
        if self.kind == "linear":
            return p[0]
        if self.kind == "quadratic":
            return p[0] - 2.0 * p[1] * x
        if self.kind == "logarithmic":
            return p[0] / (1.0 + x)
        # power: derivative diverges at 0, which the greedy treats as +inf
        if x <= 0.0:
            return math.inf
        return p[0] * p[1] * x ** (p[1] - 1.0)

    def inverse_derivative(self, y: float) -> float:
        """Return ``g(y)`` with ``f'(g(y)) = y``; clamps at 0 for huge ``y``.

        ``y`` must be positive for the logarithmic and power kinds since their
        derivative ranges are ``(0, inf)``; a non-positive ``y`` there means
        "no finite discharge reaches this level" and maps to ``inf``.
        """
        p = self.params
        if self.kind == "linear":
            raise InverseUnavailableError("constant derivative has no inverse")
        if self.kind == "quadratic":
            return (p[0] - y) / (2.0 * p[1])
        if self.kind == "logarithmic":
            if y <= 0.0:
                return math.inf
            return p[0] / y - 1.0
        if y <= 0.0:
            return math.inf
        if math.isinf(y):
            return 0.0
        return (p[0] * p[1] / y) ** (1.0 / (1.0 - p[1]))

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}

    @staticmethod
    def from_json(obj: dict) -> "ProfitFunction":
        unknown = set(obj) - {"kind", "params"}
        if unknown:
            raise ValueError(f"unknown profit fields: {sorted(unknown)}")
        params = obj.get("params", ())
        if isinstance(params, (int, float)):
            params = (params,)
        return ProfitFunction(str(obj.get("kind", "")), tuple(params))


def linear(slope: float) -> ProfitFunction:
    return ProfitFunction("linear", (slope,))


def quadratic(p: float, q: float) -> ProfitFunction:
    return ProfitFunction("quadratic", (p, q))


def logarithmic(p: float) -> ProfitFunction:
    return ProfitFunction("logarithmic", (p,))


def power(p: float, r: float) -> ProfitFunction:
    return ProfitFunction("power", (p, r))
