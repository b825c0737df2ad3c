"""Exception types shared across the package."""

from __future__ import annotations


class RivergameError(Exception):
    """Base class for all package errors."""


class InstanceValidationError(RivergameError):
    """Instance description violates a structural invariant.

    ``violations`` is a list of ``(code, node)`` pairs where ``code`` is one of
    ``NonConcaveProfit``, ``NegativeDerivativeOnDomain``, ``BaselineInfeasible``
    and ``BadBounds``, and ``node`` is the 1-based offender (``None`` for
    instance-wide problems).
    """

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(
            code if node is None else f"{code}({node})" for code, node in self.violations
        )
        super().__init__(msg or "invalid instance")


class IndexOutOfRangeError(RivergameError, IndexError):
    """Node index outside 1..n or an inverted index pair."""


class InfeasibleBaselineError(RivergameError):
    """The all-minimum discharge plan already violates some tolerance."""

    def __init__(self, node: int, message: str | None = None):
        self.node = node
        super().__init__(message or f"baseline plan violates tolerance at node {node}")


class InfeasibleFixedAssignmentError(RivergameError):
    """Pinned discharges leave no feasible completion."""


class InstanceTooLargeError(RivergameError):
    """Instance exceeds the cap for an exhaustive operation."""


class PreconditionNotMetError(RivergameError):
    """A check was invoked on inputs that do not satisfy its hypothesis."""


class SpanTooLargeError(RivergameError):
    """Coalition span exceeds what the brute-force oracle supports."""


class NoFeasibleAssignmentError(RivergameError):
    """No outside-node assignment admits a feasible discharge plan."""


class InvalidPsiError(RivergameError):
    """Binary rearrangement vector fails its endpoint constraints."""
