"""Discharge planning along a line of river nodes and the induced cooperative game.

Nodes along a river each earn a concave profit from discharging, bounded by
per-node caps and cumulative pollution tolerances.  This package solves the
planning problem for the whole line and for arbitrary coalitions (outside
nodes acting selfishly), tabulates the induced transferable-utility game and
produces verified core allocations.
"""

from .coalitions import (
    CoalitionSolution,
    CoalitionSolver,
    WFixedResult,
    coalition_value,
    v_prime,
    w_fixed,
)
from .core import (
    Allocation,
    CoreMembershipReport,
    PsiVector,
    core_membership,
    downstream_incremental,
    enumerate_psi_vectors,
    joining_order,
    least_core,
    psi_vertex,
    rearranged_permutation,
)
from .errors import (
    IndexOutOfRangeError,
    InfeasibleBaselineError,
    InfeasibleFixedAssignmentError,
    InstanceTooLargeError,
    InstanceValidationError,
    InvalidPsiError,
    NoFeasibleAssignmentError,
    PreconditionNotMetError,
    RivergameError,
    SpanTooLargeError,
)
from .game import (
    CooperationLedger,
    GameTable,
    Prop3Result,
    StructureReport,
    build_table,
    check_convexity,
    check_directional_convexity,
    check_prop3,
    check_superadditivity,
    cooperation_quantities,
    free_riders,
)
from .hydrology import (
    MyopicProfile,
    grand_myopic_profile,
    myopic_profile,
    pollution_profile,
    residual_rate,
)
from .instance import (
    Coalition,
    DischargePlan,
    Instance,
    NodeParams,
    consecutive_partition,
    instance_to_json,
    instance_violations,
    parse_instance,
    validate_instance,
)
from .layered import (
    OptimalityViolation,
    SolveResult,
    amb,
    find_decomposition_points,
    solve_sdp,
    verify_optimality,
)
from .oracle import OracleConfig, OracleResult, brute_force_value
from .profits import ProfitFunction, linear, logarithmic, power, quadratic

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "Coalition",
    "CoalitionSolution",
    "CoalitionSolver",
    "CooperationLedger",
    "CoreMembershipReport",
    "DischargePlan",
    "GameTable",
    "IndexOutOfRangeError",
    "InfeasibleBaselineError",
    "InfeasibleFixedAssignmentError",
    "Instance",
    "InstanceTooLargeError",
    "InstanceValidationError",
    "InvalidPsiError",
    "MyopicProfile",
    "NoFeasibleAssignmentError",
    "NodeParams",
    "OptimalityViolation",
    "OracleConfig",
    "OracleResult",
    "PreconditionNotMetError",
    "ProfitFunction",
    "Prop3Result",
    "PsiVector",
    "RivergameError",
    "SolveResult",
    "SpanTooLargeError",
    "StructureReport",
    "WFixedResult",
    "amb",
    "brute_force_value",
    "build_table",
    "check_convexity",
    "check_directional_convexity",
    "check_prop3",
    "check_superadditivity",
    "coalition_value",
    "consecutive_partition",
    "cooperation_quantities",
    "core_membership",
    "downstream_incremental",
    "enumerate_psi_vectors",
    "find_decomposition_points",
    "free_riders",
    "grand_myopic_profile",
    "instance_to_json",
    "instance_violations",
    "joining_order",
    "least_core",
    "linear",
    "logarithmic",
    "myopic_profile",
    "parse_instance",
    "pollution_profile",
    "power",
    "psi_vertex",
    "quadratic",
    "rearranged_permutation",
    "residual_rate",
    "solve_sdp",
    "v_prime",
    "validate_instance",
    "verify_optimality",
    "w_fixed",
]
