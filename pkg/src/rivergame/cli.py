"""Command-line front end.

Every subcommand loads a JSON instance, runs the requested computation and
prints a human-readable report to stdout.  ``--out FILE`` additionally writes
the machine report, a single JSON document with deterministic byte content
for identical inputs.  Exit codes: 0 success, 1 a requested check failed
(witness found), 2 input or usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from typing import Dict, List, Optional, Sequence

from .coalitions import CoalitionSolver
from .core import (
    Allocation,
    PsiVector,
    core_membership,
    downstream_incremental,
    enumerate_psi_vectors,
    least_core,
    psi_vertex,
)
from .errors import InstanceValidationError, InvalidPsiError, RivergameError
from .game import (
    build_table,
    check_convexity,
    check_directional_convexity,
    check_superadditivity,
    cooperation_quantities,
    free_riders,
)
from .hydrology import grand_myopic_profile
from .instance import Coalition, Instance, parse_instance
from .layered import solve_sdp

__all__ = ["main", "run"]


def _load_instance(path: str) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read())


def _parse_coalition(text: str) -> Coalition:
    try:
        members = [int(tok) for tok in text.split(",") if tok.strip()]
        return Coalition.of(members)
    except ValueError as exc:
        raise InstanceValidationError([("BadBounds", None)]) from exc


def _instance_block(instance: Instance) -> dict:
    digest = hashlib.sha256(instance.digest_text().encode()).hexdigest()
    return {"digest": f"sha256:{digest}", "n": instance.n}


def _plan_block(plan) -> dict:
    return {
        "span": list(plan.span),
        "x": list(plan.x),
        "start_level": plan.start_level,
    }


def _allocation_block(alloc: Allocation, membership, table=None) -> dict:
    block = {
        "payoffs": list(alloc.payoffs),
        "provenance": alloc.provenance,
        "total": alloc.total,
        "in_core": membership.is_member,
        "budget_gap": membership.budget_gap,
        "violations": [
            {"coalition": list(members), "deficit": deficit}
            for members, deficit in membership.violations
        ],
        "tight": [list(members) for members in membership.tight],
    }
    if table is not None:
        grand = tuple(range(1, table.n + 1))
        block["slacks"] = {
            ",".join(map(str, members)): alloc.coalition_payoff(members)
            - table.value(members)
            for members in table.coalitions()
            if members != grand
        }
    if alloc.psi is not None:
        block["psi"] = list(alloc.psi)
    return block


def _pyify(value):
    """Numpy scalars to plain Python so reports render and serialize cleanly."""
    if isinstance(value, dict):
        return {k: _pyify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_pyify(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return value.item()
    return value


def _report(command: str, arguments: dict, instance: Instance, results: dict, exit_code: int) -> dict:
    return _pyify(
        {
            "command": command,
            "arguments": arguments,
            "instance": _instance_block(instance),
            "results": results,
            "status": {0: "ok", 1: "check-failed"}.get(exit_code, "error"),
            "exit_code": exit_code,
        }
    )


# -- subcommand handlers -------------------------------------------------------

def _cmd_myopic(args, instance: Instance) -> tuple:
    prof = grand_myopic_profile(instance)
    return {"d": list(prof.d), "theta": list(prof.theta)}, 0


def _cmd_solve(args, instance: Instance) -> tuple:
    result = solve_sdp(instance)
    return {
        "plan": _plan_block(result.plan),
        "value": result.value,
        "iterations": result.iterations,
    }, 0


def _cmd_value(args, instance: Instance) -> tuple:
    coalition = _parse_coalition(args.coalition)
    solver = CoalitionSolver(instance)
    sol = solver.value(coalition)
    riders = sorted(free_riders(instance, coalition, solver))
    return {
        "coalition": list(coalition.members),
        "value": sol.value,
        "plan": _plan_block(sol.plan),
        "decomposition": list(sol.decomposition),
        "free_riders": riders,
    }, 0


def _cmd_table(args, instance: Instance) -> tuple:
    table = build_table(instance, n_cap=args.n_cap)
    values: Dict[str, float] = {}
    for members, value in table.values.items():
        values[",".join(map(str, members))] = value
    return {"values": values, "coalitions": len(values)}, 0


def _cmd_coop(args, instance: Instance) -> tuple:
    coalition = _parse_coalition(args.coalition)
    ledger = cooperation_quantities(instance, coalition)
    deltas = {
        f"{i1},{i2}": value for (i1, i2), value in sorted(ledger.delta.items())
    }
    return {
        "coalition": list(coalition.members),
        "delta": deltas,
        "chain": [list(prefix.members) for prefix in ledger.chain],
        "received": {str(i): v for i, v in sorted(ledger.received.items())},
    }, 0


def _cmd_core(args, instance: Instance) -> tuple:
    table = build_table(instance, n_cap=args.n_cap)
    allocations: List[dict] = []
    results: dict = {"method": args.method}
    if args.method == "downstream":
        alloc = downstream_incremental(table)
        allocations.append(_allocation_block(alloc, core_membership(alloc, table), table))
    elif args.method == "vertices":
        if args.psi:
            vectors = [PsiVector(tuple(int(b) for b in args.psi.split(",")))]
        else:
            vectors = enumerate_psi_vectors(instance.n)
        for psi in vectors:
            alloc = psi_vertex(table, psi)
            allocations.append(_allocation_block(alloc, core_membership(alloc, table), table))
    else:  # lp
        epsilon, alloc = least_core(table)
        results["epsilon_star"] = epsilon
        allocations.append(_allocation_block(alloc, core_membership(alloc, table), table))
    results["allocations"] = allocations
    return results, 0


def _cmd_check(args, instance: Instance) -> tuple:
    table = build_table(instance, n_cap=args.n_cap)
    results: dict = {}
    failed = False

    def render(report) -> dict:
        return {
            "holds": report.holds,
            "pairs_checked": report.pairs_checked,
            "violations": [
                {"s": list(v.s), "t": list(v.t), "lhs": v.lhs, "rhs": v.rhs, "gap": v.gap}
                for v in report.violations
            ],
        }

    if args.directional_convexity:
        report = check_directional_convexity(table)
        results["directional_convexity"] = render(report)
        failed = failed or not report.holds
    if args.superadditivity:
        report = check_superadditivity(table)
        results["superadditivity"] = render(report)
        failed = failed or not report.holds
    if args.convexity:
        report = check_convexity(table)
        results["convexity"] = render(report)
        failed = failed or not report.holds
    if args.allocation:
        with open(args.allocation, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        payoffs = tuple(float(v) for v in payload["payoffs"])
        alloc = Allocation(payoffs, "user")
        membership = core_membership(alloc, table)
        results["allocation"] = _allocation_block(alloc, membership, table)
        failed = failed or not membership.is_member
    if not results:
        raise InstanceValidationError([("BadBounds", None)])
    return results, (1 if failed else 0)


# -- rendering ----------------------------------------------------------------

def _render_human(value, indent: int = 0, label: Optional[str] = None) -> List[str]:
    pad = "  " * indent
    lines: List[str] = []
    if isinstance(value, dict):
        if label is not None:
            lines.append(f"{pad}{label}:")
        for key in value:
            lines.extend(_render_human(value[key], indent + (label is not None), str(key)))
    elif isinstance(value, list):
        if all(not isinstance(v, (dict, list)) for v in value):
            body = ", ".join(_fmt(v) for v in value)
            lines.append(f"{pad}{label}: [{body}]")
        else:
            lines.append(f"{pad}{label}:")
            for idx, v in enumerate(value):
                lines.extend(_render_human(v, indent + 1, f"[{idx}]"))
    else:
        lines.append(f"{pad}{label}: {_fmt(value)}")
    return lines


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


# -- entry point ----------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rivergame",
        description="Discharge planning along a line of river nodes and the induced cooperative game",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-i", "--instance", required=True, help="instance JSON file")
        p.add_argument("--out", help="write the machine-format JSON report here")
        p.add_argument("--n-cap", type=int, default=16, help="largest n for table builds")

    p = sub.add_parser("myopic", help="myopic pollution levels and discharges")
    common(p)
    p = sub.add_parser("solve", help="optimal plan for the whole line")
    common(p)
    p = sub.add_parser("value", help="value and plan of one coalition")
    common(p)
    p.add_argument("-S", "--coalition", required=True, help="comma list of 1-based nodes")
    p = sub.add_parser("table", help="characteristic values of all coalitions")
    common(p)
    p = sub.add_parser("coop", help="quota-transfer ledger of one coalition")
    common(p)
    p.add_argument("-S", "--coalition", required=True, help="comma list of 1-based nodes")
    p = sub.add_parser("core", help="core allocations with membership verdicts")
    common(p)
    p.add_argument(
        "--method",
        choices=["downstream", "vertices", "lp"],
        default="downstream",
    )
    p.add_argument("--psi", help="comma list of 0/1 bits selecting one vertex")
    p = sub.add_parser("check", help="structural checks and allocation audits")
    common(p)
    p.add_argument("--directional-convexity", action="store_true")
    p.add_argument("--superadditivity", action="store_true")
    p.add_argument("--convexity", action="store_true")
    p.add_argument("--allocation", help="JSON file with a payoffs array to audit")
    return parser


_HANDLERS = {
    "myopic": _cmd_myopic,
    "solve": _cmd_solve,
    "value": _cmd_value,
    "table": _cmd_table,
    "coop": _cmd_coop,
    "core": _cmd_core,
    "check": _cmd_check,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    # The report destination is not an input: leaving it out keeps machine
    # reports byte-identical across runs that differ only in --out.
    arguments = {
        key: value
        for key, value in sorted(vars(args).items())
        if key not in ("command", "out") and value is not None
    }
    try:
        instance = _load_instance(args.instance)
        results, exit_code = _HANDLERS[args.command](args, instance)
    except (RivergameError, InvalidPsiError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    report = _report(args.command, arguments, instance, results, exit_code)
    for line in _render_human(report):
        print(line)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return exit_code


def main() -> None:
    sys.exit(run())
