import numpy as np
import pytest

import rivergame as rg
from conftest import (
    QUAD_TRIO_VALUES,
    make_nine_node_line,
    random_coalitions,
    random_instance,
)


def test_build_table_quad_trio(quad_trio_table):
    assert len(quad_trio_table.values) == 7
    for members, expected in QUAD_TRIO_VALUES.items():
        assert quad_trio_table.value(members) == pytest.approx(expected, abs=1e-9)


def test_build_table_single_node():
    inst = rg.validate_instance(
        0, [rg.NodeParams(b=10, k=1, a=0, u=5, profit=rg.linear(3))]
    )
    table = rg.build_table(inst)
    assert table.values == {(1,): 15.0}


def test_build_table_additive_when_tolerances_are_loose():
    nodes = [
        rg.NodeParams(b=100, k=1, a=0, u=2, profit=rg.quadratic(8, 1)),
        rg.NodeParams(b=200, k=1, a=0, u=3, profit=rg.quadratic(9, 1)),
    ]
    inst = rg.validate_instance(0, nodes)
    table = rg.build_table(inst)
    assert table.value((1, 2)) == pytest.approx(table.value((1,)) + table.value((2,)))


def test_build_table_cap():
    rng = np.random.default_rng(0)
    inst = random_instance(rng, 5)
    with pytest.raises(rg.InstanceTooLargeError):
        rg.build_table(inst, n_cap=4)


def test_build_table_deterministic(quad_trio):
    t1 = rg.build_table(quad_trio)
    t2 = rg.build_table(quad_trio)
    assert t1.values == t2.values


# -- quota transfers -----------------------------------------------------------

def test_ledger_nine_nodes_partial_chain():
    inst = make_nine_node_line(u9=6.0)
    ledger = rg.cooperation_quantities(inst, (1, 3, 5, 7))
    expected = {
        (3, 4): 1.0,
        (3, 6): 1 / 3,
        (5, 6): 2 / 3,
        (3, 7): 2 / 3,
        (5, 7): 1 / 3,
    }
    assert ledger.nonzero().keys() == expected.keys()
    for pair, value in expected.items():
        assert ledger.get(*pair) == pytest.approx(value, abs=1e-9)


def test_ledger_nine_nodes_low_cap():
    inst = make_nine_node_line(u9=6.0)
    ledger = rg.cooperation_quantities(inst, (1, 3, 5, 7, 9))
    expected = {
        (3, 4): 1.0,
        (3, 6): 1 / 3,
        (5, 6): 2 / 3,
        (3, 7): 2 / 3,
        (5, 7): 1 / 3,
        (1, 2): 1.0,
        (1, 8): 1.0,
        (1, 9): 1.0,
        (1, 3): 0.5,
        (1, 5): 0.25,
    }
    assert ledger.nonzero().keys() == expected.keys()
    for pair, value in expected.items():
        assert ledger.get(*pair) == pytest.approx(value, abs=1e-9)


def test_ledger_nine_nodes_high_cap():
    inst = make_nine_node_line(u9=11.0)
    ledger = rg.cooperation_quantities(inst, (1, 3, 5, 7, 9))
    expected = {
        (3, 4): 1.0,
        (3, 6): 1 / 3,
        (5, 6): 2 / 3,
        (3, 7): 2 / 3,
        (5, 7): 1 / 3,
        (1, 2): 1.0,
        (1, 8): 1.0,
        (5, 9): 1.0,
        (1, 9): 3.0,
        (3, 9): 2.0,
    }
    assert ledger.nonzero().keys() == expected.keys()
    for pair, value in expected.items():
        assert ledger.get(*pair) == pytest.approx(value, abs=1e-9)


def test_ledger_zero_when_additive(quad_trio):
    ledger = rg.cooperation_quantities(quad_trio, (1, 2))
    assert ledger.nonzero() == {}
    assert [c.members for c in ledger.chain] == [(1,), (1, 2)]


def test_ledger_zero_clause_and_nonnegative():
    rng = np.random.default_rng(31)
    for _ in range(15):
        n = int(rng.integers(2, 7))
        inst = random_instance(rng, n)
        for members in random_coalitions(rng, n, 3):
            if len(members) < 2:
                continue
            coalition = rg.Coalition.of(members)
            ledger = rg.cooperation_quantities(inst, coalition)
            for (i1, i2), value in ledger.delta.items():
                assert value >= -1e-9
                assert i1 in coalition
                assert i1 < i2 <= coalition.tail


def test_ledger_transfers_stable_along_chain():
    # once positive, a pair's transfer never changes at later prefixes
    rng = np.random.default_rng(32)
    for _ in range(15):
        n = int(rng.integers(3, 7))
        inst = random_instance(rng, n)
        solver = rg.CoalitionSolver(inst)
        for members in random_coalitions(rng, n, 3):
            if len(members) < 3:
                continue
            coalition = rg.Coalition.of(members)
            seen = {}
            for size in range(2, coalition.size + 1):
                prefix = rg.Coalition(coalition.members[:size])
                ledger = rg.cooperation_quantities(inst, prefix, solver)
                for pair, value in ledger.nonzero().items():
                    if pair in seen:
                        assert value == pytest.approx(seen[pair], abs=1e-9)
                    else:
                        seen[pair] = value


# -- free riders ----------------------------------------------------------------

def test_free_riders_nine_nodes():
    inst = make_nine_node_line(u9=6.0)
    assert rg.free_riders(inst, (1, 3, 5, 7)) == {4, 6}


def test_free_riders_prefix_empty():
    inst = make_nine_node_line(u9=6.0)
    assert rg.free_riders(inst, (1, 3)) == set()


def test_free_riders_consecutive_empty(quad_trio):
    assert rg.free_riders(quad_trio, (2, 3)) == set()


def test_free_riders_sit_at_their_caps():
    rng = np.random.default_rng(33)
    for _ in range(20):
        n = int(rng.integers(3, 8))
        inst = random_instance(rng, n)
        solver = rg.CoalitionSolver(inst)
        for members in random_coalitions(rng, n, 5):
            coalition = rg.Coalition.of(members)
            sol = solver.value(coalition)
            for rider in rg.free_riders(inst, coalition, solver):
                assert sol.plan.discharge(rider) == pytest.approx(
                    inst.node(rider).u, abs=1e-9
                )


# -- structural checks ------------------------------------------------------------

def test_prop3_quad_trio(quad_trio):
    result = rg.check_prop3(quad_trio, (1,), (3,))
    assert result.holds
    assert result.lhs == pytest.approx(120.0)
    assert result.rhs == pytest.approx(133.0)


def test_prop3_precondition(quad_trio):
    inst = make_nine_node_line(u9=6.0)
    with pytest.raises(rg.PreconditionNotMetError):
        rg.check_prop3(inst, (1,), (3,))


def test_prop3_random_instances():
    rng = np.random.default_rng(34)
    hits = 0
    for _ in range(25):
        n = int(rng.integers(3, 7))
        inst = random_instance(rng, n)
        solver = rg.CoalitionSolver(inst)
        for members in random_coalitions(rng, n, 6):
            coalition = rg.Coalition.of(members)
            parts = coalition.parts()
            if len(parts) < 2:
                continue
            s1 = tuple(i for part in parts[:1] for i in part.members)
            s2 = tuple(i for part in parts[1:] for i in part.members)
            try:
                result = rg.check_prop3(inst, s1, s2, solver)
            except rg.PreconditionNotMetError:
                continue
            assert result.holds
            hits += 1
    assert hits > 3


def test_directional_convexity_quad_trio(quad_trio_table):
    assert rg.check_directional_convexity(quad_trio_table).holds


def test_convexity_fails_with_witness(quad_trio_table):
    report = rg.check_convexity(quad_trio_table)
    assert not report.holds
    witness = {(v.s, v.t) for v in report.violations}
    assert ((1, 3), (2, 3)) in witness
    only = report.violations[0]
    assert only.lhs == pytest.approx(187.0)
    assert only.rhs == pytest.approx(184.0)
    assert only.gap == pytest.approx(3.0)


def test_superadditivity_quad_trio(quad_trio_table):
    assert rg.check_superadditivity(quad_trio_table).holds


def test_additive_game_convex_for_any_order():
    nodes = [
        rg.NodeParams(b=100, k=1, a=0, u=2, profit=rg.quadratic(8, 1)),
        rg.NodeParams(b=200, k=1, a=0, u=3, profit=rg.quadratic(9, 1)),
        rg.NodeParams(b=300, k=1, a=0, u=3, profit=rg.linear(4)),
    ]
    table = rg.build_table(rg.validate_instance(0, nodes))
    import itertools

    for pi in itertools.permutations((1, 2, 3)):
        assert rg.check_directional_convexity(table, pi).holds
    assert rg.check_convexity(table).holds


def test_cap_bound_on_ordered_unions():
    # v(S1 | S2) <= v(S1) + sum of capped profits over S2
    rng = np.random.default_rng(35)
    for _ in range(20):
        n = int(rng.integers(3, 7))
        inst = random_instance(rng, n)
        solver = rg.CoalitionSolver(inst)
        for members in random_coalitions(rng, n, 6):
            if len(members) < 2:
                continue
            for split in range(1, len(members)):
                s1, s2 = members[:split], members[split:]
                if max(s1) >= min(s2):
                    continue
                bound = solver.value(s1).value + sum(
                    inst.node(i).profit.value(inst.node(i).u) for i in s2
                )
                assert solver.value(members).value <= bound + 1e-9


def test_free_ride_survives_downstream_joiners():
    # if S gains over the split at an outside node, S | {j} still does for
    # every j strictly downstream of S
    rng = np.random.default_rng(36)
    hits = 0
    for _ in range(25):
        n = int(rng.integers(3, 8))
        inst = random_instance(rng, n)
        solver = rg.CoalitionSolver(inst)
        for members in random_coalitions(rng, n, 6):
            coalition = rg.Coalition.of(members)
            for o in coalition.outside_nodes:
                below = tuple(i for i in members if i < o)
                above = tuple(i for i in members if i > o)
                gain = (
                    solver.value(coalition).value
                    - solver.value(below).value
                    - solver.value(above).value
                )
                if gain <= 1e-9:
                    continue
                for j in range(coalition.tail + 1, n + 1):
                    lhs = solver.value(members + (j,)).value
                    rhs = solver.value(below).value + solver.value(above + (j,)).value
                    assert lhs > rhs - 1e-9
                    hits += 1
    assert hits > 3


def test_directional_convexity_random_games():
    rng = np.random.default_rng(37)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        table = rg.build_table(random_instance(rng, n))
        assert rg.check_directional_convexity(table).holds
        assert rg.check_superadditivity(table).holds
