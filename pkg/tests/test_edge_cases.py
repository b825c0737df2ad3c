"""Corner instances the uniform random generator rarely produces."""

import numpy as np
import pytest

import rivergame as rg
from conftest import random_coalitions


def _valid(nodes, b0=0.0):
    return rg.validate_instance(b0, nodes)


def test_rates_above_one_consecutive_solves():
    # mass pick-up between nodes: still a concave program over the span
    rng = np.random.default_rng(50)
    for _ in range(15):
        n = int(rng.integers(2, 6))
        nodes = []
        level = 0.0
        for _ in range(n):
            k = rng.uniform(0.8, 1.6)
            u = rng.uniform(0.5, 4.0)
            b = level + rng.uniform(0.2, u + 1.0)
            p = rng.uniform(2.0, 20.0)
            nodes.append(
                rg.NodeParams(b=b, k=k, a=0.0, u=u, profit=rg.quadratic(p, rng.uniform(0.05, 0.9) * p / (2 * u)))
            )
            level = min(u + level, b) * k
        inst = _valid(nodes)
        res = rg.solve_sdp(inst)
        assert rg.verify_optimality(res.plan, inst) == []
        oracle = rg.brute_force_value(inst, range(1, n + 1))
        assert res.value == pytest.approx(oracle.value, abs=1e-4)


def test_positive_initial_pollution():
    rng = np.random.default_rng(51)
    for _ in range(10):
        n = int(rng.integers(2, 6))
        b0 = float(rng.uniform(0.5, 3.0))
        nodes = []
        level = b0
        for _ in range(n):
            k = rng.uniform(0.5, 1.0)
            u = rng.uniform(0.5, 4.0)
            b = level + rng.uniform(0.0, u + 1.0)
            nodes.append(rg.NodeParams(b=b, k=k, a=0.0, u=u, profit=rg.logarithmic(rng.uniform(1, 20))))
            level = min(u + level, b) * k
        inst = _valid(nodes, b0=b0)
        solver = rg.CoalitionSolver(inst)
        for members in random_coalitions(rng, n, 6):
            got = solver.value(members).value
            want = rg.brute_force_value(inst, members).value
            assert got == pytest.approx(want, abs=1e-4)


def test_immobile_node_mid_span():
    # a node pinned by a == u participates as a constant
    nodes = [
        rg.NodeParams(b=10, k=1, a=0, u=4, profit=rg.quadratic(12, 1)),
        rg.NodeParams(b=12, k=1, a=2, u=2, profit=rg.linear(5)),
        rg.NodeParams(b=15, k=1, a=0, u=6, profit=rg.quadratic(16, 1)),
    ]
    inst = _valid(nodes)
    res = rg.solve_sdp(inst)
    assert res.plan.discharge(2) == pytest.approx(2.0)
    assert rg.verify_optimality(res.plan, inst) == []
    oracle = rg.brute_force_value(inst, (1, 2, 3))
    assert res.value == pytest.approx(oracle.value, abs=1e-4)


def test_power_profiles_only():
    rng = np.random.default_rng(52)
    for _ in range(10):
        n = int(rng.integers(2, 6))
        nodes = []
        level = 0.0
        for _ in range(n):
            k = rng.uniform(0.5, 1.0)
            u = rng.uniform(0.5, 4.0)
            b = level + rng.uniform(0.0, u + 1.0)
            nodes.append(
                rg.NodeParams(
                    b=b, k=k, a=0.0, u=u,
                    profit=rg.power(rng.uniform(1, 15), rng.uniform(0.2, 0.9)),
                )
            )
            level = min(u + level, b) * k
        inst = _valid(nodes)
        solver = rg.CoalitionSolver(inst)
        res = rg.solve_sdp(inst)
        assert rg.verify_optimality(res.plan, inst) == []
        for members in random_coalitions(rng, n, 5):
            got = solver.value(members).value
            want = rg.brute_force_value(inst, members).value
            assert got == pytest.approx(want, abs=1e-4)


def test_tolerances_exactly_at_the_myopic_floor():
    # b_i chosen so theta_i == a_i: the myopic world has zero slack anywhere
    rng = np.random.default_rng(53)
    for _ in range(10):
        n = int(rng.integers(2, 6))
        nodes = []
        level = 0.0
        for _ in range(n):
            k = float(rng.uniform(0.5, 1.0))
            a = float(rng.uniform(0.2, 1.0))
            u = a + float(rng.uniform(0.5, 2.0))
            b = a + level  # theta == a exactly
            nodes.append(rg.NodeParams(b=b, k=k, a=a, u=u, profit=rg.quadratic(10, 10 / (4 * u))))
            level = min(u + level, b) * k
        inst = _valid(nodes)
        prof = rg.grand_myopic_profile(inst)
        assert np.allclose(prof.theta, inst.a, atol=1e-12)
        res = rg.solve_sdp(inst)
        # with zero slack the only feasible plan is the all-minimum plan
        assert np.allclose(res.plan.x, inst.a, atol=1e-9)
        assert rg.verify_optimality(res.plan, inst) == []


def test_validated_instances_never_raise_on_coalition_solves():
    rng = np.random.default_rng(54)
    from conftest import random_instance

    for _ in range(20):
        n = int(rng.integers(1, 7))
        inst = random_instance(rng, n)
        solver = rg.CoalitionSolver(inst)
        for mask in range(1, 1 << n):
            members = tuple(i + 1 for i in range(n) if mask >> i & 1)
            solver.value(members)  # must not raise


def test_ledger_on_two_member_gapped_coalition():
    nodes = [
        rg.NodeParams(b=6, k=1, a=0, u=4, profit=rg.quadratic(20, 2)),
        rg.NodeParams(b=9, k=1, a=0, u=4, profit=rg.linear(1)),
        rg.NodeParams(b=12, k=1, a=0, u=8, profit=rg.quadratic(30, 1.5)),
    ]
    inst = _valid(nodes)
    ledger = rg.cooperation_quantities(inst, (1, 3))
    # every transfer lands inside the span and is attributed to node 1
    for (i1, i2), value in ledger.nonzero().items():
        assert i1 == 1 and 1 < i2 <= 3
        assert value >= -1e-9
    # quota conservation on a unit-rate river: donor drop equals the sum of
    # its outgoing transfers
    sol = rg.coalition_value(inst, (1, 3))
    theta1 = rg.grand_myopic_profile(inst).theta[0]
    drop = theta1 - sol.plan.discharge(1)
    assert sum(ledger.nonzero().values()) == pytest.approx(drop, abs=1e-9)


def test_span_problem_with_pinned_interior_node():
    nodes = [
        rg.NodeParams(b=8, k=1, a=0, u=5, profit=rg.quadratic(14, 1)),
        rg.NodeParams(b=12, k=1, a=0, u=5, profit=rg.quadratic(14, 1)),
        rg.NodeParams(b=16, k=1, a=0, u=5, profit=rg.quadratic(14, 1)),
    ]
    inst = _valid(nodes)
    pinned = rg.w_fixed(inst, (1, 2, 3), {2: 1.0})
    free = rg.solve_sdp(inst)
    assert pinned.value <= free.value + 1e-9
    assert pinned.plan.discharge(2) == 1.0
