import numpy as np
import pytest

import rivergame as rg
from conftest import make_nine_node_line, random_instance


def test_amb_values(quad_trio):
    assert rg.amb(quad_trio, 1, 0.0) == pytest.approx(20.0)
    assert rg.amb(quad_trio, 3, 5.0) == pytest.approx(10.0)


def test_amb_constant_for_linear_with_rates():
    nodes = [
        rg.NodeParams(b=10, k=0.5, a=0, u=2, profit=rg.linear(1)),
        rg.NodeParams(b=10, k=1, a=0, u=2, profit=rg.linear(4)),
    ]
    inst = rg.validate_instance(0, nodes)
    assert rg.amb(inst, 2, 0.7) == pytest.approx(2.0)
    assert rg.amb(inst, 2, 1.9) == pytest.approx(2.0)


def test_solve_quad_trio_grand(quad_trio):
    res = rg.solve_sdp(quad_trio)
    assert res.value == pytest.approx(133.0, abs=1e-9)
    assert np.allclose(res.plan.x, (3, 2, 5), atol=1e-9)
    c = rg.pollution_profile(res.plan, quad_trio)
    d = rg.myopic_profile(quad_trio, 0.0, (1, 3)).d
    assert c[-1] == pytest.approx(d[-1], abs=1e-9)


def test_solve_single_linear_node():
    inst = rg.validate_instance(
        0, [rg.NodeParams(b=10, k=1, a=0, u=5, profit=rg.linear(3))]
    )
    res = rg.solve_sdp(inst)
    assert res.plan.x == (5.0,)
    assert res.value == pytest.approx(15.0)


def test_solve_suffix_span(quad_trio):
    res = rg.solve_sdp(quad_trio, start_level=3.0, span=(2, 3))
    assert np.allclose(res.plan.x, (2, 5), atol=1e-9)
    assert res.value == pytest.approx(91.0, abs=1e-9)


def test_infeasible_start_raises(quad_trio):
    with pytest.raises(rg.InfeasibleBaselineError):
        rg.solve_sdp(quad_trio, start_level=50.0, span=(2, 3))


def test_verify_optimality_passes_on_solver_output(quad_trio):
    res = rg.solve_sdp(quad_trio)
    assert rg.verify_optimality(res.plan, quad_trio) == []


def test_verify_optimality_flags_myopic_plan(quad_trio):
    plan = rg.DischargePlan(span=(1, 3), x=(3, 4, 3), start_level=0.0)
    violations = rg.verify_optimality(plan, quad_trio)
    kinds = {(v.kind, v.nodes) for v in violations}
    # f2'(4) = 2 below k * f3'(3) = 14 while neither bound pins the pair
    assert ("downstream-marginal-dominates", (2, 3)) in kinds


def test_verify_optimality_single_node():
    inst = rg.validate_instance(
        0, [rg.NodeParams(b=10, k=1, a=0, u=5, profit=rg.linear(3))]
    )
    plan = rg.DischargePlan(span=(1, 1), x=(5,), start_level=0.0)
    assert rg.verify_optimality(plan, inst) == []


def test_decomposition_points_quad_trio(quad_trio):
    res = rg.solve_sdp(quad_trio)
    assert rg.find_decomposition_points(res.plan, quad_trio) == [1]


def test_decomposition_points_nine_nodes():
    inst = make_nine_node_line(u9=6.0)
    plan = rg.DischargePlan(span=(1, 3), x=(5, 5, 5), start_level=0.0)
    assert rg.find_decomposition_points(plan, inst) == [1, 2]


def test_no_decomposition_when_interior():
    nodes = [
        rg.NodeParams(b=50, k=1, a=0, u=3, profit=rg.quadratic(4, 0.5)),
        rg.NodeParams(b=4, k=1, a=0, u=4, profit=rg.linear(30)),
    ]
    inst = rg.validate_instance(0, nodes)
    res = rg.solve_sdp(inst)
    # the cheap upstream node stays strictly below its myopic level
    assert rg.find_decomposition_points(res.plan, inst) == []


def test_decomposition_prefix_solves_subproblem():
    rng = np.random.default_rng(8)
    found = 0
    for _ in range(40):
        inst = random_instance(rng, int(rng.integers(2, 8)))
        res = rg.solve_sdp(inst)
        for j in rg.find_decomposition_points(res.plan, inst):
            sub = rg.solve_sdp(inst, start_level=inst.b0, span=(1, j))
            prefix_value = sum(
                inst.node(i).profit.value(res.plan.discharge(i)) for i in range(1, j + 1)
            )
            assert prefix_value == pytest.approx(sub.value, abs=1e-6)
            found += 1
    assert found > 5


def test_iteration_bound_and_layer_invariants():
    rng = np.random.default_rng(9)
    for _ in range(60):
        n = int(rng.integers(1, 10))
        inst = random_instance(rng, n)
        res = rg.solve_sdp(inst, trace=True)
        assert res.iterations <= 2 * n
        for record in res.trace:
            assert record["delta"] >= 0.0  # discharges never decrease
            assert record["amb_spread"] <= 1e-9  # balanced within the layer


def test_pollution_bounds_on_outputs():
    rng = np.random.default_rng(10)
    for _ in range(60):
        inst = random_instance(rng, int(rng.integers(1, 10)))
        res = rg.solve_sdp(inst)
        c = rg.pollution_profile(res.plan, inst)
        d = np.array(rg.grand_myopic_profile(inst).d)
        assert np.all(c <= d + 1e-9)
        assert abs(c[-1] - d[-1]) <= 1e-9
        assert rg.verify_optimality(res.plan, inst) == []


def test_linear_nodes_get_shared_slack_before_declining_ones():
    # Equal weighted marginals at the start; the constant-margin node must
    # soak up the shared tolerance first or half the value is lost.
    nodes = [
        rg.NodeParams(b=100, k=1, a=0, u=10, profit=rg.quadratic(10, 0.5)),
        rg.NodeParams(b=10, k=1, a=0, u=10, profit=rg.linear(10)),
    ]
    inst = rg.validate_instance(0, nodes)
    res = rg.solve_sdp(inst)
    assert res.value == pytest.approx(100.0, abs=1e-9)
    assert np.allclose(res.plan.x, (0, 10), atol=1e-9)


def test_mixed_kind_layers_match_oracle():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n = int(rng.integers(2, 7))
        inst = random_instance(rng, n)
        res = rg.solve_sdp(inst)
        oracle = rg.brute_force_value(inst, rg.Coalition.of(range(1, n + 1)))
        assert res.value == pytest.approx(oracle.value, abs=1e-4)
