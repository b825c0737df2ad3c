import pathlib

import numpy as np
import pytest

import rivergame as rg

DATA = pathlib.Path(__file__).parent / "data"


def make_quad_trio() -> rg.Instance:
    """Three quadratic nodes on a unit-rate river; every coalition value is a
    small integer, which makes this the main exact fixture."""
    nodes = [
        rg.NodeParams(b=3, k=1, a=0, u=3, profit=rg.quadratic(20, 2)),
        rg.NodeParams(b=7, k=1, a=0, u=4, profit=rg.quadratic(10, 1)),
        rg.NodeParams(b=10, k=1, a=0, u=5, profit=rg.quadratic(20, 1)),
    ]
    return rg.validate_instance(0, nodes)


QUAD_TRIO_VALUES = {
    (1,): 42.0,
    (2,): 24.0,
    (3,): 51.0,
    (1, 2): 66.0,
    (1, 3): 96.0,
    (2, 3): 91.0,
    (1, 2, 3): 133.0,
}


def make_nine_node_line(u9: float = 6.0) -> rg.Instance:
    """Nine nodes, tolerances 5i, myopic discharge 5 everywhere.

    Odd nodes carry the interesting profits; the even nodes only ever appear
    as outsiders in the fixtures, so their (linear) profits are arbitrary.
    """
    odd_profits = {
        1: rg.linear(3),
        3: rg.quadratic(10, 1),
        5: rg.quadratic(20, 2),
        7: rg.quadratic(20, 1),
        9: rg.quadratic(40, 1),
    }
    caps = [5, 6, 5, 6, 5, 6, 6, 6, u9]
    nodes = [
        rg.NodeParams(
            b=5 * i,
            k=1,
            a=0,
            u=caps[i - 1],
            profit=odd_profits.get(i, rg.linear(1)),
        )
        for i in range(1, 10)
    ]
    return rg.validate_instance(0, nodes)


def random_instance(rng: np.random.Generator, n: int, kinds=None) -> rg.Instance:
    """Valid random instance: rates in (0.5, 1], mixed profit kinds, and
    tolerances drawn so the myopic cascade sometimes binds and sometimes not."""
    kinds = kinds or ("linear", "quadratic", "logarithmic", "power")
    nodes = []
    level = 0.0
    for _ in range(n):
        k = rng.uniform(0.5, 1.0)
        a = rng.uniform(0.0, 1.5) if rng.random() < 0.5 else 0.0
        u = a + rng.uniform(0.5, 6.0)
        kind = rng.choice(kinds)
        if kind == "linear":
            profit = rg.linear(rng.uniform(0.5, 25.0))
        elif kind == "quadratic":
            p = rng.uniform(1.0, 30.0)
            profit = rg.quadratic(p, rng.uniform(0.05, 1.0) * p / (2 * u))
        elif kind == "logarithmic":
            profit = rg.logarithmic(rng.uniform(1.0, 40.0))
        else:
            profit = rg.power(rng.uniform(1.0, 20.0), rng.uniform(0.25, 0.85))
        b = a + level + rng.uniform(0.0, u - a + 2.0)
        nodes.append(rg.NodeParams(b=b, k=k, a=a, u=u, profit=profit))
        level = min(u + level, b) * k
    return rg.validate_instance(0.0, nodes)


def random_coalitions(rng: np.random.Generator, n: int, count: int):
    import itertools

    players = list(range(1, n + 1))
    everything = [
        c for size in range(1, n + 1) for c in itertools.combinations(players, size)
    ]
    picks = rng.choice(len(everything), size=min(count, len(everything)), replace=False)
    return [everything[i] for i in picks]


@pytest.fixture
def quad_trio():
    return make_quad_trio()


@pytest.fixture
def quad_trio_table(quad_trio):
    return rg.build_table(quad_trio)


@pytest.fixture
def nine_low():
    return make_nine_node_line(u9=6.0)


@pytest.fixture
def nine_high():
    return make_nine_node_line(u9=11.0)


@pytest.fixture
def quad_trio_file(tmp_path):
    path = tmp_path / "quad_trio.json"
    path.write_text(rg.instance_to_json(make_quad_trio()))
    return path
