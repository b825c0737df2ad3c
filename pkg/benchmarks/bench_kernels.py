#!/usr/bin/env python3
"""Benchmark the jitted kernels against the pure-numpy fallbacks.

The package dispatches its hot loops through ``rivergame.kernels``; setting
``RIVERGAME_NUMBA=0`` selects the numpy implementations at import time.  This
script times both paths in one process (the fallback functions stay reachable
as module privates) and, optionally, a full game-table build per path via
subprocesses.

Usage:
    python benchmarks/bench_kernels.py [--table-n 10] [--skip-table]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from rivergame import kernels


def _bench(label, fast, slow, number):
    fast()  # trigger compilation outside the timed region
    t_fast = timeit.timeit(fast, number=number) / number
    t_slow = timeit.timeit(slow, number=number) / number
    ratio = t_slow / t_fast if t_fast > 0 else float("inf")
    print(f"{label:34s} numba {t_fast * 1e6:9.2f} us   numpy {t_slow * 1e6:9.2f} us   speedup {ratio:5.1f}x")


def bench_kernels():
    rng = np.random.default_rng(0)
    if not kernels.NUMBA_ENABLED:
        print("numba is disabled in this process; set RIVERGAME_NUMBA=1")
        return

    x = rng.uniform(0, 4, size=12)
    k = np.concatenate(([1.0], rng.uniform(0.5, 1.0, size=11)))
    _bench(
        "forward_profile (n=12)",
        lambda: kernels.forward_profile(x, k, 1.0),
        lambda: kernels._forward_profile_loop(x, k, 1.0),
        number=20000,
    )

    X = rng.uniform(0, 4, size=(3125, 6))
    k6 = np.concatenate(([1.0], rng.uniform(0.5, 1.0, size=5)))
    b = rng.uniform(10, 30, size=6)
    _bench(
        "forward_profile_batch (3125x6)",
        lambda: kernels.forward_profile_batch(X, k6, 1.0),
        lambda: kernels._forward_profile_batch_numpy(X, k6, 1.0),
        number=200,
    )
    _bench(
        "batch_feasible (3125x6)",
        lambda: kernels.batch_feasible(X, k6, 1.0, b),
        lambda: kernels._batch_feasible_numpy(X, k6, 1.0, b, 1e-9),
        number=200,
    )

    kinds = np.array([0, 1, 2, 3, 1, 2], dtype=np.int64)
    p1 = rng.uniform(1, 20, size=6)
    p2 = rng.uniform(0.1, 0.9, size=6)
    w = np.ones(6)
    _bench(
        "batch_objective (3125x6)",
        lambda: kernels.batch_objective(X, kinds, p1, p2, w),
        lambda: kernels._batch_objective_numpy(X, kinds, p1, p2, w),
        number=200,
    )


def bench_table(n):
    script = (
        "import time, numpy as np\n"
        "import sys\n"
        "sys.path.insert(0, 'tests')\n"
        "from conftest import random_instance\n"
        "import rivergame as rg\n"
        "inst = random_instance(np.random.default_rng(77), %d)\n"
        "rg.solve_sdp(inst)\n"
        "start = time.perf_counter()\n"
        "rg.build_table(inst)\n"
        "print(time.perf_counter() - start)\n" % n
    )
    results = {}
    for flag in ("1", "0"):
        env = dict(os.environ, RIVERGAME_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, "-c", script], capture_output=True, text=True, env=env
        )
        results[flag] = float(out.stdout.strip().splitlines()[-1])
    print(
        f"full {n}-node table build              "
        f"numba {results['1']:9.3f} s    numpy {results['0']:9.3f} s    "
        f"speedup {results['0'] / results['1']:5.1f}x"
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--table-n", type=int, default=10)
    parser.add_argument("--skip-table", action="store_true")
    args = parser.parse_args()
    bench_kernels()
    if not args.skip_table:
        bench_table(args.table_n)


if __name__ == "__main__":
    main()
