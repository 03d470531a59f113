"""Compiled kernels vs the plain-Python fallback.

Each workload runs in a fresh interpreter, once with numba and once with
CETSP_DISABLE_JIT=1, and the best of ``--repeat`` timings is reported.  The
first numba call in a fresh process loads the on-disk cache (or compiles);
that warm-up is excluded from the timing.

    python3 benchmarks/bench_jit.py --repeat 3
"""

import argparse
import os
import subprocess
import sys

WORKLOADS = {
    "rtree": """
import numpy as np
from cetsp.spatial_index import RTree
def run(n):
    rng = np.random.default_rng(0)
    t = RTree(capacity=n)
    xy = rng.uniform(0, 1000, (n, 2))
    for i in range(n):
        t.insert_point(i, xy[i, 0], xy[i, 1])
    for i in range(0, n, 2):
        t.delete(i)
    for q in rng.uniform(0, 1000, (n, 2)):
        t.nearest(q[0], q[1], 8)
warm = lambda: run(200)
""",
    "gadget": """
from cetsp.local_opt import simulate_gadget
def run(n):
    for seed in range(3):
        simulate_gadget(n, seed)
warm = lambda: run(10)
""",
    "solve": """
from cetsp.instance_io import gen_structured
from cetsp.solver import SolveParams, solve_once
def run(n):
    solve_once(gen_structured(n, 0), SolveParams(), 0, quiet_gc=True)
warm = lambda: run(64)
""",
}

SIZES = {"rtree": 20_000, "gadget": 100_000, "solve": 4096}

TIMER = """
import time
warm()
best = float("inf")
for _ in range({repeat}):
    t0 = time.perf_counter()
    run({n})
    best = min(best, time.perf_counter() - t0)
from cetsp._accel import backend_name
print(backend_name(), best)
"""


def time_workload(name, n, repeat, disable):
    env = dict(os.environ)
    env.pop("CETSP_DISABLE_JIT", None)
    if disable:
        env["CETSP_DISABLE_JIT"] = "1"
    code = WORKLOADS[name] + TIMER.format(repeat=repeat, n=n)
    out = subprocess.run([sys.executable, "-c", code], env=env, check=True,
                         capture_output=True, text=True).stdout.split()
    return out[0], float(out[1])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--only", choices=sorted(WORKLOADS), action="append")
    parser.add_argument("--scale", type=float, default=1.0, help="multiply workload sizes")
    args = parser.parse_args()

    print(f"{'workload':<8} {'n':>8} {'numba s':>10} {'python s':>10} {'speedup':>8}")
    for name in args.only or list(WORKLOADS):
        n = max(16, int(SIZES[name] * args.scale))
        b1, t_jit = time_workload(name, n, args.repeat, disable=False)
        b2, t_py = time_workload(name, n, args.repeat, disable=True)
        if b1 != "numba":
            print(f"warning: numba unavailable, both columns ran as {b1}", file=sys.stderr)
        print(f"{name:<8} {n:>8} {t_jit:>10.3f} {t_py:>10.3f} {t_py / t_jit:>7.1f}x")


if __name__ == "__main__":
    main()
