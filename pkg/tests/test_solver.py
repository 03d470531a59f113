import math
import os
import subprocess
import sys

import pytest

from cetsp.geometry import Circle
from cetsp.instance_io import Instance, gen_random, gen_structured, validate
from cetsp.solver import SolveParams, params_from_dict, solve, solve_once


def test_single_circle():
    inst = Instance("one", [Circle(3, 4, 1)])
    best, _ = solve(inst)
    assert best.solution.tour == [(3.0, 4.0)]
    assert best.length == 0.0
    assert validate(inst, best.solution).ok


def test_nested_circles_map_to_survivor():
    inst = Instance("nest", [Circle(0, 0, 5), Circle(1, 0, 1), Circle(20, 0, 0.5), Circle(1, 0, 1)])
    res = solve_once(inst, SolveParams(), seed=3)
    assert res.kept == 2
    sol = res.solution
    assert sol.assignment[0] == sol.assignment[1] == sol.assignment[3]
    assert validate(inst, sol).ok


def test_tour_starts_at_first_circle():
    inst = gen_random(80, 100.0, 2)
    sol = solve_once(inst, SolveParams(), seed=5).solution
    assert sol.assignment[0] == 0


@pytest.mark.parametrize("seed", range(4))
def test_solutions_validate(seed):
    for inst in (gen_random(300, 50.0, seed), gen_structured(300, seed)):
        for params in (SolveParams(), SolveParams(newton=True, k_cluster=3, k_segments=2),
                       SolveParams(reinsertion_budget_factor=math.inf),
                       SolveParams(reinsertion_budget_factor=0.0)):
            res = solve_once(inst, params, seed)
            assert validate(inst, res.solution).ok


def test_timings_and_stats():
    res = solve_once(gen_structured(500, 1), SolveParams(), 1, quiet_gc=True)
    assert set(res.timings) == {"preprocess", "cluster", "construct", "total"}
    assert res.timings["total"] >= res.timings["construct"] > 0
    assert res.stats.insertions == 2 * res.kept - 1


def test_params_validation():
    with pytest.raises(ValueError):
        SolveParams(restarts=0)
    with pytest.raises(ValueError):
        SolveParams(k_cluster=0)
    with pytest.raises(ValueError):
        SolveParams(reinsertion_budget_factor=-1)
    p = params_from_dict({"k_cluster": 5, "k_segments": 2, "newton": True,
                          "reinsertion_budget_factor": 1.5, "other": 1})
    assert (p.k_cluster, p.k_segments, p.newton, p.reinsertion_budget_factor) == (5, 2, True, 1.5)


def test_empty_instance_rejected():
    with pytest.raises(ValueError):
        solve_once(Instance("e", []), SolveParams(), 0)


_SOLVE_SCRIPT = r"""
import sys
from cetsp.instance_io import gen_random, write_solution
from cetsp.local_opt import simulate_gadget
from cetsp.solver import SolveParams, solve_once
sys.stdout.buffer.write(write_solution(solve_once(gen_random(150, 100.0, 9), SolveParams(), 4).solution))
print(simulate_gadget(3000, 11))
"""


def test_python_fallback_solves_identically():
    outs = []
    for disable in (False, True):
        env = dict(os.environ)
        env.pop("CETSP_DISABLE_JIT", None)
        if disable:
            env["CETSP_DISABLE_JIT"] = "1"
        res = subprocess.run([sys.executable, "-c", _SOLVE_SCRIPT], env=env, capture_output=True,
                             check=True, timeout=600)
        outs.append(res.stdout)
    assert outs[0] == outs[1]
