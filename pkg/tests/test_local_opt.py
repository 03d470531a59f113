import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cetsp import local_opt
from cetsp.clustering import build_tree
from cetsp.construction import BuildParams, Tour, build_tour, insert_circle, start_tour
from cetsp.geometry import Circle
from cetsp.instance_io import gen_random, gen_structured
from cetsp.local_opt import is_power_of_two, simulate_gadget


def test_power_of_two():
    assert [k for k in range(1, 40) if is_power_of_two(k)] == [1, 2, 4, 8, 16, 32]
    assert not is_power_of_two(0)


def test_energy_bookkeeping():
    circles = [Circle(0, 0, 0), Circle(10, 0, 0), Circle(5, 8, 0), Circle(0.0, 0.0, 1)]
    tour = Tour(circles, BuildParams(reoptimize=False))
    p0 = start_tour(tour, 0)
    assert p0.energy == 3
    p1, _ = insert_circle(tour, 1)
    assert p1.energy == 3 and p0.energy == 2
    p2, _ = insert_circle(tour, 2)
    assert p2.energy == 3
    assert p0.energy == 1 and p1.energy == 2
    q, zero = insert_circle(tour, 3)     # zero cost into p0
    assert zero and q is p0 and p0.energy == 4
    assert p1.energy == 1 and p2.energy == 2


def test_reset_triggers_reinsertion():
    # hammering one point drains its neighbours to zero
    circles = [Circle(0, 0, 0), Circle(10, 0, 0), Circle(5, 8, 0)] + [Circle(0, 0, 0.5)] * 5
    tour = Tour(circles, BuildParams(reoptimize=False))
    start_tour(tour, 0)
    for cid in range(1, len(circles)):
        insert_circle(tour, cid)
    assert tour.stats.reinsertion_events >= 1
    assert tour.stats.reinserted_circles >= 1
    tour.check()
    assert set(tour.assignment) == set(range(len(circles)))


def test_budget_limits_reinsertions():
    inst = gen_random(500, 100.0, 2)
    tree = build_tree(inst.circles, np.random.default_rng(0))
    tour = build_tour(tree, BuildParams(reinsertion_budget=10))
    assert tour.stats.reinserted_circles <= 10
    assert tour.stats.dropped_resets > 0
    tour.check()
    tour0 = build_tour(tree, BuildParams(reinsertion_budget=0))
    assert tour0.stats.reinserted_circles == 0


@pytest.mark.parametrize("make", [lambda n, s: gen_random(n, 100.0, s), gen_structured])
@pytest.mark.parametrize("n", [100, 1000])
def test_reinsertion_accounting_without_budget(make, n):
    inst = make(n, 4)
    tree = build_tree(inst.circles, np.random.default_rng(4))
    tour = build_tour(tree, BuildParams(reinsertion_budget=math.inf))
    st_ = tour.stats
    assert st_.reinserted_circles <= 2 * st_.insertions
    # reoptimization touches each point's disks once per power-of-two count
    assert st_.reopt_work <= 2 * (st_.insertions + st_.reinserted_circles)


def test_reoptimize_schedule_counts():
    circles = [Circle(0, 0, 2)] * 1 + [Circle(0.1 * i, 0, 2) for i in range(1, 9)] + [Circle(30, 0, 0)]
    tour = Tour(circles, BuildParams(reinsertion=False))
    start_tour(tour, len(circles) - 1)
    p, _ = insert_circle(tour, 0)
    before = tour.stats.reoptimizations
    for cid in range(1, 9):
        insert_circle(tour, cid)
    # p received insertions 2..9; powers of two among those are 2, 4, 8
    assert tour.stats.reoptimizations - before == 3


# ------------------------------------------------------------------- gadget


def test_gadget_base_cases():
    assert simulate_gadget(0, 0).extra_ops == 0
    for seed in range(20):
        r = simulate_gadget(1, seed)
        assert r.extra_ops == 0 and r.terminated and r.bound_held


@given(st.integers(0, 3000), st.integers(0, 2 ** 31))
def test_gadget_bound(n, seed):
    r = simulate_gadget(n, seed)
    assert r.terminated
    assert r.extra_ops <= 2 * n
    assert r.bound_held


def test_gadget_deterministic_and_seed_sensitive():
    a = simulate_gadget(5000, 3)
    assert a == simulate_gadget(5000, 3)
    assert len({simulate_gadget(5000, s).extra_ops for s in range(10)}) > 1


def test_gadget_policy_does_real_work():
    # the adversarial drain policy should force resets on non-trivial sizes
    assert max(simulate_gadget(10_000, s).extra_ops for s in range(5)) > 1000


def test_gadget_cap_stops_run():
    r = simulate_gadget(10_000, 0, extra_cap=5)
    assert not r.terminated


def test_gadget_rejects_negative():
    with pytest.raises(ValueError):
        simulate_gadget(-1)
