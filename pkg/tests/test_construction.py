import math

import numpy as np
import pytest

from cetsp.clustering import ClusterNode, build_tree
from cetsp.construction import (
    BuildParams,
    Tour,
    build_tour,
    expand_node,
    insert_circle,
    start_tour,
    tour_length,
)
from cetsp.geometry import Circle, alhazen_bisection
from cetsp.instance_io import gen_random, gen_structured


def feasible(tour):
    for cid, p in tour.assignment.items():
        c = tour.circles[cid]
        if math.hypot(p.x - c.x, p.y - c.y) > c.r + 1e-9:
            return False
    return True


def test_tour_length_conventions():
    assert tour_length([]) == 0.0
    assert tour_length([(1, 1)]) == 0.0
    assert tour_length([(0, 0), (3, 4)]) == 10.0
    assert tour_length([(0, 0), (1, 0), (1, 1), (0, 1)]) == 4.0


def test_zero_cost_assignment():
    circles = [Circle(0, 0, 1), Circle(0.5, 0, 1)]
    tour = Tour(circles, BuildParams(reinsertion=False, reoptimize=False))
    start_tour(tour, 0)
    p, zero = insert_circle(tour, 1)
    assert zero and tour.size == 1 and p.covered == {0: None, 1: None}
    assert tour.stats.zero_cost == 1


def test_insertion_uses_cheapest_segment():
    circles = [Circle(0, 0, 0), Circle(10, 0, 0), Circle(10, 10, 0), Circle(0, 10, 0),
               Circle(5, -3, 1)]
    tour = Tour(circles, BuildParams(reinsertion=False, reoptimize=False))
    start_tour(tour, 0)
    for cid in (1, 2, 3):
        insert_circle(tour, cid)
    p, zero = insert_circle(tour, 4)
    assert not zero
    # lands between (0,0) and (10,0), where the bisection point is (5,-2)
    assert {(p.prev.x, p.prev.y), (p.next.x, p.next.y)} == {(0, 0), (10, 0)}
    q, _ = alhazen_bisection(((0, 0), (10, 0)), circles[4])
    assert (p.x, p.y) == pytest.approx(q)
    tour.check()


def test_expand_replaces_proxy_with_children():
    a = ClusterNode(0, Circle(0, 0, 1), original_index=0)
    b = ClusterNode(1, Circle(6, 0, 1), original_index=1)
    root = ClusterNode(2, Circle(3, 0, 0), merge_distance=4.0, left=a, right=b)
    tour = Tour([a.circle, b.circle, root.circle], BuildParams(reoptimize=False))
    start_tour(tour, 2)
    expand_node(tour, root)
    assert set(tour.assignment) == {0, 1}
    assert tour.size == 2
    assert feasible(tour)
    tour.check()
    assert tour.length() == pytest.approx(8.0)


def test_expand_single_point_tour_keeps_placeholder_until_children_land():
    # the proxy's point is the only point, and neither child covers it
    a = ClusterNode(0, Circle(-5, 0, 0), original_index=0)
    b = ClusterNode(1, Circle(5, 0, 0), original_index=1)
    root = ClusterNode(2, Circle(0, 0, 0), merge_distance=10.0, left=a, right=b)
    tour = Tour([a.circle, b.circle, root.circle], BuildParams(reoptimize=False))
    p0 = start_tour(tour, 2)
    expand_node(tour, root)
    assert not p0.alive
    assert sorted(tour.positions()) == [(-5, 0), (5, 0)]
    tour.check()


def test_expand_leaf_rejected():
    tour = Tour([Circle(0, 0, 1)])
    start_tour(tour, 0)
    with pytest.raises(ValueError):
        expand_node(tour, ClusterNode(0, Circle(0, 0, 1), original_index=0))


def test_insert_into_empty_tour_rejected():
    with pytest.raises(RuntimeError):
        insert_circle(Tour([Circle(0, 0, 1)]), 0)


@pytest.mark.parametrize("make", [lambda: gen_random(400, 100.0, 3), lambda: gen_structured(400, 3)])
@pytest.mark.parametrize("params", [
    BuildParams(),
    BuildParams(newton=True),
    BuildParams(reinsertion=False, reoptimize=False),
    BuildParams(k_segments=1),
])
def test_build_tour_covers_every_leaf(make, params):
    inst = make()
    tree = build_tree(inst.circles, np.random.default_rng(0))
    tour = build_tour(tree, params)
    tour.check()
    leaves = {nd.id for nd in tree.leaves()}
    assert set(tour.assignment) == leaves
    assert feasible(tour)
    assert math.isfinite(tour.length())
    assert tour.stats.insertions == 2 * len(leaves) - 1


def test_stats_and_trace_agree():
    inst = gen_random(150, 100.0, 5)
    tree = build_tree(inst.circles, np.random.default_rng(1))
    events = []
    tour = build_tour(tree, BuildParams(), trace=events.append)
    inserts = [e for e in events if e["event"] == "insert"]
    assert sum(1 for e in inserts if not e["reinsertion"]) + 1 == tour.stats.insertions
    assert sum(1 for e in inserts if e["reinsertion"]) == tour.stats.reinserted_circles
    assert sum(1 for e in events if e["event"] == "expand") == tour.stats.expansions
    assert sum(1 for e in events if e["event"] == "reinsert") == tour.stats.reinsertion_events


def test_newton_never_hurts_insertion_delta():
    rng = np.random.default_rng(2)
    circles = [Circle(*rng.uniform(-10, 10, 2), rng.uniform(0.1, 2)) for _ in range(60)]
    lengths = {}
    for newton in (False, True):
        tour = Tour(circles, BuildParams(newton=newton, reinsertion=False, reoptimize=False))
        start_tour(tour, 0)
        for cid in range(1, len(circles)):
            insert_circle(tour, cid)
        tour.check()
        assert feasible(tour)
        lengths[newton] = tour.length()
    assert all(math.isfinite(v) for v in lengths.values())


def test_reoptimize_never_lengthens_tour():
    from cetsp import local_opt

    inst = gen_random(200, 100.0, 8)
    tree = build_tree(inst.circles, np.random.default_rng(0))
    tour = build_tour(tree, BuildParams(reoptimize=False, reinsertion=False))
    for p in list(tour.points()):
        before = tour.length()
        p.insert_count = 1
        local_opt.maybe_reoptimize(tour, p)
        assert tour.length() <= before + 1e-9
    assert feasible(tour)
    tour.check()
