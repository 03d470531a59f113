import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cetsp.clustering import build_tree, preprocess
from cetsp.geometry import Circle, disk_contains, effective_distance
from cetsp.instance_io import gen_random


def random_circles(n, seed, rmax=10.0):
    rng = np.random.default_rng(seed)
    return [Circle(float(x), float(y), float(r))
            for x, y, r in zip(rng.uniform(0, 100, n), rng.uniform(0, 100, n), rng.uniform(0, rmax, n))]


# --------------------------------------------------------------- preprocess


def test_preprocess_removes_container():
    cs = [Circle(0, 0, 2), Circle(0.5, 0, 0.5)]
    pre = preprocess(cs, np.random.default_rng(0), rotate=False)
    assert pre.kept_index == [1]
    assert pre.removed_map == {0: 1}


def test_preprocess_disjoint_all_kept():
    cs = [Circle(5 * i, 0, 1) for i in range(10)]
    pre = preprocess(cs, np.random.default_rng(0))
    assert pre.kept_index == list(range(10))
    assert pre.removed_map == {}


def test_preprocess_identical_keeps_lower_index():
    cs = [Circle(1, 1, 1), Circle(1, 1, 1), Circle(1, 1, 1)]
    pre = preprocess(cs, np.random.default_rng(0), rotate=False)
    assert pre.kept_index == [0]
    assert pre.removed_map == {1: 0, 2: 0}


def test_preprocess_empty():
    with pytest.raises(ValueError, match="empty instance"):
        preprocess([], np.random.default_rng(0))


def containment_oracle(cs):
    n = len(cs)
    removed = set()
    for i, j in itertools.permutations(range(n), 2):
        if disk_contains(cs[i], cs[j]):
            if disk_contains(cs[j], cs[i]):   # identical: the higher index goes
                removed.add(max(i, j))
            else:
                removed.add(i)
    return [i for i in range(n) if i not in removed]


@pytest.mark.parametrize("seed", range(5))
def test_preprocess_matches_pairwise_oracle(seed):
    cs = random_circles(200, seed, rmax=25.0)
    pre = preprocess(cs, np.random.default_rng(seed), rotate=False)
    assert pre.kept_index == containment_oracle(cs)
    kept = [cs[i] for i in pre.kept_index]
    for a, b in itertools.permutations(kept, 2):
        assert not disk_contains(a, b)
    for j, s in pre.removed_map.items():
        assert s in pre.kept_index
        assert disk_contains(cs[j], cs[s])


def test_preprocess_with_rotation_keeps_same_set():
    cs = random_circles(200, 9, rmax=25.0)
    pre = preprocess(cs, np.random.default_rng(1))
    assert pre.rotation != 0.0
    # rotation can only perturb exact ties; random data has none
    assert pre.kept_index == containment_oracle(cs)


# ------------------------------------------------------------------- merges


def test_single_circle_is_leaf():
    tree = build_tree([Circle(0, 0, 1)], np.random.default_rng(0))
    assert tree.root.is_leaf and tree.leaf_count == 1


def test_two_circles():
    cs = [Circle(0, 0, 1), Circle(4, 0, 1)]
    tree = build_tree(cs, np.random.default_rng(0))
    assert not tree.root.is_leaf
    assert tree.root.merge_distance == pytest.approx(effective_distance(*cs))
    assert tree.root.circle == Circle(2, 0, 0)


def test_nine_circles_structure():
    cs = [Circle(3 * i, 3 * j, 0.5) for i in range(3) for j in range(3)]
    tree = build_tree(cs, np.random.default_rng(0))
    assert tree.internal_count() == 8
    assert len(tree.leaves()) == 9
    assert sorted(nd.original_index for nd in tree.leaves()) == list(range(9))


@given(st.integers(1, 150), st.integers(0, 1000), st.integers(1, 10))
def test_tree_shape(n, seed, k):
    cs = random_circles(n, seed, rmax=3.0)
    tree = build_tree(cs, np.random.default_rng(seed), k=k)
    assert tree.leaf_count == n
    assert len(tree.nodes) == 2 * n - 1
    stack = [tree.root]
    seen = 0
    while stack:
        nd = stack.pop()
        seen += 1
        if nd.is_leaf:
            assert nd.right is None and nd.original_index is not None
        else:
            assert nd.right is not None and math.isfinite(nd.merge_distance)
            stack.extend((nd.left, nd.right))
    assert seen == 2 * n - 1


def test_proxy_recorded_for_rng_stream():
    # replaying the merge order with a fresh generator reproduces every proxy
    from cetsp.geometry import proxy_circle

    cs = random_circles(60, 4, rmax=8.0)
    tree = build_tree(cs, np.random.default_rng(21))
    rng = np.random.default_rng(21)
    for nd in sorted((nd for nd in tree.nodes if not nd.is_leaf), key=lambda nd: nd.id):
        assert proxy_circle(nd.left.circle, nd.right.circle, rng) == nd.circle


def test_determinism():
    cs = random_circles(300, 2)
    t1 = build_tree(cs, np.random.default_rng(5), k=8)
    t2 = build_tree(cs, np.random.default_rng(5), k=8)
    assert [(nd.circle, nd.merge_distance) for nd in t1.nodes] == \
        [(nd.circle, nd.merge_distance) for nd in t2.nodes]


def test_merged_ids_never_reappear():
    cs = random_circles(200, 3)
    events = []
    build_tree(cs, np.random.default_rng(0), trace=events.append)
    dead = set()
    for ev in events:
        assert ev["a"] not in dead and ev["b"] not in dead
        dead.update((ev["a"], ev["b"]))


def test_large_k_considers_everything():
    cs = random_circles(12, 8)
    events = []
    build_tree(cs, np.random.default_rng(0), k=100, trace=events.append)
    assert len(events) == 11


def closest_pair_agreement(circles, k, seed):
    events = []
    build_tree(circles, np.random.default_rng(seed), k=k, trace=events.append)
    live = dict(enumerate(circles))
    hits = 0
    for ev in events:
        best = min(effective_distance(live[i], live[j])
                   for i, j in itertools.combinations(live, 2))
        if ev["d"] <= best + 1e-12 * max(1.0, abs(best)):
            hits += 1
        del live[ev["a"]], live[ev["b"]]
        live[ev["node"]] = Circle(ev["x"], ev["y"], ev["r"])
    return hits / len(events)


@pytest.mark.parametrize("seed", range(3))
def test_popped_pair_is_usually_the_true_closest(seed):
    inst = gen_random(100, 100.0, seed)
    assert closest_pair_agreement(inst.circles, 8, seed) >= 0.90


def test_empty_and_bad_k():
    with pytest.raises(ValueError):
        build_tree([], np.random.default_rng(0))
    with pytest.raises(ValueError):
        build_tree([Circle(0, 0, 1)], np.random.default_rng(0), k=0)
