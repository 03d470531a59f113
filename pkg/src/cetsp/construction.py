"""Tour construction by top-down expansion of the cluster tree."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from . import local_opt
from .clustering import ClusterNode, ClusterTree
from .geometry import Circle, _alhazen, _newton
from .spatial_index import RTree

DEFAULT_K_SEGMENTS = 6


class TourPoint:
    __slots__ = ("id", "x", "y", "covered", "energy", "insert_count",
                 "prev", "next", "alive", "pending")

    def __init__(self, pid: int, x: float, y: float):
        self.id = pid
        self.x = x
        self.y = y
        self.covered: dict[int, None] = {}
        self.energy = 0
        self.insert_count = 0
        self.prev: TourPoint = self
        self.next: TourPoint = self
        self.alive = True
        self.pending = False

    def __repr__(self) -> str:
        return f"TourPoint({self.id}, ({self.x:.6g}, {self.y:.6g}), covered={list(self.covered)})"


@dataclass
class TourStats:
    insertions: int = 0           # circle insertions from tree expansion (incl. the root)
    reinserted_circles: int = 0
    reinsertion_events: int = 0
    dropped_resets: int = 0
    zero_cost: int = 0
    new_points: int = 0
    reoptimizations: int = 0
    reopt_work: int = 0           # disks examined across all reoptimizations
    expansions: int = 0


@dataclass
class BuildParams:
    k_segments: int = DEFAULT_K_SEGMENTS
    newton: bool = False
    reinsertion_budget: float = math.inf
    eps: float = 1e-9
    reoptimize: bool = True
    reinsertion: bool = True


class Tour:
    """Circular doubly linked tour with point and segment indexes.

    Segment ``p.id`` is the edge from ``p`` to ``p.next``; a one-point tour
    holds the degenerate segment from the point to itself.
    """

    def __init__(self, circles: dict[int, Circle] | list[Circle], params: Optional[BuildParams] = None,
                 capacity: int = 64, trace: Optional[Callable] = None):
        self.circles = circles
        self.params = params or BuildParams()
        self.point_index = RTree(capacity=capacity)
        self.segment_index = RTree(capacity=capacity, segments=True)
        self.assignment: dict[int, TourPoint] = {}
        self.head: Optional[TourPoint] = None
        self.size = 0
        self._next_id = 0
        self.stats = TourStats()
        self.pending: list[TourPoint] = []
        self.budget = self.params.reinsertion_budget
        self.trace = trace
        self._by_id: dict[int, TourPoint] = {}

    # -- structure ---------------------------------------------------------

    def _new_point(self, x: float, y: float) -> TourPoint:
        p = TourPoint(self._next_id, x, y)
        self._next_id += 1
        self._by_id[p.id] = p
        return p

    def _put_segment(self, p: TourPoint) -> None:
        q = p.next
        self.segment_index.insert_segment(p.id, p.x, p.y, q.x, q.y)

    def add_first(self, x: float, y: float) -> TourPoint:
        if self.size:
            raise RuntimeError("tour already started")
        p = self._new_point(x, y)
        self.head = p
        self.size = 1
        self.point_index.insert_point(p.id, x, y)
        self._put_segment(p)
        return p

    def splice_after(self, a: TourPoint, x: float, y: float) -> TourPoint:
        p = self._new_point(x, y)
        b = a.next
        self.segment_index.delete(a.id)
        p.prev = a
        p.next = b
        a.next = p
        b.prev = p
        self.size += 1
        self.point_index.insert_point(p.id, x, y)
        self._put_segment(a)
        self._put_segment(p)
        return p

    def remove_point(self, p: TourPoint) -> None:
        """Unlink ``p`` and repair both indexes; its circles become unassigned."""
        for cid in p.covered:
            if self.assignment.get(cid) is p:
                del self.assignment[cid]
        self.point_index.delete(p.id)
        self.segment_index.delete(p.id)
        del self._by_id[p.id]
        p.alive = False
        if self.size == 1:
            self.head = None
            self.size = 0
            return
        a = p.prev
        b = p.next
        self.segment_index.delete(a.id)
        a.next = b
        b.prev = a
        self.size -= 1
        if self.head is p:
            self.head = b
        self._put_segment(a)

    def move_point(self, p: TourPoint, x: float, y: float) -> None:
        self.point_index.delete(p.id)
        self.segment_index.delete(p.id)
        if p.prev is not p:
            self.segment_index.delete(p.prev.id)
        p.x = x
        p.y = y
        self.point_index.insert_point(p.id, x, y)
        self._put_segment(p)
        if p.prev is not p:
            self._put_segment(p.prev)

    def assign(self, cid: int, p: TourPoint) -> None:
        p.covered[cid] = None
        self.assignment[cid] = p

    def unassign(self, cid: int) -> TourPoint:
        p = self.assignment.pop(cid)
        del p.covered[cid]
        return p

    # -- queries -----------------------------------------------------------

    def points(self, start: Optional[TourPoint] = None) -> Iterator[TourPoint]:
        if self.size == 0:
            return
        p = start or self.head
        for _ in range(self.size):
            yield p
            p = p.next

    def positions(self, start: Optional[TourPoint] = None) -> list[tuple[float, float]]:
        return [(p.x, p.y) for p in self.points(start)]

    def length(self) -> float:
        return tour_length(self.positions())

    def nearest_point(self, x: float, y: float) -> tuple[Optional[TourPoint], float]:
        ids, dist = self.point_index.nearest(x, y, 1)
        if len(ids) == 0:
            return None, math.inf
        return self._by_id[int(ids[0])], float(dist[0])

    def check(self) -> None:
        """Assert linkage and index consistency (test helper)."""
        seen = list(self.points())
        assert len(seen) == self.size == len(self.point_index) == len(self.segment_index)
        for p in seen:
            assert p.alive and p.next.prev is p
            assert self.segment_index.segment(p.id) == (p.x, p.y, p.next.x, p.next.y)
            assert tuple(self.point_index.rect(p.id))[:2] == (p.x, p.y)
            for cid in p.covered:
                assert self.assignment[cid] is p
        self.point_index.check()
        self.segment_index.check()


def tour_length(positions) -> float:
    """Closed polygon length; 0 for a single point, twice the edge for two."""
    n = len(positions)
    if n < 2:
        return 0.0
    total = 0.0
    px, py = positions[-1]
    for x, y in positions:
        total += math.hypot(x - px, y - py)
        px, py = x, y
    return total


def start_tour(tour: Tour, cid: int) -> TourPoint:
    """Open the tour with one point at the center of circle ``cid``."""
    c = tour.circles[cid]
    p = tour.add_first(c.x, c.y)
    tour.assign(cid, p)
    p.insert_count = 1
    local_opt.on_insert_energy(tour, p)
    tour.stats.insertions += 1
    return p


def insert_circle(tour: Tour, cid: int, k: Optional[int] = None, *,
                  reinsertion: bool = False) -> tuple[TourPoint, bool]:
    """Give circle ``cid`` a tour point.

    Returns the point and whether the assignment was zero cost.  Reset
    events raised by the energy bookkeeping are queued on ``tour.pending``;
    top-level (non-reinsertion) calls drain that queue before returning.
    """
    if tour.size == 0:
        raise RuntimeError("cannot insert into an empty tour")
    params = tour.params
    c = tour.circles[cid]
    q, dist = tour.nearest_point(c.x, c.y)
    if dist <= c.r + params.eps:
        tour.assign(cid, q)
        target = q
        zero = True
        tour.stats.zero_cost += 1
        delta = 0.0
    else:
        ids, _ = tour.segment_index.nearest_segments(c.x, c.y, k or params.k_segments)
        best = None
        best_delta = math.inf
        reg = tour._by_id
        for sid in ids:
            a = reg[int(sid)]
            b = a.next
            px, py, delta = _alhazen(a.x, a.y, b.x, b.y, c.x, c.y, c.r)
            if delta < best_delta:
                best_delta = delta
                best = (a, px, py)
                if delta == 0.0:
                    break
        a, px, py = best
        delta = best_delta
        if params.newton and delta > 0.0:
            b = a.next
            px, py = _newton(a.x, a.y, b.x, b.y, c.x, c.y, c.r, px, py)
        target = tour.splice_after(a, px, py)
        tour.assign(cid, target)
        zero = False
        tour.stats.new_points += 1
    target.insert_count += 1
    if reinsertion:
        tour.stats.reinserted_circles += 1
    else:
        tour.stats.insertions += 1
    if tour.trace is not None:
        tour.trace({"event": "insert", "circle": cid, "point": target.id, "zero_cost": zero,
                    "delta": delta, "x": target.x, "y": target.y, "reinsertion": reinsertion})
    if params.reinsertion:
        tour.pending.extend(local_opt.on_insert_energy(tour, target))
    if params.reoptimize:
        local_opt.maybe_reoptimize(tour, target)
    if not reinsertion:
        local_opt.process_resets(tour, _reinsert)
    return target, zero


def _reinsert(tour: Tour, cid: int) -> None:
    insert_circle(tour, cid, reinsertion=True)


def expand_node(tour: Tour, node: ClusterNode, heap: Optional[list] = None) -> None:
    """Replace an internal node's proxy circle by its two generating circles."""
    if node.is_leaf:
        raise ValueError("cannot expand a leaf")
    p = tour.unassign(node.id)
    placeholder = None
    if not p.covered:
        if tour.size > 1:
            tour.remove_point(p)
        else:
            placeholder = p  # keep the tour non-empty until a child lands
    if tour.trace is not None:
        tour.trace({"event": "expand", "node": node.id, "point": p.id,
                    "point_removed": not p.alive})
    tour.stats.expansions += 1
    for child in (node.left, node.right):
        insert_circle(tour, child.id)
        if heap is not None and not child.is_leaf:
            heapq.heappush(heap, (-child.merge_distance, child.id, child))
    if placeholder is not None and placeholder.alive and not placeholder.covered:
        tour.remove_point(placeholder)


def build_tour(tree: ClusterTree, params: Optional[BuildParams] = None,
               trace: Optional[Callable] = None) -> Tour:
    """Expand ``tree`` from the root, largest merge distance first."""
    circles = [nd.circle for nd in tree.nodes]
    tour = Tour(circles, params, capacity=2 * len(circles) + 8, trace=trace)
    root = tree.root
    start_tour(tour, root.id)
    heap: list = []
    if not root.is_leaf:
        heap.append((-root.merge_distance, root.id, root))
    while heap:
        _, _, node = heapq.heappop(heap)
        expand_node(tour, node, heap)
    return tour
