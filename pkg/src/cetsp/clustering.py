"""Preprocessing and closest-pair hierarchical clustering of circles."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .geometry import Circle, disk_contains, effective_distance, proxy_circle, rotate_instance
from .spatial_index import RTree

DEFAULT_K_CLUSTER = 8


@dataclass(eq=False)
class ClusterNode:
    id: int
    circle: Circle
    merge_distance: Optional[float] = None
    left: Optional["ClusterNode"] = None
    right: Optional["ClusterNode"] = None
    original_index: Optional[int] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class ClusterTree:
    root: ClusterNode
    leaf_count: int
    nodes: list[ClusterNode] = field(default_factory=list)

    def leaves(self) -> list[ClusterNode]:
        return [nd for nd in self.nodes if nd.is_leaf]

    def internal_count(self) -> int:
        return sum(1 for nd in self.nodes if not nd.is_leaf)


@dataclass
class Preprocessed:
    kept: list[Circle]
    kept_index: list[int]          # position in the input of each kept circle
    rotation: float
    removed_map: dict[int, int]    # removed input index -> kept input index


def preprocess(circles: Sequence[Circle], rng, rotate: bool = True) -> Preprocessed:
    """Randomly rotate the instance and drop redundant circles.

    A circle whose disk contains another circle's disk is redundant: any tour
    point inside the contained disk also lies inside the container.  Of two
    identical disks the one with the lower input index survives.
    """
    n = len(circles)
    if n == 0:
        raise ValueError("empty instance")
    angle = float(rng.uniform(0.0, 2.0 * math.pi)) if rotate else 0.0
    rotated = rotate_instance(circles, angle)

    index = RTree(capacity=n)
    for i, c in enumerate(rotated):
        index.insert(i, c.bbox())
    order = sorted(range(n), key=lambda i: (-rotated[i].r, i))
    container_of: dict[int, int] = {}
    for i in order:
        c = rotated[i]
        for j in index.covering(c.bbox()):
            j = int(j)
            if j == i or j in container_of:
                continue
            big = rotated[j]
            if not disk_contains(big, c):
                continue
            if disk_contains(c, big) and j < i:
                continue  # identical disks: keep the lower index
            container_of[j] = i

    removed_map: dict[int, int] = {}
    for j in container_of:
        target = container_of[j]
        hops = 0
        while target in container_of:
            target = container_of[target]
            hops += 1
            if hops > n:
                raise RuntimeError("cyclic containment chain")
        removed_map[j] = target
    kept_index = [i for i in range(n) if i not in container_of]
    return Preprocessed(
        kept=[rotated[i] for i in kept_index],
        kept_index=kept_index,
        rotation=angle,
        removed_map=removed_map,
    )


class _Clusterer:
    def __init__(self, circles: Sequence[Circle], rng, k: int, trace: Optional[Callable] = None):
        self.rng = rng
        self.k = k
        self.trace = trace
        n = len(circles)
        self.index = RTree(capacity=2 * n)
        self.nodes: list[ClusterNode] = []
        self.alive: list[bool] = []
        self.version: list[int] = []
        self.heap: list[tuple[float, int, int, int, int]] = []
        for i, c in enumerate(circles):
            self._add(ClusterNode(id=i, circle=Circle(*c), original_index=i))
        self.live = n

    def _add(self, node: ClusterNode) -> None:
        self.nodes.append(node)
        self.alive.append(True)
        self.version.append(0)
        self.index.insert(node.id, node.circle.bbox())

    def refresh_neighbors(self, i: int) -> None:
        """Replace ``i``'s heap entries with pairs to its ``k`` nearest boxes.

        Entries carry the owner's version; bumping it retires the old ones.
        """
        c = self.nodes[i].circle
        self.version[i] += 1
        ver = self.version[i]
        ids, _ = self.index.nearest(c.x, c.y, self.k + 1)
        for j in ids:
            j = int(j)
            if j == i:
                continue
            d = effective_distance(c, self.nodes[j].circle)
            heapq.heappush(self.heap, (d, min(i, j), max(i, j), i, ver))

    def run(self) -> ClusterNode:
        for i in range(len(self.nodes)):
            self.refresh_neighbors(i)
        alive = self.alive
        version = self.version
        while self.live > 1:
            d, i, j, owner, ver = heapq.heappop(self.heap)
            if not alive[owner] or ver != version[owner]:
                continue
            if not (alive[i] and alive[j]):
                # partner merged away: the owner needs fresh candidates
                self.refresh_neighbors(owner)
                continue
            a = self.nodes[i]
            b = self.nodes[j]
            self.index.delete(i)
            self.index.delete(j)
            alive[i] = alive[j] = False
            proxy = proxy_circle(a.circle, b.circle, self.rng)
            node = ClusterNode(id=len(self.nodes), circle=proxy, merge_distance=d, left=a, right=b)
            self._add(node)
            self.live -= 1
            if self.trace is not None:
                self.trace({"event": "merge", "a": i, "b": j, "node": node.id,
                            "x": proxy.x, "y": proxy.y, "r": proxy.r, "d": d})
            if self.live > 1:
                self.refresh_neighbors(node.id)
        return self.nodes[-1]


def build_tree(circles: Sequence[Circle], rng, k: int = DEFAULT_K_CLUSTER,
               trace: Optional[Callable] = None) -> ClusterTree:
    """Merge closest pairs (by effective distance) until one cluster remains.

    Leaves get ids ``0..n-1`` in input order; the i-th merge creates node
    ``n + i``.  ``trace``, when given, receives one dict per merge.
    """
    if not circles:
        raise ValueError("empty instance")
    if k < 1:
        raise ValueError("k must be >= 1")
    clusterer = _Clusterer(circles, rng, k, trace)
    root = clusterer.run()
    return ClusterTree(root=root, leaf_count=len(circles), nodes=clusterer.nodes)
