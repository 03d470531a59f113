"""Dynamic R*-tree over axis-aligned rectangles.

The tree lives in a handful of flat numpy arrays so that every operation is a
single call into a compiled kernel (see :mod:`cetsp._accel`).  Entry ids are
caller-chosen non-negative integers; they index directly into the per-entry
arrays, which grow on demand.

Node layout::

    ni[node, 0]        number of children
    ni[node, 1]        parent node (-1 for the root)
    ni[node, 2]        1 for leaves, 0 for internal nodes
    ni[node, 3 + s]    child s (node index, or entry id in a leaf)
    nf[node, s, :]     bounding box (xmin, ymin, xmax, ymax) of child s

Splits follow the R* topology heuristic (axis by minimum margin sum,
distribution by minimum overlap then area); subtree choice uses least area
enlargement.  Forced reinsertion is not performed; deletions condense the
tree Guttman-style and reinsert orphaned entries.
"""

from __future__ import annotations

import heapq
import math
from typing import NamedTuple

import numpy as np

from ._accel import njit

MAX_ENTRIES = 16
MIN_ENTRIES = 6

_CNT = 0
_PAR = 1
_LEAF = 2
_CH = 3

_M_ROOT = 0
_M_NFREE = 1
_M_USED = 2
_M_HEIGHT = 3
_M_LIVE = 4


class Rect(NamedTuple):
    xmin: float
    ymin: float
    xmax: float
    ymax: float


class IndexEntry(NamedTuple):
    id: int
    rect: Rect
    distance: float = 0.0


# ---------------------------------------------------------------- kernels


@njit
def _alloc_node(ni, meta, free, leaf):
    if meta[_M_NFREE] > 0:
        meta[_M_NFREE] -= 1
        node = free[meta[_M_NFREE]]
    else:
        node = meta[_M_USED]
        meta[_M_USED] += 1
    ni[node, _CNT] = 0
    ni[node, _PAR] = -1
    ni[node, _LEAF] = leaf
    return node


@njit
def _free_node(ni, meta, free, node):
    ni[node, _CNT] = 0
    free[meta[_M_NFREE]] = node
    meta[_M_NFREE] += 1


@njit
def _node_box(ni, nf, node):
    x0 = np.inf
    y0 = np.inf
    x1 = -np.inf
    y1 = -np.inf
    for s in range(ni[node, _CNT]):
        if nf[node, s, 0] < x0:
            x0 = nf[node, s, 0]
        if nf[node, s, 1] < y0:
            y0 = nf[node, s, 1]
        if nf[node, s, 2] > x1:
            x1 = nf[node, s, 2]
        if nf[node, s, 3] > y1:
            y1 = nf[node, s, 3]
    return x0, y0, x1, y1


@njit
def _slot_of(ni, node, child):
    for s in range(ni[node, _CNT]):
        if ni[node, _CH + s] == child:
            return s
    return -1


@njit
def _remove_slot(ni, nf, node, s):
    last = ni[node, _CNT] - 1
    if s != last:
        ni[node, _CH + s] = ni[node, _CH + last]
        for j in range(4):
            nf[node, s, j] = nf[node, last, j]
    ni[node, _CNT] = last


@njit
def _set_slot_box(nf, node, s, x0, y0, x1, y1):
    nf[node, s, 0] = x0
    nf[node, s, 1] = y0
    nf[node, s, 2] = x1
    nf[node, s, 3] = y1


@njit
def _choose_leaf(ni, nf, root, x0, y0, x1, y1):
    node = root
    while ni[node, _LEAF] == 0:
        best = 0
        best_enl = np.inf
        best_area = np.inf
        for s in range(ni[node, _CNT]):
            bx0 = nf[node, s, 0]
            by0 = nf[node, s, 1]
            bx1 = nf[node, s, 2]
            by1 = nf[node, s, 3]
            area = (bx1 - bx0) * (by1 - by0)
            ux0 = bx0 if bx0 < x0 else x0
            uy0 = by0 if by0 < y0 else y0
            ux1 = bx1 if bx1 > x1 else x1
            uy1 = by1 if by1 > y1 else y1
            enl = (ux1 - ux0) * (uy1 - uy0) - area
            if enl < best_enl or (enl == best_enl and area < best_area):
                best = s
                best_enl = enl
                best_area = area
        node = ni[node, _CH + best]
    return node


@njit
def _prefix_suffix(boxes, order):
    n = order.shape[0]
    pre = np.empty((n, 4))
    suf = np.empty((n, 4))
    for i in range(n):
        b = boxes[order[i]]
        if i == 0:
            for j in range(4):
                pre[i, j] = b[j]
        else:
            pre[i, 0] = min(pre[i - 1, 0], b[0])
            pre[i, 1] = min(pre[i - 1, 1], b[1])
            pre[i, 2] = max(pre[i - 1, 2], b[2])
            pre[i, 3] = max(pre[i - 1, 3], b[3])
    for i in range(n - 1, -1, -1):
        b = boxes[order[i]]
        if i == n - 1:
            for j in range(4):
                suf[i, j] = b[j]
        else:
            suf[i, 0] = min(suf[i + 1, 0], b[0])
            suf[i, 1] = min(suf[i + 1, 1], b[1])
            suf[i, 2] = max(suf[i + 1, 2], b[2])
            suf[i, 3] = max(suf[i + 1, 3], b[3])
    return pre, suf


@njit
def _split(ni, nf, ent_leaf, meta, free, node):
    n = ni[node, _CNT]
    lo = MIN_ENTRIES
    boxes = nf[node, :n, :].copy()
    kids = ni[node, _CH:_CH + n].copy()

    best_axis = 0
    best_margin = np.inf
    for axis in range(2):
        margin = 0.0
        for edge in range(2):
            order = np.argsort(boxes[:, axis + 2 * edge], kind="mergesort")
            pre, suf = _prefix_suffix(boxes, order)
            for k in range(lo, n - lo + 1):
                a = pre[k - 1]
                b = suf[k]
                margin += (a[2] - a[0]) + (a[3] - a[1]) + (b[2] - b[0]) + (b[3] - b[1])
        if margin < best_margin:
            best_margin = margin
            best_axis = axis

    best_order = np.empty(n, dtype=np.int64)
    best_k = lo
    best_overlap = np.inf
    best_area = np.inf
    for edge in range(2):
        order = np.argsort(boxes[:, best_axis + 2 * edge], kind="mergesort")
        pre, suf = _prefix_suffix(boxes, order)
        for k in range(lo, n - lo + 1):
            a = pre[k - 1]
            b = suf[k]
            w = min(a[2], b[2]) - max(a[0], b[0])
            h = min(a[3], b[3]) - max(a[1], b[1])
            overlap = w * h if (w > 0.0 and h > 0.0) else 0.0
            area = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1])
            if overlap < best_overlap or (overlap == best_overlap and area < best_area):
                best_overlap = overlap
                best_area = area
                best_k = k
                for i in range(n):
                    best_order[i] = order[i]

    leaf = ni[node, _LEAF]
    sib = _alloc_node(ni, meta, free, leaf)
    for i in range(best_k):
        src = best_order[i]
        ni[node, _CH + i] = kids[src]
        for j in range(4):
            nf[node, i, j] = boxes[src, j]
    ni[node, _CNT] = best_k
    for i in range(best_k, n):
        src = best_order[i]
        t = i - best_k
        child = kids[src]
        ni[sib, _CH + t] = child
        for j in range(4):
            nf[sib, t, j] = boxes[src, j]
        if leaf == 1:
            ent_leaf[child] = sib
        else:
            ni[child, _PAR] = sib
    ni[sib, _CNT] = n - best_k
    return sib


@njit
def _adjust_up(ni, nf, ent_leaf, meta, free, node):
    while True:
        root = meta[_M_ROOT]
        if ni[node, _CNT] > MAX_ENTRIES:
            sib = _split(ni, nf, ent_leaf, meta, free, node)
            ax0, ay0, ax1, ay1 = _node_box(ni, nf, node)
            bx0, by0, bx1, by1 = _node_box(ni, nf, sib)
            if node == root:
                new_root = _alloc_node(ni, meta, free, 0)
                ni[new_root, _CH] = node
                ni[new_root, _CH + 1] = sib
                _set_slot_box(nf, new_root, 0, ax0, ay0, ax1, ay1)
                _set_slot_box(nf, new_root, 1, bx0, by0, bx1, by1)
                ni[new_root, _CNT] = 2
                ni[node, _PAR] = new_root
                ni[sib, _PAR] = new_root
                meta[_M_ROOT] = new_root
                meta[_M_HEIGHT] += 1
                return
            parent = ni[node, _PAR]
            s = _slot_of(ni, parent, node)
            _set_slot_box(nf, parent, s, ax0, ay0, ax1, ay1)
            c = ni[parent, _CNT]
            ni[parent, _CH + c] = sib
            _set_slot_box(nf, parent, c, bx0, by0, bx1, by1)
            ni[parent, _CNT] = c + 1
            ni[sib, _PAR] = parent
            node = parent
        else:
            if node == root:
                return
            parent = ni[node, _PAR]
            s = _slot_of(ni, parent, node)
            x0, y0, x1, y1 = _node_box(ni, nf, node)
            if (nf[parent, s, 0] == x0 and nf[parent, s, 1] == y0
                    and nf[parent, s, 2] == x1 and nf[parent, s, 3] == y1):
                return
            _set_slot_box(nf, parent, s, x0, y0, x1, y1)
            node = parent


@njit
def _place(ni, nf, ent_leaf, meta, free, eid, x0, y0, x1, y1):
    leaf = _choose_leaf(ni, nf, meta[_M_ROOT], x0, y0, x1, y1)
    c = ni[leaf, _CNT]
    ni[leaf, _CH + c] = eid
    _set_slot_box(nf, leaf, c, x0, y0, x1, y1)
    ni[leaf, _CNT] = c + 1
    ent_leaf[eid] = leaf
    _adjust_up(ni, nf, ent_leaf, meta, free, leaf)


@njit
def _insert(ni, nf, ent_leaf, ent_box, meta, free, eid, x0, y0, x1, y1):
    ent_box[eid, 0] = x0
    ent_box[eid, 1] = y0
    ent_box[eid, 2] = x1
    ent_box[eid, 3] = y1
    meta[_M_LIVE] += 1
    _place(ni, nf, ent_leaf, meta, free, eid, x0, y0, x1, y1)


@njit
def _shrink_root(ni, meta, free):
    root = meta[_M_ROOT]
    while ni[root, _LEAF] == 0 and ni[root, _CNT] == 1:
        child = ni[root, _CH]
        _free_node(ni, meta, free, root)
        ni[child, _PAR] = -1
        root = child
        meta[_M_ROOT] = root
        meta[_M_HEIGHT] -= 1


@njit
def _delete(ni, nf, ent_leaf, ent_box, meta, free, eid):
    leaf = ent_leaf[eid]
    s = _slot_of(ni, leaf, eid)
    _remove_slot(ni, nf, leaf, s)
    ent_leaf[eid] = -1
    meta[_M_LIVE] -= 1

    orphans = [leaf]
    orphans.pop()
    node = leaf
    while node != meta[_M_ROOT]:
        parent = ni[node, _PAR]
        ps = _slot_of(ni, parent, node)
        if ni[node, _CNT] < MIN_ENTRIES:
            _remove_slot(ni, nf, parent, ps)
            orphans.append(node)
        else:
            x0, y0, x1, y1 = _node_box(ni, nf, node)
            _set_slot_box(nf, parent, ps, x0, y0, x1, y1)
        node = parent

    pending = [eid]
    pending.pop()
    for o in orphans:
        stack = [o]
        while len(stack) > 0:
            nd = stack.pop()
            cnt = ni[nd, _CNT]
            if ni[nd, _LEAF] == 1:
                for j in range(cnt):
                    pending.append(ni[nd, _CH + j])
            else:
                for j in range(cnt):
                    stack.append(ni[nd, _CH + j])
            _free_node(ni, meta, free, nd)
    _shrink_root(ni, meta, free)
    for e in pending:
        _place(ni, nf, ent_leaf, meta, free, e,
               ent_box[e, 0], ent_box[e, 1], ent_box[e, 2], ent_box[e, 3])


@njit
def _rect_dist2(nf, node, s, qx, qy):
    dx = 0.0
    if qx < nf[node, s, 0]:
        dx = nf[node, s, 0] - qx
    elif qx > nf[node, s, 2]:
        dx = qx - nf[node, s, 2]
    dy = 0.0
    if qy < nf[node, s, 1]:
        dy = nf[node, s, 1] - qy
    elif qy > nf[node, s, 3]:
        dy = qy - nf[node, s, 3]
    return dx * dx + dy * dy


@njit
def _seg_dist2(seg, eid, qx, qy):
    ax = seg[eid, 0]
    ay = seg[eid, 1]
    dx = seg[eid, 2] - ax
    dy = seg[eid, 3] - ay
    den = dx * dx + dy * dy
    t = 0.0
    if den > 0.0:
        t = ((qx - ax) * dx + (qy - ay) * dy) / den
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    ex = ax + t * dx - qx
    ey = ay + t * dy - qy
    return ex * ex + ey * ey


@njit
def _knn(ni, nf, seg, meta, qx, qy, k, exact):
    # Best-first search.  Heap items are (dist2, kind, id) with kind 0 = node,
    # 1 = entry ranked by its rectangle, 2 = entry ranked by exact segment
    # distance.  Nodes sort before entries at equal distance, so entries with
    # equal distance surface in id order.
    out_ids = np.empty(k, dtype=np.int64)
    out_d = np.empty(k)
    found = 0
    heap = [(0.0, 0, meta[_M_ROOT])]
    while len(heap) > 0 and found < k:
        item = heapq.heappop(heap)
        d = item[0]
        kind = item[1]
        idx = item[2]
        if kind == 0:
            leaf = ni[idx, _LEAF]
            for s in range(ni[idx, _CNT]):
                dd = _rect_dist2(nf, idx, s, qx, qy)
                if leaf == 1:
                    heapq.heappush(heap, (dd, 1, ni[idx, _CH + s]))
                else:
                    heapq.heappush(heap, (dd, 0, ni[idx, _CH + s]))
        elif kind == 1 and exact:
            heapq.heappush(heap, (_seg_dist2(seg, idx, qx, qy), 2, idx))
        else:
            out_ids[found] = idx
            out_d[found] = math.sqrt(d)
            found += 1
    return out_ids[:found], out_d[:found]


@njit
def _covering(ni, nf, meta, x0, y0, x1, y1):
    out = [meta[_M_ROOT]]
    out.pop()
    stack = [meta[_M_ROOT]]
    while len(stack) > 0:
        node = stack.pop()
        leaf = ni[node, _LEAF]
        for s in range(ni[node, _CNT]):
            if (nf[node, s, 0] <= x0 and nf[node, s, 1] <= y0
                    and nf[node, s, 2] >= x1 and nf[node, s, 3] >= y1):
                if leaf == 1:
                    out.append(ni[node, _CH + s])
                else:
                    stack.append(ni[node, _CH + s])
    res = np.empty(len(out), dtype=np.int64)
    for i in range(len(out)):
        res[i] = out[i]
    res.sort()
    return res


@njit
def _check(ni, nf, ent_leaf, meta):
    """Structural self-check; returns the number of reachable entries or -1."""
    root = meta[_M_ROOT]
    total = 0
    stack = [root]
    depth_of_leaf = -1
    depths = [1]
    while len(stack) > 0:
        node = stack.pop()
        depth = depths.pop()
        cnt = ni[node, _CNT]
        if node != root and (cnt < MIN_ENTRIES or cnt > MAX_ENTRIES):
            return -1
        if ni[node, _LEAF] == 1:
            if depth_of_leaf == -1:
                depth_of_leaf = depth
            elif depth != depth_of_leaf:
                return -1
            for s in range(cnt):
                if ent_leaf[ni[node, _CH + s]] != node:
                    return -1
            total += cnt
        else:
            for s in range(cnt):
                child = ni[node, _CH + s]
                if ni[child, _PAR] != node:
                    return -1
                x0, y0, x1, y1 = _node_box(ni, nf, child)
                if ni[child, _CNT] > 0 and (
                        x0 != nf[node, s, 0] or y0 != nf[node, s, 1]
                        or x1 != nf[node, s, 2] or y1 != nf[node, s, 3]):
                    return -1
                stack.append(child)
                depths.append(depth + 1)
    if depth_of_leaf != -1 and depth_of_leaf != meta[_M_HEIGHT]:
        return -1
    return total


# ---------------------------------------------------------------- wrapper


class RTree:
    """Dynamic R*-tree keyed by integer ids.

    With ``segments=True`` each entry also carries a line segment; its
    rectangle is the segment's bounding box and :meth:`knn_segments` ranks by
    exact point-to-segment distance.
    """

    def __init__(self, capacity: int = 64, segments: bool = False):
        capacity = max(int(capacity), 8)
        ncap = capacity // (MIN_ENTRIES - 1) + 64
        self._ni = np.zeros((ncap, _CH + MAX_ENTRIES + 1), dtype=np.int64)
        self._nf = np.zeros((ncap, MAX_ENTRIES + 1, 4))
        self._free = np.zeros(ncap, dtype=np.int64)
        self._meta = np.zeros(5, dtype=np.int64)
        self._ent_leaf = np.full(capacity, -1, dtype=np.int64)
        self._ent_box = np.zeros((capacity, 4))
        self._segments = segments
        self._seg = np.zeros((capacity if segments else 1, 4))
        self._ni[0, _LEAF] = 1
        self._ni[0, _PAR] = -1
        self._meta[_M_ROOT] = 0
        self._meta[_M_USED] = 1
        self._meta[_M_HEIGHT] = 1

    def __len__(self) -> int:
        return int(self._meta[_M_LIVE])

    def __contains__(self, eid) -> bool:
        return 0 <= eid < self._ent_leaf.shape[0] and self._ent_leaf[eid] >= 0

    @property
    def height(self) -> int:
        return int(self._meta[_M_HEIGHT])

    def _grow_ids(self, eid: int) -> None:
        cap = self._ent_leaf.shape[0]
        if eid < cap:
            return
        new = max(2 * cap, eid + 1)
        leaf = np.full(new, -1, dtype=np.int64)
        leaf[:cap] = self._ent_leaf
        box = np.zeros((new, 4))
        box[:cap] = self._ent_box
        self._ent_leaf, self._ent_box = leaf, box
        if self._segments:
            seg = np.zeros((new, 4))
            seg[:cap] = self._seg
            self._seg = seg

    def _reserve_nodes(self) -> None:
        # In-use nodes never exceed live/(m-1) + height + 1, so this bound
        # holds through any single insert or delete (incl. reinsertions).
        meta = self._meta
        need = (int(meta[_M_LIVE]) + 1) // (MIN_ENTRIES - 1) + 2 * int(meta[_M_HEIGHT]) + 16
        cap = self._ni.shape[0]
        if need <= cap:
            return
        new = max(2 * cap, need)
        ni = np.zeros((new, self._ni.shape[1]), dtype=np.int64)
        ni[:cap] = self._ni
        nf = np.zeros((new, MAX_ENTRIES + 1, 4))
        nf[:cap] = self._nf
        free = np.zeros(new, dtype=np.int64)
        free[:cap] = self._free
        self._ni, self._nf, self._free = ni, nf, free

    def insert(self, eid: int, rect) -> None:
        """Insert entry ``eid`` with bounding rectangle ``rect``."""
        eid = int(eid)
        if eid < 0:
            raise ValueError(f"entry ids must be non-negative, got {eid}")
        self._grow_ids(eid)
        if self._ent_leaf[eid] >= 0:
            raise KeyError(f"duplicate entry id {eid}")
        x0, y0, x1, y1 = (float(v) for v in rect)
        if not (x0 <= x1 and y0 <= y1):
            raise ValueError(f"malformed rectangle {rect!r}")
        self._reserve_nodes()
        _insert(self._ni, self._nf, self._ent_leaf, self._ent_box, self._meta,
                self._free, eid, x0, y0, x1, y1)

    def insert_point(self, eid: int, x: float, y: float) -> None:
        self.insert(eid, (x, y, x, y))

    def insert_segment(self, eid: int, ax: float, ay: float, bx: float, by: float) -> None:
        if not self._segments:
            raise TypeError("index was not created with segments=True")
        eid = int(eid)
        self._grow_ids(eid)
        self._seg[eid, 0] = ax
        self._seg[eid, 1] = ay
        self._seg[eid, 2] = bx
        self._seg[eid, 3] = by
        self.insert(eid, (min(ax, bx), min(ay, by), max(ax, bx), max(ay, by)))

    def delete(self, eid: int) -> None:
        """Remove entry ``eid``; raises ``KeyError`` when it is not live."""
        eid = int(eid)
        if eid not in self:
            raise KeyError(f"unknown entry id {eid}")
        self._reserve_nodes()
        _delete(self._ni, self._nf, self._ent_leaf, self._ent_box, self._meta,
                self._free, eid)

    def rect(self, eid: int) -> Rect:
        if eid not in self:
            raise KeyError(f"unknown entry id {eid}")
        return Rect(*(float(v) for v in self._ent_box[eid]))

    def segment(self, eid: int) -> tuple[float, float, float, float]:
        if eid not in self:
            raise KeyError(f"unknown entry id {eid}")
        return tuple(float(v) for v in self._seg[eid])

    def nearest(self, x: float, y: float, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Ids and distances of the ``k`` rectangles nearest to ``(x, y)``."""
        return _knn(self._ni, self._nf, self._seg, self._meta, float(x), float(y), int(k), False)

    def nearest_segments(self, x: float, y: float, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Ids and exact distances of the ``k`` segments nearest to ``(x, y)``."""
        if not self._segments:
            raise TypeError("index was not created with segments=True")
        return _knn(self._ni, self._nf, self._seg, self._meta, float(x), float(y), int(k), True)

    def knn_rects(self, q, k: int) -> list[IndexEntry]:
        if k < 1:
            raise ValueError("k must be >= 1")
        ids, dist = self.nearest(q[0], q[1], k)
        return [IndexEntry(int(i), self.rect(int(i)), float(d)) for i, d in zip(ids, dist)]

    def knn_segments(self, q, k: int) -> list[IndexEntry]:
        if k < 1:
            raise ValueError("k must be >= 1")
        ids, dist = self.nearest_segments(q[0], q[1], k)
        return [IndexEntry(int(i), self.rect(int(i)), float(d)) for i, d in zip(ids, dist)]

    def covering(self, rect) -> np.ndarray:
        x0, y0, x1, y1 = (float(v) for v in rect)
        return _covering(self._ni, self._nf, self._meta, x0, y0, x1, y1)

    def covering_rects(self, rect) -> list[IndexEntry]:
        return [IndexEntry(int(i), self.rect(int(i))) for i in self.covering(rect)]

    def check(self) -> None:
        """Raise ``AssertionError`` if the tree structure is inconsistent."""
        total = _check(self._ni, self._nf, self._ent_leaf, self._meta)
        if total != len(self):
            raise AssertionError(f"R-tree corrupt: reached {total} of {len(self)} entries")
