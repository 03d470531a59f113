"""Energy-driven reinsertion, scheduled point reoptimization, gadget process."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np

from ._accel import njit
from .geometry import _reoptimize

if TYPE_CHECKING:
    from .construction import Tour, TourPoint

ENERGY_GAIN = 3
NEIGHBOR_DRAIN = 1


@dataclass(frozen=True)
class EnergyPolicy:
    gain: int = ENERGY_GAIN
    neighbor_drain: int = NEIGHBOR_DRAIN
    reinsertion_budget: float = float("inf")


def is_power_of_two(k: int) -> bool:
    return k > 0 and (k & (k - 1)) == 0


def on_insert_energy(tour: "Tour", point: "TourPoint") -> list["TourPoint"]:
    """Credit the receiving point and drain its tour neighbors.

    Returns neighbors whose energy just dropped to zero or below and that are
    not already queued for reinsertion.
    """
    point.energy += ENERGY_GAIN
    resets = []
    prev = point.prev
    nxt = point.next
    for nb in (prev,) if prev is nxt else (prev, nxt):
        if nb is point:
            continue
        nb.energy -= NEIGHBOR_DRAIN
        if nb.energy <= 0 and not nb.pending:
            nb.pending = True
            resets.append(nb)
    return resets


def reinsert_point(tour: "Tour", point: "TourPoint", insert: Callable) -> bool:
    """Remove ``point`` and reinsert each circle it covered.

    ``insert(tour, cid)`` performs a single circle insertion.  Returns False
    when the event was dropped (budget exhausted or nothing to reinsert
    into).
    """
    if not point.alive or tour.size < 2:
        return False
    circles = list(point.covered)
    if len(circles) > tour.budget:
        tour.stats.dropped_resets += 1
        return False
    tour.budget -= len(circles)
    tour.stats.reinsertion_events += 1
    if tour.trace is not None:
        tour.trace({"event": "reinsert", "point": point.id, "circles": circles})
    tour.remove_point(point)
    for cid in circles:
        insert(tour, cid)
    return True


def process_resets(tour: "Tour", insert: Callable) -> None:
    """Drain the reset stack depth first; cascades land on the same stack."""
    pending = tour.pending
    while pending:
        p = pending.pop()
        p.pending = False
        if p.alive and p.energy <= 0:
            reinsert_point(tour, p, insert)


def maybe_reoptimize(tour: "Tour", point: "TourPoint") -> bool:
    """Reoptimize ``point`` when its insertion count is a power of two."""
    if not is_power_of_two(point.insert_count) or tour.size < 2:
        return False
    circles = tour.circles
    disks = [circles[cid] for cid in point.covered]
    tour.stats.reoptimizations += 1
    tour.stats.reopt_work += len(disks)
    a = point.prev
    b = point.next
    x, y = _reoptimize(a.x, a.y, b.x, b.y, point.x, point.y, disks)
    if x != point.x or y != point.y:
        tour.move_point(point, x, y)
        return True
    return False


# ------------------------------------------------------------ gadget process

_MASK32 = 0xFFFFFFFF


def _seed_state(seed: int) -> int:
    # splitmix64 finalizer, folded to a non-zero 32-bit xorshift state
    z = (int(seed) + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    z ^= z >> 31
    return (z & _MASK32) or 1


@njit
def _xorshift(state):
    x = state
    x ^= (x << 13) & 0xFFFFFFFF
    x ^= x >> 17
    x ^= (x << 5) & 0xFFFFFFFF
    return x


@njit
def _gadget_kernel(n, state, extra_cap):
    # Update codes on the stack: 0 = insertion, 1 = energy reduction.
    max_nodes = n + extra_cap + 2
    energy = np.zeros(max_nodes, dtype=np.int64)
    weight = np.zeros(max_nodes, dtype=np.int64)
    positive = np.empty(max_nodes, dtype=np.int64)   # nodes with energy > 0
    where = np.full(max_nodes, -1, dtype=np.int64)
    n_pos = 0
    n_nodes = 0
    stack = np.empty(3 * (n + extra_cap) + 3, dtype=np.int8)
    top = 0
    for _ in range(n):
        stack[top] = 1
        stack[top + 1] = 1
        stack[top + 2] = 0
        top += 3
    extra = 0
    worst_ratio_ok = True
    negative = False
    while top > 0:
        top -= 1
        code = stack[top]
        if code == 0:
            state = _xorshift(state)
            choice = state % 3
            if n_nodes == 0 or choice == 0:
                v = n_nodes
                n_nodes += 1
            elif choice == 1 or n_pos == 0:
                state = _xorshift(state)
                v = (state * n_nodes) >> 32
            else:
                v = -1
                for _s in range(4):
                    state = _xorshift(state)
                    cand = positive[(state * n_pos) >> 32]
                    if v < 0 or energy[cand] < energy[v]:
                        v = cand
            if energy[v] == 0:
                positive[n_pos] = v
                where[v] = n_pos
                n_pos += 1
            energy[v] += 3
            weight[v] += 1
        else:
            if n_pos == 0:
                negative = True
                break
            state = _xorshift(state)
            if state & 1:
                v = -1
                for _s in range(4):
                    state = _xorshift(state)
                    cand = positive[(state * n_pos) >> 32]
                    if v < 0 or energy[cand] < energy[v]:
                        v = cand
            else:
                state = _xorshift(state)
                v = positive[(state * n_pos) >> 32]
            energy[v] -= 1
            if energy[v] == 0:
                # leaves the positive set and resets
                i = where[v]
                last = positive[n_pos - 1]
                positive[i] = last
                where[last] = i
                where[v] = -1
                n_pos -= 1
                w = weight[v]
                weight[v] = 0
                if extra + w > extra_cap:
                    return extra + w, False, worst_ratio_ok, negative
                extra += w
                if extra > 2 * n:
                    worst_ratio_ok = False
                for _ in range(w):
                    stack[top] = 1
                    stack[top + 1] = 1
                    stack[top + 2] = 0
                    top += 3
    return extra, not negative, worst_ratio_ok, negative


@dataclass(frozen=True)
class GadgetResult:
    n: int
    seed: int
    extra_ops: int
    terminated: bool
    bound_held: bool


def simulate_gadget(n: int, seed: int = 0, extra_cap: int | None = None) -> GadgetResult:
    """Run the insertion/drain stack process on ``n`` original operations.

    Insertion targets are fresh nodes, uniform existing nodes, or the lowest
    energy of four sampled positive nodes; drains hit either a uniform
    positive node or the lowest of four samples, which steers energy toward
    resets.  The run stops early (``terminated=False``) once more than
    ``extra_cap`` extra operations have been spawned.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if extra_cap is None:
        extra_cap = 10 * n + 10
    extra, terminated, bound_ok, _ = _gadget_kernel(int(n), _seed_state(seed), int(extra_cap))
    extra = int(extra)
    return GadgetResult(n=int(n), seed=int(seed), extra_ops=extra, terminated=bool(terminated),
                        bound_held=bool(bound_ok) and extra <= 2 * n)
