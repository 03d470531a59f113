"""End-to-end solve: preprocess, cluster, construct, map back, restarts."""

from __future__ import annotations

import gc
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .clustering import DEFAULT_K_CLUSTER, build_tree, preprocess
from .construction import DEFAULT_K_SEGMENTS, BuildParams, TourStats, build_tour, tour_length
from .geometry import centroid, geo_epsilon, rotate_points
from .instance_io import Instance, Solution


@dataclass
class SolveParams:
    seed: int = 0
    restarts: int = 1
    k_cluster: int = DEFAULT_K_CLUSTER
    k_segments: int = DEFAULT_K_SEGMENTS
    newton: bool = False
    reinsertion_budget_factor: float = 2.0   # inf disables the budget
    trace: Optional[str] = None

    def __post_init__(self):
        if self.restarts < 1 or self.k_cluster < 1 or self.k_segments < 1:
            raise ValueError("restarts, k_cluster and k_segments must be >= 1")
        if not self.reinsertion_budget_factor >= 0:
            raise ValueError("reinsertion_budget_factor must be >= 0")

    def solution_params(self) -> dict:
        factor = self.reinsertion_budget_factor
        return {
            "k_cluster": self.k_cluster,
            "k_segments": self.k_segments,
            "newton": self.newton,
            "reinsertion_budget_factor": factor if math.isfinite(factor) else None,
        }


@dataclass
class SolveResult:
    solution: Solution
    tour_points: int
    timings: dict = field(default_factory=dict)     # seconds per phase
    stats: TourStats = field(default_factory=TourStats)
    kept: int = 0

    @property
    def length(self) -> float:
        return self.solution.length


def solve_once(instance: Instance, params: SolveParams, seed: int,
               trace: Optional[Callable] = None, quiet_gc: bool = False) -> SolveResult:
    """One seeded run of the heuristic."""
    circles = instance.circles
    if not circles:
        raise ValueError("empty instance")
    rng = np.random.default_rng(seed)
    eps = geo_epsilon(circles)
    budget = params.reinsertion_budget_factor * len(circles)
    build = BuildParams(k_segments=params.k_segments, newton=params.newton,
                        reinsertion_budget=budget, eps=eps)

    gc_was_enabled = gc.isenabled()
    if quiet_gc:
        gc.collect()
        gc.disable()
    try:
        t0 = time.perf_counter()
        pre = preprocess(circles, rng)
        t1 = time.perf_counter()
        tree = build_tree(pre.kept, rng, params.k_cluster, trace=trace)
        t2 = time.perf_counter()
        tour = build_tour(tree, build, trace=trace)
        t3 = time.perf_counter()
    finally:
        if quiet_gc and gc_was_enabled:
            gc.enable()

    # leaves carry ids 0..m-1 in kept order
    first = pre.kept_index.index(pre.removed_map.get(0, 0))
    start = tour.assignment[first]
    order = list(tour.points(start))
    slot = {p.id: i for i, p in enumerate(order)}
    rotated = [(p.x, p.y) for p in order]
    positions = [tuple(p) for p in rotate_points(rotated, -pre.rotation, centroid(circles))] \
        if pre.rotation else rotated
    assignment = [0] * len(circles)
    for leaf, orig in enumerate(pre.kept_index):
        assignment[orig] = slot[tour.assignment[leaf].id]
    for orig, survivor in pre.removed_map.items():
        assignment[orig] = assignment[survivor]
    positions = [(float(x), float(y)) for x, y in positions]
    solution = Solution(
        instance=instance.name,
        tour=positions,
        assignment=assignment,
        length=tour_length(positions),
        seed=int(seed),
        params=params.solution_params(),
    )
    timings = {"preprocess": t1 - t0, "cluster": t2 - t1, "construct": t3 - t2, "total": t3 - t0}
    return SolveResult(solution, len(order), timings, tour.stats, kept=len(pre.kept))


def solve(instance: Instance, params: Optional[SolveParams] = None,
          trace: Optional[Callable] = None) -> tuple[SolveResult, list[SolveResult]]:
    """Best of ``params.restarts`` runs with seeds ``seed, seed + 1, ...``.

    Ties in length go to the earlier seed.
    """
    params = params or SolveParams()
    runs = [solve_once(instance, params, params.seed + i, trace=trace)
            for i in range(params.restarts)]
    best = min(runs, key=lambda r: r.solution.length)
    return best, runs


def params_from_dict(d: dict) -> SolveParams:
    data = dict(d)
    if data.get("reinsertion_budget_factor") is None:
        data["reinsertion_budget_factor"] = math.inf
    return SolveParams(**{k: v for k, v in data.items() if k in SolveParams.__dataclass_fields__})


__all__ = ["SolveParams", "SolveResult", "solve", "solve_once", "params_from_dict"]
