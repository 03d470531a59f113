"""Runtime benchmark rows and the n log n fit used to judge them."""

from __future__ import annotations

import csv
import math
from statistics import median
from typing import Iterable, NamedTuple, Optional, TextIO

import numpy as np

from .instance_io import gen_random, gen_structured
from .solver import SolveParams, solve_once

CSV_HEADER = ("n", "seed", "phase", "millis", "tour_points", "length")
PHASES = ("preprocess", "cluster", "construct", "total")


class BenchRow(NamedTuple):
    n: int
    seed: int
    phase: str
    millis: float
    tour_points: int
    length: float


class Fit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def make_instance(kind: str, n: int, seed: int, limit: float = 100.0):
    if kind == "random":
        return gen_random(n, limit, seed)
    if kind == "structured":
        return gen_structured(n, seed)
    raise ValueError(f"unknown instance kind {kind!r}")


def warm_up() -> None:
    """Compile (or load cached) kernels so the first timed run is fair."""
    solve_once(gen_structured(64, 0), SolveParams(), 0)


def run_bench(kind: str, ns: Iterable[int], reps: int = 1, seed: int = 0,
              per_phase: bool = False, params: Optional[SolveParams] = None,
              progress=None) -> list[BenchRow]:
    """One row per (n, rep); with ``per_phase`` one row per phase instead.

    Repetition ``i`` uses seed ``seed + i`` for both the generator and the
    solver.  Garbage collection is paused inside each timed solve.
    """
    params = params or SolveParams()
    rows = []
    for n in ns:
        for rep in range(reps):
            s = seed + rep
            inst = make_instance(kind, n, s)
            res = solve_once(inst, params, s, quiet_gc=True)
            for phase in (PHASES if per_phase else ("total",)):
                rows.append(BenchRow(n, s, phase, 1000.0 * res.timings[phase],
                                     res.tour_points, res.length))
            if progress is not None:
                progress(rows[-1])
    return rows


def write_csv(rows: Iterable[BenchRow], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.n, r.seed, r.phase, f"{r.millis:.3f}", r.tour_points, f"{r.length:.6f}"])


def read_csv(fh: TextIO) -> list[BenchRow]:
    out = []
    for rec in csv.DictReader(fh):
        out.append(BenchRow(int(rec["n"]), int(rec["seed"]), rec["phase"], float(rec["millis"]),
                            int(rec["tour_points"]), float(rec["length"])))
    return out


def totals_by_n(rows: Iterable[BenchRow], field: str = "millis") -> dict[int, float]:
    """Median of ``field`` over the total-phase rows of each n."""
    acc: dict[int, list[float]] = {}
    for r in rows:
        if r.phase == "total":
            acc.setdefault(r.n, []).append(float(getattr(r, field)))
    return {n: median(v) for n, v in sorted(acc.items())}


def fit_nlogn(ns, times) -> Fit:
    """Least squares ``T = a * n log2 n + b`` with its coefficient of determination."""
    x = np.array([n * math.log2(n) for n in ns], dtype=float)
    y = np.asarray(times, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least two sizes to fit")
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return Fit(float(a), float(b), r2)


def doubling_ratios(series: dict[int, float]) -> list[tuple[int, float]]:
    """``T(2n) / T(n)`` for each consecutive doubling present in ``series``."""
    out = []
    for n in sorted(series):
        if 2 * n in series and series[n] > 0:
            out.append((2 * n, series[2 * n] / series[n]))
    return out
