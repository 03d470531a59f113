"""Instances and solutions: parsing, generation, validation, serialization, SVG."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional
from xml.sax.saxutils import escape

import numpy as np

from .construction import tour_length
from .geometry import Circle, Point2

SOLUTION_FORMAT = "cetsp-solution/1"


class ParseError(ValueError):
    pass


class SolutionFormatError(ValueError):
    pass


@dataclass
class Instance:
    name: str
    circles: list[Circle]

    def __len__(self) -> int:
        return len(self.circles)


@dataclass
class Solution:
    instance: str
    tour: list[tuple[float, float]]
    assignment: list[int]          # circle index -> position index in tour
    length: float
    seed: Optional[int] = None
    params: dict = field(default_factory=dict)
    wall_time: Optional[float] = None


# ---------------------------------------------------------------- parsing


def parse_instance(data, name: str = "instance", radius: Optional[float] = None) -> Instance:
    """Parse whitespace separated rows ``x y [z] [r]``.

    Blank lines and lines starting with ``#`` or ``//`` are skipped; the z
    column is ignored and a missing radius means 0.  ``radius`` overrides
    every row's radius.
    """
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    circles = []
    for lineno, raw in enumerate(data.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("//"):
            continue
        tokens = line.replace(",", " ").split()
        if not 2 <= len(tokens) <= 4:
            raise ParseError(f"line {lineno}: expected 2-4 columns, got {len(tokens)}")
        try:
            values = [float(t) for t in tokens]
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric token in {line!r}") from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError(f"line {lineno}: non-finite value")
        r = values[3] if len(values) == 4 else 0.0
        if radius is not None:
            r = float(radius)
        if r < 0:
            raise ParseError(f"line {lineno}: negative radius {r}")
        circles.append(Circle(values[0], values[1], r))
    if not circles:
        raise ParseError("no data rows")
    return Instance(name, circles)


def read_instance(path, radius: Optional[float] = None) -> Instance:
    from pathlib import Path

    path = Path(path)
    return parse_instance(path.read_bytes(), name=path.stem, radius=radius)


def format_instance(instance: Instance) -> str:
    lines = [f"# {instance.name}: {len(instance.circles)} circles (x y z r)"]
    lines += [f"{c.x:.17g} {c.y:.17g} 0 {c.r:.17g}" for c in instance.circles]
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- generators


def gen_random(n: int, limit: float = 100.0, seed: int = 0) -> Instance:
    """Centers uniform in [-L, L]^2, radii uniform in [0.01 L, 0.02 L]."""
    if n < 1 or limit <= 0:
        raise ValueError("need n >= 1 and limit > 0")
    rng = np.random.default_rng(seed)
    xy = rng.uniform(-limit, limit, size=(n, 2))
    r = rng.uniform(0.01 * limit, 0.02 * limit, size=n)
    circles = [Circle(float(x), float(y), float(rr)) for (x, y), rr in zip(xy, r)]
    return Instance(f"random_{n}_{seed}", circles)


def gen_structured(n: int, seed: int = 0) -> Instance:
    """Jittered floor(sqrt n)^2 unit grid plus uniform extras; radii in [0.2, 0.5]."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    m = math.isqrt(n)
    gx, gy = np.meshgrid(np.arange(m, dtype=float), np.arange(m, dtype=float), indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    grid += rng.uniform(-0.1, 0.1, size=grid.shape)
    extra = rng.uniform(0.0, max(m - 1, 0), size=(n - m * m, 2))
    xy = np.vstack([grid, extra])
    r = rng.uniform(0.2, 0.5, size=n)
    circles = [Circle(float(x), float(y), float(rr)) for (x, y), rr in zip(xy, r)]
    return Instance(f"structured_{n}_{seed}", circles)


# ------------------------------------------------------------- radius fit


def reconstruct_radius(centers, tour, chunk: int = 4096) -> float:
    """Uniform radius implied by a tour: max over centers of the nearest tour point."""
    c = np.asarray([tuple(p)[:2] for p in centers], dtype=float).reshape(-1, 2)
    t = np.asarray([tuple(p)[:2] for p in tour], dtype=float).reshape(-1, 2)
    if len(c) == 0 or len(t) == 0:
        raise ValueError("centers and tour must be non-empty")
    worst = 0.0
    for i in range(0, len(c), chunk):
        block = c[i:i + chunk]
        d2 = ((block[:, None, :] - t[None, :, :]) ** 2).sum(axis=2)
        worst = max(worst, float(np.sqrt(d2.min(axis=1)).max()))
    return worst


# -------------------------------------------------------------- validation


@dataclass
class Violation:
    circle: int
    excess: float          # distance beyond r (inf when unassigned)
    reason: str


@dataclass
class ValidationReport:
    violations: list[Violation]
    length_reported: float
    length_recomputed: float
    length_ok: bool
    epsilon: float

    @property
    def ok(self) -> bool:
        return not self.violations and self.length_ok

    def summary(self) -> str:
        status = "OK" if self.ok else "FAIL"
        return (f"{status}: {len(self.violations)} violation(s), length reported "
                f"{self.length_reported:.9g} recomputed {self.length_recomputed:.9g}")


def default_epsilon(instance: Instance) -> float:
    from .geometry import bbox_diagonal

    return 1e-6 * max(1.0, bbox_diagonal(instance.circles))


def validate(instance: Instance, solution: Solution, epsilon: Optional[float] = None) -> ValidationReport:
    """Check every circle's assigned tour point lies in its disk (within epsilon)."""
    if epsilon is None:
        epsilon = default_epsilon(instance)
    violations = []
    tour = solution.tour
    n = len(instance.circles)
    if len(solution.assignment) != n:
        violations.append(Violation(-1, math.inf,
                                    f"assignment covers {len(solution.assignment)} of {n} circles"))
    for i, c in enumerate(instance.circles):
        if i >= len(solution.assignment):
            violations.append(Violation(i, math.inf, "unassigned"))
            continue
        j = solution.assignment[i]
        if not 0 <= j < len(tour):
            violations.append(Violation(i, math.inf, f"assigned to missing tour position {j}"))
            continue
        x, y = tour[j]
        excess = math.hypot(x - c.x, y - c.y) - c.r
        if not excess <= epsilon:
            violations.append(Violation(i, excess, "outside disk"))
    recomputed = tour_length(tour)
    length_ok = abs(recomputed - solution.length) <= 1e-9 * max(1.0, abs(recomputed))
    return ValidationReport(violations, solution.length, recomputed, length_ok, epsilon)


# ----------------------------------------------------------- serialization


def _num(v: float) -> str:
    if not math.isfinite(v):
        raise SolutionFormatError(f"non-finite value {v!r}")
    text = format(float(v), ".17g")
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def write_solution(solution: Solution) -> bytes:
    """Serialize as JSON text with one tour point per line."""
    head = {
        "format": SOLUTION_FORMAT,
        "instance": solution.instance,
        "seed": solution.seed,
        "params": solution.params,
    }
    lines = ["{"]
    for key, value in head.items():
        lines.append(f"  {json.dumps(key)}: {json.dumps(value, sort_keys=True)},")
    lines.append(f'  "length": {_num(solution.length)},')
    if solution.wall_time is not None:
        lines.append(f'  "wall_time": {_num(solution.wall_time)},')
    lines.append('  "tour": [')
    pts = [f"    [{_num(x)}, {_num(y)}]" for x, y in solution.tour]
    lines.append(",\n".join(pts))
    lines.append("  ],")
    lines.append(f'  "assignment": {json.dumps(list(map(int, solution.assignment)))}')
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _require(obj: dict, key: str, kind, path: str = ""):
    if key not in obj:
        raise SolutionFormatError(f"{path}{key}: missing field")
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SolutionFormatError(f"{path}{key}: expected number")
        return float(value)
    if not isinstance(value, kind):
        raise SolutionFormatError(f"{path}{key}: expected {kind.__name__}")
    return value


def read_solution(data) -> Solution:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SolutionFormatError(f"<root>: invalid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise SolutionFormatError("<root>: expected object")
    fmt = obj.get("format", SOLUTION_FORMAT)
    if fmt != SOLUTION_FORMAT:
        raise SolutionFormatError(f"format: unsupported {fmt!r}")
    name = _require(obj, "instance", str)
    length = _require(obj, "length", float)
    raw_tour = _require(obj, "tour", list)
    tour = []
    for i, pt in enumerate(raw_tour):
        if not (isinstance(pt, list) and len(pt) == 2):
            raise SolutionFormatError(f"tour[{i}]: expected [x, y]")
        for j, v in enumerate(pt):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SolutionFormatError(f"tour[{i}][{j}]: expected number")
        tour.append((float(pt[0]), float(pt[1])))
    raw_assign = _require(obj, "assignment", list)
    assignment = []
    for i, v in enumerate(raw_assign):
        if isinstance(v, bool) or not isinstance(v, int):
            raise SolutionFormatError(f"assignment[{i}]: expected integer")
        assignment.append(v)
    seed = obj.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise SolutionFormatError("seed: expected integer or null")
    params = obj.get("params") or {}
    if not isinstance(params, dict):
        raise SolutionFormatError("params: expected object")
    wall = obj.get("wall_time")
    if wall is not None:
        wall = _require(obj, "wall_time", float)
    sol = Solution(name, tour, assignment, length, seed, params, wall)
    recomputed = tour_length(tour)
    if abs(recomputed - length) > 1e-9 * max(1.0, abs(recomputed)):
        warnings.warn(f"length field {length!r} disagrees with tour ({recomputed!r})", stacklevel=2)
    return sol


# ----------------------------------------------------------------- render


def emit_svg(instance: Instance, solution: Optional[Solution] = None, size: int = 800) -> bytes:
    """Disks as circles and the tour as a closed polyline (y axis up)."""
    cs = instance.circles
    x0 = min(c.x - c.r for c in cs)
    y0 = min(c.y - c.r for c in cs)
    x1 = max(c.x + c.r for c in cs)
    y1 = max(c.y + c.r for c in cs)
    if solution is not None and solution.tour:
        x0 = min(x0, min(p[0] for p in solution.tour))
        y0 = min(y0, min(p[1] for p in solution.tour))
        x1 = max(x1, max(p[0] for p in solution.tour))
        y1 = max(y1, max(p[1] for p in solution.tour))
    w = max(x1 - x0, 1e-9)
    h = max(y1 - y0, 1e-9)
    pad = 0.05 * max(w, h)
    vx, vy, vw, vh = x0 - pad, -(y1 + pad), w + 2 * pad, h + 2 * pad
    stroke = 0.002 * max(vw, vh)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" '
        f'height="{size * vh / vw:.0f}" viewBox="{vx:.9g} {vy:.9g} {vw:.9g} {vh:.9g}">',
        f"<title>{escape(instance.name)}</title>",
        f'<g transform="scale(1,-1)" fill="none" stroke-width="{stroke:.6g}">',
        '<g stroke="#4a7ab5" fill="#4a7ab5" fill-opacity="0.12">',
    ]
    for c in cs:
        out.append(f'<circle cx="{c.x:.9g}" cy="{c.y:.9g}" r="{c.r:.9g}"/>')
    out.append("</g>")
    if solution is not None and solution.tour:
        pts = list(solution.tour) + [solution.tour[0]]
        coords = " ".join(f"{x:.9g},{y:.9g}" for x, y in pts)
        out.append(f'<polyline stroke="#c0392b" points="{coords}"/>')
    out.append("</g>")
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


def read_points(data) -> list[Point2]:
    """Tour points from a solution file or from ``x y`` rows."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    if data.lstrip().startswith("{"):
        return [Point2(*p) for p in read_solution(data).tour]
    return [Point2(c.x, c.y) for c in parse_instance(data).circles]
