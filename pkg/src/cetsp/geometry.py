"""Planar geometry on disks, segments and tour points.

Scalar routines work on plain Python floats; they are called a handful of
times per insertion, where interpreter overhead of ``math`` beats any array
round trip.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence


class Point2(NamedTuple):
    x: float
    y: float


class Circle(NamedTuple):
    x: float
    y: float
    r: float

    @property
    def center(self) -> Point2:
        return Point2(self.x, self.y)

    @property
    def radius(self) -> float:
        return self.r

    def contains_point(self, px: float, py: float, eps: float = 0.0) -> bool:
        return math.hypot(px - self.x, py - self.y) <= self.r + eps

    def bbox(self) -> tuple[float, float, float, float]:
        return (self.x - self.r, self.y - self.r, self.x + self.r, self.y + self.r)


class Segment(NamedTuple):
    a: Point2
    b: Point2


def effective_distance(c1: Circle, c2: Circle) -> float:
    """Gap between the two boundaries; negative when the disks overlap."""
    return math.hypot(c1.x - c2.x, c1.y - c2.y) - (c1.r + c2.r)


def disk_contains(big: Circle, small: Circle) -> bool:
    """True when ``small``'s disk lies inside ``big``'s (closed)."""
    return math.hypot(big.x - small.x, big.y - small.y) + small.r <= big.r


def proxy_circle(c1: Circle, c2: Circle, rng) -> Circle:
    """Single circle standing in for the merged pair ``c1``, ``c2``.

    ``rng`` is a ``numpy.random.Generator``; it is consumed only in the
    overlapping case.
    """
    dx = c2.x - c1.x
    dy = c2.y - c1.y
    d = math.hypot(dx, dy)
    small, big = (c1, c2) if c1.r <= c2.r else (c2, c1)
    if d + small.r <= big.r:
        return Circle(small.x, small.y, small.r)
    ux = dx / d
    uy = dy / d
    # midpoint of the facing boundary points along the center line
    t = 0.5 * (d + c1.r - c2.r)
    cx = c1.x + t * ux
    cy = c1.y + t * uy
    if d >= c1.r + c2.r:
        return Circle(cx, cy, 0.0)
    depth = 0.5 * (c1.r + c2.r - d)
    a = (c1.r * c1.r - c2.r * c2.r + d * d) / (2.0 * d)
    half_chord = math.sqrt(max(c1.r * c1.r - a * a, 0.0))
    lo = min(depth, half_chord)
    hi = max(depth, half_chord)
    return Circle(cx, cy, lo + (hi - lo) * rng.random())


def segment_point_distance(seg: Segment, q) -> float:
    return _seg_dist(seg[0][0], seg[0][1], seg[1][0], seg[1][1], q[0], q[1])


def _seg_dist(ax, ay, bx, by, qx, qy):
    dx = bx - ax
    dy = by - ay
    den = dx * dx + dy * dy
    if den > 0.0:
        t = ((qx - ax) * dx + (qy - ay) * dy) / den
        t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    else:
        t = 0.0
    return math.hypot(ax + t * dx - qx, ay + t * dy - qy)


def detour(ax, ay, bx, by, px, py) -> float:
    """Added length |AP| + |PB| - |AB| of routing A-B through P."""
    return math.hypot(px - ax, py - ay) + math.hypot(px - bx, py - by) - math.hypot(bx - ax, by - ay)


def _alhazen(ax, ay, bx, by, ox, oy, r):
    """Bisector placement; returns (px, py, delta)."""
    dx = bx - ax
    dy = by - ay
    den = dx * dx + dy * dy
    if den > 0.0:
        t = ((ox - ax) * dx + (oy - ay) * dy) / den
        t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    else:
        t = 0.0
    cx = ax + t * dx
    cy = ay + t * dy
    if math.hypot(cx - ox, cy - oy) <= r:
        return cx, cy, 0.0
    ua_x = ax - ox
    ua_y = ay - oy
    la = math.hypot(ua_x, ua_y)
    ub_x = bx - ox
    ub_y = by - oy
    lb = math.hypot(ub_x, ub_y)
    wx = ua_x / la + ub_x / lb
    wy = ua_y / la + ub_y / lb
    lw = math.hypot(wx, wy)
    if lw < 1e-12:
        # A, O, B (nearly) collinear with O between: fall back to the
        # direction of the closest segment point.
        wx = cx - ox
        wy = cy - oy
        lw = math.hypot(wx, wy)
    px = ox + r * wx / lw
    py = oy + r * wy / lw
    delta = detour(ax, ay, bx, by, px, py)
    return px, py, max(delta, 0.0)


def alhazen_bisection(seg: Segment, circle: Circle) -> tuple[Point2, float]:
    """Approximate cheapest point of ``circle`` for detouring segment ``seg``.

    If the segment meets the disk the closest segment point to the center is
    returned with zero added length.  Otherwise the point is where the
    bisector of the angle A-O-B leaves the circle.
    """
    (ax, ay), (bx, by) = seg
    px, py, delta = _alhazen(ax, ay, bx, by, circle.x, circle.y, circle.r)
    return Point2(px, py), delta


def _newton(ax, ay, bx, by, ox, oy, r, px, py):
    if r <= 0.0:
        return px, py
    theta = math.atan2(py - oy, px - ox)

    def f(th):
        qx = ox + r * math.cos(th)
        qy = oy + r * math.sin(th)
        return math.hypot(qx - ax, qy - ay) + math.hypot(qx - bx, qy - by)

    c = math.cos(theta)
    s = math.sin(theta)
    qx = ox + r * c
    qy = oy + r * s
    tx = -r * s  # dP/dtheta
    ty = r * c
    grad = 0.0
    hess = 0.0
    for ex, ey in ((ax, ay), (bx, by)):
        vx = qx - ex
        vy = qy - ey
        g = math.hypot(vx, vy)
        if g < 1e-15:
            return px, py
        dg = (vx * tx + vy * ty) / g
        # P'' = -(P - O)
        d2 = (tx * tx + ty * ty - (vx * (qx - ox) + vy * (qy - oy))) / g - dg * dg / g
        grad += dg
        hess += d2
    if hess <= 0.0 or grad == 0.0:
        return px, py
    th1 = theta - grad / hess
    if f(th1) > f(theta):
        return px, py
    return ox + r * math.cos(th1), oy + r * math.sin(th1)


def newton_refine(seg: Segment, circle: Circle, p0) -> Point2:
    """One guarded Newton step on the boundary angle minimizing |AP| + |PB|."""
    (ax, ay), (bx, by) = seg
    px, py = _newton(ax, ay, bx, by, circle.x, circle.y, circle.r, p0[0], p0[1])
    return Point2(px, py)


def _chord_interval(ax, ay, dx, dy, ox, oy, r):
    """Parameter interval of A + t*(B-A), t in [0, 1], inside the disk."""
    fx = ax - ox
    fy = ay - oy
    qa = dx * dx + dy * dy
    qb = fx * dx + fy * dy
    qc = fx * fx + fy * fy - r * r
    if qa == 0.0:
        return (0.0, 1.0) if qc <= 0.0 else None
    disc = qb * qb - qa * qc
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t0 = (-qb - sq) / qa
    t1 = (-qb + sq) / qa
    if t1 < 0.0 or t0 > 1.0:
        return None
    return max(t0, 0.0), min(t1, 1.0)


def _reoptimize(ax, ay, bx, by, px, py, disks):
    dx = bx - ax
    dy = by - ay
    lo = 0.0
    hi = 1.0
    for c in disks:
        iv = _chord_interval(ax, ay, dx, dy, c[0], c[1], c[2])
        if iv is None:
            lo, hi = 1.0, 0.0
            break
        lo = max(lo, iv[0])
        hi = min(hi, iv[1])
        if lo > hi:
            break
    if lo <= hi:
        den = dx * dx + dy * dy
        t = ((px - ax) * dx + (py - ay) * dy) / den if den > 0.0 else 0.0
        t = lo if t < lo else (hi if t > hi else t)
        return ax + t * dx, ay + t * dy

    gx = 0.0
    gy = 0.0
    for ex, ey in ((ax, ay), (bx, by)):
        l = math.hypot(px - ex, py - ey)
        if l > 0.0:
            gx += (px - ex) / l
            gy += (py - ey) / l
    gl = math.hypot(gx, gy)
    if gl < 1e-15:
        return px, py
    gx /= gl
    gy /= gl
    # largest t with |p - t*g - c| <= r for every disk
    step = math.inf
    for c in disks:
        wx = px - c[0]
        wy = py - c[1]
        b = gx * wx + gy * wy
        disc = b * b - (wx * wx + wy * wy - c[2] * c[2])
        t = b + math.sqrt(disc) if disc > 0.0 else 0.0
        if t < step:
            step = t
    if not step > 0.0 or step == math.inf:
        return px, py
    base = detour(ax, ay, bx, by, px, py)
    for _ in range(40):
        nx = px - step * gx
        ny = py - step * gy
        if detour(ax, ay, bx, by, nx, ny) <= base:
            return nx, ny
        step *= 0.5
    return px, py


def reoptimize_point(a, b, p, disks: Sequence[Circle]) -> Point2:
    """Move ``p`` within the common intersection of ``disks`` to cut |AP| + |PB|.

    Zero-cost positions on segment AB are taken when AB crosses the
    intersection; otherwise a single maximal step along the negative gradient
    is taken, shortened by halving if the full step would overshoot.
    """
    x, y = _reoptimize(a[0], a[1], b[0], b[1], p[0], p[1], disks)
    return Point2(x, y)


def rotate_points(points, angle: float, pivot) -> list[Point2]:
    c = math.cos(angle)
    s = math.sin(angle)
    px, py = pivot
    return [Point2(px + c * (x - px) - s * (y - py), py + s * (x - px) + c * (y - py))
            for x, y in points]


def centroid(circles: Sequence[Circle]) -> Point2:
    n = len(circles)
    return Point2(math.fsum(c.x for c in circles) / n, math.fsum(c.y for c in circles) / n)


def rotate_instance(circles: Sequence[Circle], angle: float) -> list[Circle]:
    """Rotate every center about the centroid of all centers; radii kept."""
    if not circles:
        return []
    if angle == 0.0:
        return [Circle(*c) for c in circles]
    moved = rotate_points([(c.x, c.y) for c in circles], angle, centroid(circles))
    return [Circle(p.x, p.y, c.r) for p, c in zip(moved, circles)]


def bbox_diagonal(circles: Sequence[Circle]) -> float:
    if not circles:
        return 0.0
    x0 = min(c.x - c.r for c in circles)
    y0 = min(c.y - c.r for c in circles)
    x1 = max(c.x + c.r for c in circles)
    y1 = max(c.y + c.r for c in circles)
    return math.hypot(x1 - x0, y1 - y0)


def geo_epsilon(circles: Sequence[Circle]) -> float:
    """Membership tolerance used throughout a solve."""
    return 1e-9 * max(1.0, bbox_diagonal(circles))
