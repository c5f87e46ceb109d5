"""Planar geometry helpers shared by the indoor model and the samplers."""

import math

import numpy as np

# on-boundary tolerance in meters
TOL = 1e-6


def as_polygon(vertices):
    poly = np.asarray(vertices, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
        raise ValueError("polygon needs at least 3 (x, y) vertices")
    # drop an explicit closing vertex
    if np.allclose(poly[0], poly[-1]):
        poly = poly[:-1]
    if len(poly) < 3:
        raise ValueError("polygon needs at least 3 distinct vertices")
    return poly


def segment_distance(px, py, ax, ay, bx, by):
    """Distance from points (px, py) to segment a-b, vectorized over points."""
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return np.hypot(px - ax, py - ay)
    u = np.clip(((px - ax) * dx + (py - ay) * dy) / seg2, 0.0, 1.0)
    return np.hypot(px - (ax + u * dx), py - (ay + u * dy))


def boundary_distance(px, py, poly):
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    best = np.full(np.broadcast(px, py).shape, np.inf)
    n = len(poly)
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        best = np.minimum(best, segment_distance(px, py, ax, ay, bx, by))
    return best


def on_boundary(px, py, poly, tol=TOL):
    return boundary_distance(px, py, poly) <= tol


def points_in_polygon(px, py, poly, tol=TOL):
    """Crossing-number containment test; boundary points count as inside."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    inside = np.zeros(np.broadcast(px, py).shape, dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        crosses = (y1 > py) != (y2 > py)
        if y1 == y2:
            continue
        xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (px < xint)
    return inside | on_boundary(px, py, poly, tol)


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    def on_seg(a, b, c):
        return (min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
                and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_seg(p1, p2, q1):
        return True
    if o2 == 0 and on_seg(p1, p2, q2):
        return True
    if o3 == 0 and on_seg(q1, q2, p1):
        return True
    return o4 == 0 and on_seg(q1, q2, p2)


def is_simple(poly):
    """True when no two non-adjacent edges touch. O(n^2), fine for room outlines."""
    n = len(poly)
    if abs(polygon_area(poly)) <= 0.0:
        return False
    for i in range(n):
        a1, a2 = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_cross(a1, a2, poly[j], poly[(j + 1) % n]):
                return False
    return True


def polygon_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def centroid(poly):
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    return float(((x + xn) * cross).sum() / (6 * a)), float(((y + yn) * cross).sum() / (6 * a))


def bbox(poly):
    return (float(poly[:, 0].min()), float(poly[:, 1].min()),
            float(poly[:, 0].max()), float(poly[:, 1].max()))


def grid_points(box, pitch):
    """Row-major lattice anchored at the box min corner."""
    x0, y0, x1, y1 = box
    nx = int(np.floor((x1 - x0) / pitch + 1e-9)) + 1
    ny = int(np.floor((y1 - y0) / pitch + 1e-9)) + 1
    xs = x0 + np.arange(nx) * pitch
    ys = y0 + np.arange(ny) * pitch
    gx, gy = np.meshgrid(xs, ys)
    return gx.ravel(), gy.ravel()


def contains_point(x, y, pts, tol=TOL):
    """Scalar :func:`points_in_polygon` over a list of vertex tuples; cheaper for one point."""
    n = len(pts)
    inside = False
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        if (y1 > y) != (y2 > y) and x < x1 + (y - y1) * (x2 - x1) / (y2 - y1):
            inside = not inside
    if inside:
        return True
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        dx, dy = x2 - x1, y2 - y1
        seg2 = dx * dx + dy * dy
        u = 0.0 if seg2 == 0 else min(max(((x - x1) * dx + (y - y1) * dy) / seg2, 0.0), 1.0)
        if math.hypot(x - (x1 + u * dx), y - (y1 + u * dy)) <= tol:
            return True
    return False
