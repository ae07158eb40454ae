"""Simple-polygon helpers used by scene validation and grasp containment."""

from __future__ import annotations

import math

import numpy as np


def signed_area(vertices: np.ndarray) -> float:
    """Shoelace area; positive for counterclockwise order in the XZ plane."""
    v = np.asarray(vertices, dtype=float)
    x, z = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(z, -1) - np.roll(x, -1) * z))


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, p, eps=1e-12) -> bool:
    return (
        min(a[0], b[0]) - eps <= p[0] <= max(a[0], b[0]) + eps
        and min(a[1], b[1]) - eps <= p[1] <= max(a[1], b[1]) + eps
    )


def segments_intersect(p1, p2, p3, p4) -> bool:
    """True if segments p1p2 and p3p4 intersect (touching counts)."""
    d1 = _orient(p3, p4, p1)
    d2 = _orient(p3, p4, p2)
    d3 = _orient(p1, p2, p3)
    d4 = _orient(p1, p2, p4)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _on_segment(p3, p4, p1):
        return True
    if d2 == 0 and _on_segment(p3, p4, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, p3):
        return True
    if d4 == 0 and _on_segment(p1, p2, p4):
        return True
    return False


def self_intersections(vertices: np.ndarray) -> list[tuple[int, int]]:
    """Pairs of non-adjacent edge indices that intersect; empty for a simple polygon."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    bad = []
    for i in range(n):
        a1, a2 = v[i], v[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share a vertex
            b1, b2 = v[j], v[(j + 1) % n]
            if segments_intersect(a1, a2, b1, b2):
                bad.append((i, j))
    return bad


def point_in_polygon(vertices: np.ndarray, point) -> bool:
    """Ray-casting containment test (boundary points count as inside)."""
    v = np.asarray(vertices, dtype=float)
    px, pz = point
    n = len(v)
    inside = False
    for i in range(n):
        x1, z1 = v[i]
        x2, z2 = v[(i + 1) % n]
        if point_segment_distance(point, (x1, z1), (x2, z2)) < 1e-12:
            return True
        if (z1 > pz) != (z2 > pz):
            x_at = x1 + (pz - z1) * (x2 - x1) / (z2 - z1)
            if px < x_at:
                inside = not inside
    return inside


def point_segment_distance(p, a, b) -> float:
    ax, az = a
    bx, bz = b
    px, pz = p
    dx, dz = bx - ax, bz - az
    denom = dx * dx + dz * dz
    t = 0.0 if denom == 0.0 else max(0.0, min(1.0, ((px - ax) * dx + (pz - az) * dz) / denom))
    return math.hypot(px - (ax + t * dx), pz - (az + t * dz))


def boundary_distance(vertices: np.ndarray, point) -> float:
    """Distance from a point to the polygon boundary (unsigned)."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    return min(point_segment_distance(point, v[i], v[(i + 1) % n]) for i in range(n))


def signed_depth(vertices: np.ndarray, point) -> float:
    """Distance to the boundary, positive inside the polygon, negative outside."""
    d = boundary_distance(vertices, point)
    return d if point_in_polygon(vertices, point) else -d


def nearest_edge(vertices: np.ndarray, point) -> tuple[int, float]:
    """Index of the closest polygon edge and the distance to it."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    dists = [point_segment_distance(point, v[i], v[(i + 1) % n]) for i in range(n)]
    idx = int(np.argmin(dists))
    return idx, dists[idx]


def edge_inward_normal(vertices: np.ndarray, edge_index: int) -> np.ndarray:
    """Inward unit normal of an edge of a counterclockwise polygon."""
    v = np.asarray(vertices, dtype=float)
    a, b = v[edge_index], v[(edge_index + 1) % len(v)]
    d = b - a
    d = d / np.linalg.norm(d)
    return np.array([-d[1], d[0]])


def point_on_edge_param(vertices: np.ndarray, edge_index: int, point) -> float:
    """Parameter t in [0, 1] of the closest point on the edge to `point`."""
    v = np.asarray(vertices, dtype=float)
    a, b = v[edge_index], v[(edge_index + 1) % len(v)]
    d = b - a
    denom = float(d @ d)
    if denom == 0.0:
        return 0.0
    return float((np.asarray(point) - a) @ d) / denom
