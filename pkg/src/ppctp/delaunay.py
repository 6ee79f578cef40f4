"""Bowyer-Watson Delaunay triangulation for small planar point sets."""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple

from .errors import DegeneracyError, ValidationError

Point = Tuple[float, float]

EPS = 1e-12
SUPER_SCALES = (1e3, 1e5, 1e7)


def orient(a: Point, b: Point, c: Point) -> float:
    """Twice the signed area of abc; positive when counter-clockwise."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def incircle(a: Point, b: Point, c: Point, d: Point) -> float:
    """Positive iff d lies inside the circumcircle of counter-clockwise abc."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    ad = adx * adx + ady * ady
    bd = bdx * bdx + bdy * bdy
    cd = cdx * cdx + cdy * cdy
    return (adx * (bdy * cd - bd * cdy)
            - ady * (bdx * cd - bd * cdx)
            + ad * (bdx * cdy - bdy * cdx))


def convex_hull(points: Sequence[Point]) -> List[int]:
    """Indices of the strict convex hull, counter-clockwise (monotone chain)."""
    idx = sorted(range(len(points)), key=lambda i: points[i])
    lower: List[int] = []
    for i in idx:
        while len(lower) >= 2 and orient(points[lower[-2]], points[lower[-1]], points[i]) <= 0:
            lower.pop()
        lower.append(i)
    upper: List[int] = []
    for i in reversed(idx):
        while len(upper) >= 2 and orient(points[upper[-2]], points[upper[-1]], points[i]) <= 0:
            upper.pop()
        upper.append(i)
    return lower[:-1] + upper[:-1]


def triangulate(points: Sequence[Point]) -> List[Tuple[int, int, int]]:
    """Delaunay triangles as counter-clockwise index triples.

    Raises DegeneracyError when an incircle or orientation test among real
    points falls within ``EPS`` of zero.
    """
    pts = [(float(x), float(y)) for x, y in points]
    n = len(pts)
    if n < 3:
        raise ValidationError("need at least 3 points")
    seen = set()
    for p in pts:
        key = (round(p[0] / EPS), round(p[1] / EPS))
        if key in seen:
            raise ValidationError(f"coincident points near {p}")
        seen.add(key)

    hull = convex_hull(pts)
    if len(hull) < 3:
        raise DegeneracyError("all points collinear")
    hull_edges = {frozenset((hull[i], hull[(i + 1) % len(hull)])) for i in range(len(hull))}

    for scale in SUPER_SCALES:
        tris = _bowyer_watson(pts, scale)
        edges = {frozenset(e) for t in tris for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))}
        if hull_edges <= edges:
            return tris
    raise DegeneracyError("hull edges missing for every super-triangle size")


def _bowyer_watson(pts: List[Point], scale: float) -> List[Tuple[int, int, int]]:
    n = len(pts)
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    cx, cy = (min(xs) + max(xs)) / 2, (min(ys) + max(ys)) / 2
    r = max(max(xs) - min(xs), max(ys) - min(ys), 1.0) * scale
    allpts = pts + [(cx - 2 * r, cy - r), (cx + 2 * r, cy - r), (cx, cy + 2 * r)]
    tris = {(n, n + 1, n + 2)}

    def in_circ(t, d):
        a, b, c = t
        v = incircle(allpts[a], allpts[b], allpts[c], allpts[d])
        if a < n and b < n and c < n and abs(v) < EPS:
            raise DegeneracyError(f"points {a}, {b}, {c}, {d} are (nearly) cocircular")
        return v > 0

    for i in range(n):
        bad = [t for t in tris if in_circ(t, i)]
        count: dict = {}
        for t in bad:
            for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                k = frozenset(e)
                count[k] = count.get(k, 0) + 1
        tris.difference_update(bad)
        for t in bad:
            for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                if count[frozenset((a, b))] == 1:
                    o = orient(allpts[a], allpts[b], allpts[i])
                    if a < n and b < n and abs(o) < EPS:
                        raise DegeneracyError(f"points {a}, {b}, {i} are (nearly) collinear")
                    tris.add((a, b, i))
    return sorted(t for t in tris if max(t) < n)


def delaunay(points: Sequence[Point]) -> List[Tuple[int, int]]:
    """Sorted list of Delaunay edges ``(i, j)`` with ``i < j``."""
    edges = set()
    for t in triangulate(points):
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            edges.add((min(a, b), max(a, b)))
    return sorted(edges)


def circumcircle(a: Point, b: Point, c: Point) -> Tuple[float, float, float]:
    """Centre and radius, by direct formula (used as an independent check)."""
    d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    a2, b2, c2 = a[0] ** 2 + a[1] ** 2, b[0] ** 2 + b[1] ** 2, c[0] ** 2 + c[1] ** 2
    ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d
    uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d
    return ux, uy, math.hypot(a[0] - ux, a[1] - uy)
