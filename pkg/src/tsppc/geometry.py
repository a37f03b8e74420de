"""Planar convex hull (monotone chain)."""
from __future__ import annotations

from typing import Sequence, Tuple

Coord = Tuple[float, float]


def _cross(o: Coord, a: Coord, b: Coord) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Sequence[Coord]) -> list[int]:
    """Indices of the strict hull vertices of ``points``, counterclockwise.

    Collinear boundary points are dropped. Coincident points are collapsed
    onto the lowest input index. The sequence starts at the lexicographically
    smallest vertex. Degenerate inputs give the distinct extreme points:
    one index for a single location, two for a collinear set.
    """
    if len(points) == 0:
        raise ValueError("convex hull of an empty point set")
    first_index: dict[Coord, int] = {}
    for i, p in enumerate(points):
        key = (float(p[0]), float(p[1]))
        first_index.setdefault(key, i)
    pts = sorted(first_index)
    if len(pts) <= 2:
        return [first_index[p] for p in pts]

    lower: list[Coord] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Coord] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) == 2 and hull[0] == hull[1]:
        hull = hull[:1]
    return [first_index[p] for p in hull]
