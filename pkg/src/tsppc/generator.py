"""Turn a point cloud into a TSP-PC instance.

Locations are ranked by distance from the centroid (stable sort, so equal
distances keep file order). Rank 1 is the depot. The remaining ranks are
split into precedence groups with the outer rank as the parent, in one of
two pairings (``halves`` by default):

* ``ends``: from both ends of the ranking inward, (n, 2), (n-1, 3), ...;
  with three ranks left the smallest becomes the child of the other two.
* ``halves``: the outer half is matched rank by rank with the inner half,
  (h+2, 2), (h+3, 3), ... with h = (n-1) // 2; an odd leftover (the farthest rank) becomes a
  second parent of the last group.

``parents_central`` swaps every role and negates the payloads. Node ids
follow the pickup/delivery convention: 0 is the depot, then all parents in
group order, then all children in group order, then the end depot.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .formats import TsplibPointCloud
from .model import DEFAULT_METRIC, METRICS, Commodity, Instance, InstanceError


class Direction(str, Enum):
    CHILDREN_CENTRAL = "children_central"
    PARENTS_CENTRAL = "parents_central"

    @classmethod
    def parse(cls, value: str) -> "Direction":
        aliases = {"children": cls.CHILDREN_CENTRAL, "parents": cls.PARENTS_CENTRAL}
        if value in aliases:
            return aliases[value]
        return cls(value)


TIE_BREAKS = ("stable",)
PAIRINGS = ("halves", "ends")


@dataclass(frozen=True)
class GeneratorConfig:
    direction: Direction
    metric: str = DEFAULT_METRIC
    tie_break: str = "stable"
    pairing: str = "halves"

    def __post_init__(self):
        if not isinstance(self.direction, Direction):
            object.__setattr__(self, "direction", Direction.parse(self.direction))
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"unknown tie break {self.tie_break!r}")
        if self.pairing not in PAIRINGS:
            raise ValueError(f"unknown pairing {self.pairing!r}; expected one of {PAIRINGS}")


def centroid_ranking(coords: np.ndarray) -> np.ndarray:
    """File positions sorted by increasing distance from the centroid."""
    centre = coords.mean(axis=0)
    d2 = ((coords - centre) ** 2).sum(axis=1)
    return np.argsort(d2, kind="stable")


Group = tuple[tuple[int, ...], int]


def precedence_groups(n: int, pairing: str = "halves") -> list[Group]:
    """(parent ranks, child rank) groups over ranks 2..n, children central."""
    if n < 3:
        raise ValueError("need at least 3 ranked points")
    if pairing == "ends":
        return _ends_groups(n)
    if pairing == "halves":
        return _halves_groups(n)
    raise ValueError(f"unknown pairing {pairing!r}")


def _ends_groups(n: int) -> list[Group]:
    groups: list[Group] = []
    low, high = 2, n
    while high >= low:
        remaining = high - low + 1
        if remaining == 3:
            groups.append(((low + 1, high), low))
            break
        assert remaining >= 2, "leftover single node cannot be paired"
        groups.append(((high,), low))
        low += 1
        high -= 1
    return groups


def _halves_groups(n: int) -> list[Group]:
    m = n - 1
    h = m // 2
    groups: list[Group] = [((2 + h + i,), 2 + i) for i in range(h)]
    if m % 2:
        parents, child = groups[-1]
        groups[-1] = (parents + (n,), child)
    return groups


def generate(cloud: TsplibPointCloud, config: GeneratorConfig, name: Optional[str] = None) -> Instance:
    if cloud.dimension < 3:
        raise InstanceError("instance generation needs at least 3 points")
    coords = np.asarray(cloud.coords, dtype=float)
    ranking = centroid_ranking(coords)
    flip = config.direction is Direction.PARENTS_CENTRAL

    groups = []
    for parents, child in precedence_groups(len(ranking), config.pairing):
        if flip:
            groups.append(((child,), parents))
        else:
            groups.append((parents, (child,)))
    ordered_ranks = [1]
    ordered_ranks += [r for pick, _ in groups for r in pick]
    ordered_ranks += [r for _, drop in groups for r in drop]
    node_of = {r: v for v, r in enumerate(ordered_ranks)}

    commodities = []
    for m, (pick, drop) in enumerate(groups):
        total = float(max(len(pick), len(drop)))
        payload = {node_of[r]: total / len(pick) for r in pick}
        payload.update({node_of[r]: -total / len(drop) for r in drop})
        commodities.append(Commodity.from_mapping(m, payload))

    file_pos = [int(ranking[r - 1]) for r in ordered_ranks]
    suffix = "parents" if flip else "children"
    return Instance(
        name=name or f"{cloud.name}-{suffix}",
        points=tuple((float(coords[i, 0]), float(coords[i, 1])) for i in file_pos),
        commodities=tuple(commodities),
        metric=config.metric,
        source=cloud.name,
        direction=config.direction.value,
        source_ids=tuple(i + 1 for i in file_pos),
    )


def random_cloud(n: int, rng: np.random.Generator, scale: float = 1000.0,
                 integral: bool = True, name: str = "random") -> TsplibPointCloud:
    pts = rng.uniform(0, scale, size=(n, 2))
    if integral:
        pts = np.round(pts)
    return TsplibPointCloud(name, tuple((float(x), float(y)) for x, y in pts))


def random_instance(rng: np.random.Generator, n_tasks: int, *, metric: str = "euc2d-continuous",
                    triple_prob: float = 0.3, scale: float = 100.0, integral: bool = False,
                    name: str = "random") -> Instance:
    """An instance with random locations and random precedence groups.

    Groups are pickup/delivery pairs; with probability ``triple_prob`` a group
    gets two pickups for one delivery (or, flipped, one pickup feeding two
    deliveries).
    """
    groups = []
    for _ in range(n_tasks):
        if rng.random() < triple_prob:
            groups.append((2, 1) if rng.random() < 0.5 else (1, 2))
        else:
            groups.append((1, 1))
    n_locations = sum(a + b for a, b in groups)
    pts = rng.uniform(0, scale, size=(n_locations + 1, 2))
    if integral:
        pts = np.round(pts)
    ids = rng.permutation(np.arange(1, n_locations + 1))
    commodities = []
    pos = 0
    for m, (n_parents, n_children) in enumerate(groups):
        parents = ids[pos:pos + n_parents]
        children = ids[pos + n_parents:pos + n_parents + n_children]
        pos += n_parents + n_children
        total = float(max(n_parents, n_children))
        payload = {int(p): total / n_parents for p in parents}
        payload.update({int(c): -total / n_children for c in children})
        commodities.append(Commodity.from_mapping(m, payload))
    return Instance(
        name=name,
        points=tuple((float(x), float(y)) for x, y in pts),
        commodities=tuple(commodities),
        metric=metric,
    )
