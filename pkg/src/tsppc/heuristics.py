"""Tour construction: adapted convex hull cheapest insertion (ACHCI) and
precedence-aware nearest neighbour.

ACHCI starts from the hull of the depot and all pickup (parent) locations,
rotated to begin and end at the depot, then repeatedly inserts the location
with the lowest detour ratio (C_ik + C_kj) / C_ij. A child may only go into
the part of the subtour after all of its parents. The whole construction is
run for both orientations of the starting hull and the cheaper tour is kept.

Each pending node keeps one candidate arc. Under ``arc_rule="ratio"`` that
is the arc with the lowest ratio; under ``"added-cost"`` it is the arc with
the smallest detour C_ik + C_kj - C_ij, as in classic cheapest insertion.
Either way the node to insert is the one whose candidate has the lowest
ratio.

Ties: the lowest ratio wins, then the smallest node id, then the arc that
comes first in the subtour. Nearest-neighbour ties go to the smallest id.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .geometry import convex_hull
from .model import Instance, PrecedenceSet, Tour

EPS_SCALE = 1e-12
ARC_RULES = ("added-cost", "ratio")


class Orientation(str, Enum):
    AS_BUILT = "as_built"  # counterclockwise hull
    REVERSED = "reversed"


def _eps(instance: Instance) -> float:
    return EPS_SCALE * instance.bbox_diagonal or EPS_SCALE


def _ratios(num: np.ndarray, den: np.ndarray, eps: float) -> np.ndarray:
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    safe = np.where(den > 0, den, 1.0)
    guarded = np.where(num > 0, num / eps, 1.0)
    return np.where(den > 0, num / safe, guarded)


def insertion_ratio(instance: Instance, i: int, j: int, k: int) -> float:
    """Detour ratio of putting ``k`` between consecutive nodes ``i`` and ``j``.

    A zero-length arc uses ``1e-12`` times the bounding-box diagonal as the
    denominator; the ratio is 1 when the detour is also zero.
    """
    c = instance.costs
    return float(_ratios(c[i, k] + c[k, j], c[i, j], _eps(instance)))


@dataclass
class Subtour:
    """Partial tour [0, ..., N + 1] under construction."""

    order: list[int]
    position_of: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.position_of = {v: p for p, v in enumerate(self.order)}

    @property
    def inserted(self) -> set[int]:
        return set(self.position_of)

    def __contains__(self, node: int) -> bool:
        return node in self.position_of

    def __len__(self) -> int:
        return len(self.order)

    def arcs(self) -> list[tuple[int, int]]:
        return list(zip(self.order[:-1], self.order[1:]))

    def insert(self, position: int, node: int) -> None:
        """Insert ``node`` into the arc starting at ``position``."""
        if node in self.position_of:
            raise ValueError(f"node {node} already in the subtour")
        self.order.insert(position + 1, node)
        for p in range(position + 1, len(self.order)):
            self.position_of[self.order[p]] = p


def feasible_segment(subtour: Subtour, k: int, precedence: PrecedenceSet) -> range:
    """Start positions of the arcs that may receive ``k``.

    Parentless nodes may go anywhere. Children may only follow the
    latest-placed of their parents, and nowhere while a parent is missing.
    """
    if k in subtour:
        raise ValueError(f"node {k} is already in the subtour")
    parents = precedence.parents(k)
    last_arc = len(subtour) - 1
    if not parents:
        return range(0, last_arc)
    if any(p not in subtour for p in parents):
        return range(0)
    return range(max(subtour.position_of[p] for p in parents), last_arc)


@dataclass(frozen=True)
class InsertionCandidate:
    node: int
    arc: Optional[tuple[int, int]]
    ratio: float


def best_insertion(instance: Instance, subtour: Subtour, k: int,
                   arc_rule: str = "added-cost") -> InsertionCandidate:
    """Candidate arc for ``k`` in its feasible segment (infinite ratio if none)."""
    seg = feasible_segment(subtour, k, instance.precedence)
    if len(seg) == 0:
        return InsertionCandidate(k, None, float("inf"))
    order = np.asarray(subtour.order)
    starts = order[seg.start:seg.stop]
    ends = order[seg.start + 1:seg.stop + 1]
    c = instance.costs
    detour = c[starts, k] + c[k, ends]
    r = _ratios(detour, c[starts, ends], _eps(instance))
    best = int(np.argmin(r if arc_rule == "ratio" else detour - c[starts, ends]))
    return InsertionCandidate(k, (int(starts[best]), int(ends[best])), float(r[best]))


def hull_nodes(instance: Instance) -> list[int]:
    """Counterclockwise hull of the depot and all non-child locations."""
    children = instance.precedence.child_nodes
    nodes = [v for v in range(instance.end) if v not in children]
    hull = convex_hull([instance.points[v] for v in nodes])
    return [nodes[h] for h in hull]


def initial_subtour(instance: Instance, orientation: Orientation = Orientation.AS_BUILT) -> list[int]:
    cycle = hull_nodes(instance)
    if Orientation(orientation) is Orientation.REVERSED:
        cycle = cycle[::-1]
    end = instance.end
    if 0 in cycle:
        i = cycle.index(0)
        return cycle[i:] + cycle[:i] + [end]
    h = len(cycle)
    starts = np.asarray(cycle)
    ends = np.asarray(cycle[1:] + cycle[:1])
    c = instance.costs
    r = _ratios(c[starts, 0] + c[0, ends], c[starts, ends], _eps(instance))
    t = int(np.argmin(r))
    # depot goes between cycle[t] and cycle[t + 1]; walk from cycle[t + 1]
    rest = [cycle[(t + 1 + s) % h] for s in range(h)]
    return [0] + rest + [end]


def _achci_incremental(instance: Instance, seq0: list[int], trace: Optional[list],
                       arc_rule: str) -> list[int]:
    n_nodes = instance.n_nodes
    end = instance.end
    c = np.asarray(instance.costs)
    eps = _eps(instance)
    prec = instance.precedence
    inf = np.inf

    seq = list(seq0)
    pos = np.full(n_nodes, -1, dtype=np.int64)
    nxt = np.full(n_nodes, -1, dtype=np.int64)
    for p, v in enumerate(seq):
        pos[v] = p
    for a, b in zip(seq[:-1], seq[1:]):
        nxt[a] = b

    # anchor[k]: node whose position opens k's feasible segment
    # (0 for parentless nodes, latest parent for released children, -1 if blocked)
    anchor = np.full(n_nodes, -1, dtype=np.int64)
    missing = np.zeros(n_nodes, dtype=np.int64)
    for k in range(1, end):
        if pos[k] >= 0:
            continue
        parents = prec.parents(k)
        missing[k] = sum(1 for p in parents if pos[p] < 0)
        if not parents:
            anchor[k] = 0
        elif missing[k] == 0:
            anchor[k] = max(parents, key=lambda p: pos[p])

    by_ratio = arc_rule == "ratio"
    # best: ratio of the candidate arc (selection key); key: arc criterion
    best = np.full(n_nodes, inf)
    key = np.full(n_nodes, inf)
    best_start = np.full(n_nodes, -1, dtype=np.int64)

    def arc_scores(starts, ends, k):
        detour = c[starts, k] + c[k, ends]
        r = _ratios(detour, c[starts, ends], eps)
        return r, (r if by_ratio else detour - c[starts, ends])

    def rescan(k: int) -> None:
        s0 = pos[anchor[k]]
        arr = np.asarray(seq)
        starts = arr[s0:-1]
        ends = arr[s0 + 1:]
        r, kv = arc_scores(starts, ends, k)
        i = int(np.argmin(kv))
        best[k] = r[i]
        key[k] = kv[i]
        best_start[k] = starts[i]

    for k in range(1, end):
        if pos[k] < 0 and anchor[k] >= 0:
            rescan(k)

    remaining = int((pos < 0).sum())
    while remaining:
        v = int(np.argmin(best))
        if not np.isfinite(best[v]):
            raise RuntimeError("no feasible insertion left; precedence graph is cyclic")
        a = int(best_start[v])
        b = int(nxt[a])
        pa = int(pos[a])
        if trace is not None:
            trace.append((v, a, b, float(best[v])))
        seq.insert(pa + 1, v)
        pos[pos > pa] += 1
        pos[v] = pa + 1
        nxt[a] = v
        nxt[v] = b
        best[v] = inf
        key[v] = inf
        best_start[v] = -1
        remaining -= 1

        live = np.flatnonzero(np.isfinite(best))
        if len(live):
            broken = live[best_start[live] == a]
            live = live[best_start[live] != a]
            seg_ok = pos[anchor[live]] <= pa
            for start, end_node, start_pos in ((a, v, pa), (v, b, pa + 1)):
                r, kv = arc_scores(start, end_node, live)
                cur = key[live]
                cur_pos = pos[best_start[live]]
                better = seg_ok & ((kv < cur) | ((kv == cur) & (start_pos < cur_pos)))
                idx = live[better]
                best[idx] = r[better]
                key[idx] = kv[better]
                best_start[idx] = start
            for k in broken:
                rescan(int(k))
        for child in prec.children(v):
            if pos[child] >= 0:
                continue
            missing[child] -= 1
            if missing[child] == 0:
                anchor[child] = max(prec.parents(child), key=lambda p: pos[p])
                rescan(child)
    return seq


def _achci_naive(instance: Instance, seq0: list[int], trace: Optional[list],
                 arc_rule: str) -> list[int]:
    subtour = Subtour(list(seq0))
    pending = [k for k in range(1, instance.end) if k not in subtour]
    while pending:
        chosen = None
        for k in pending:  # ascending ids, so strict < keeps the smallest on ties
            cand = best_insertion(instance, subtour, k, arc_rule)
            if chosen is None or cand.ratio < chosen.ratio:
                chosen = cand
        if chosen.arc is None:
            raise RuntimeError("no feasible insertion left; precedence graph is cyclic")
        a, b = chosen.arc
        if trace is not None:
            trace.append((chosen.node, a, b, chosen.ratio))
        subtour.insert(subtour.position_of[a], chosen.node)
        pending.remove(chosen.node)
    return subtour.order


def achci_directional(instance: Instance, orientation: Orientation = Orientation.AS_BUILT,
                      *, arc_rule: str = "added-cost", incremental: bool = True,
                      trace: Optional[list] = None) -> Tour:
    """One ACHCI construction for a fixed hull orientation.

    ``incremental=False`` recomputes every candidate ratio at each step
    (O(n^3)); the default keeps per-node best arcs and only refreshes the ones
    an insertion can change. Both give the same tour. ``trace`` collects
    ``(node, arc_start, arc_end, ratio)`` per insertion.
    """
    orientation = Orientation(orientation)
    if arc_rule not in ARC_RULES:
        raise ValueError(f"unknown arc rule {arc_rule!r}; expected one of {ARC_RULES}")
    seq0 = initial_subtour(instance, orientation)
    build = _achci_incremental if incremental else _achci_naive
    order = build(instance, seq0, trace, arc_rule)
    return Tour.build(instance, order, f"achci-{orientation.value}")


def achci_both(instance: Instance, **kwargs) -> dict[Orientation, Tour]:
    return {o: achci_directional(instance, o, **kwargs) for o in Orientation}


def achci(instance: Instance, **kwargs) -> Tour:
    """Cheaper of the two orientations (the as-built one on a tie)."""
    tours = achci_both(instance, **kwargs)
    best = min(tours.values(), key=lambda t: t.cost)
    return Tour(best.order, best.cost, "achci")


def nearest_neighbor(instance: Instance) -> Tour:
    end = instance.end
    c = instance.costs
    prec = instance.precedence
    missing = np.zeros(instance.n_nodes, dtype=np.int64)
    for child, parents in prec.parents_of.items():
        missing[child] = len(parents)
    open_ = np.zeros(instance.n_nodes, dtype=bool)
    open_[1:end] = True
    order = [0]
    current = 0
    for _ in range(end - 1):
        candidates = open_ & (missing == 0)
        row = np.where(candidates, c[current], np.inf)
        nxt = int(np.argmin(row))
        if not candidates[nxt]:
            raise RuntimeError("no feasible next node; precedence graph is cyclic")
        order.append(nxt)
        open_[nxt] = False
        for child in prec.children(nxt):
            missing[child] -= 1
        current = nxt
    order.append(end)
    return Tour.build(instance, order, "nn")
