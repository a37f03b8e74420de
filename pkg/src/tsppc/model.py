"""Instances, tours, travel costs and payload feasibility.

Node numbering: 0 is the start depot, 1..N the pickup/delivery locations,
N + 1 the end depot (same location as 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

METRICS = ("euc2d-rounded", "euc2d-continuous")
DEFAULT_METRIC = "euc2d-continuous"


class InstanceError(ValueError):
    """An instance violates the model invariants."""


class TourStructureError(ValueError):
    """A node sequence is not a Hamiltonian depot-to-depot path."""


def distance_matrix(coords: np.ndarray, metric: str) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=-1))
    if metric == "euc2d-rounded":
        # TSPLIB nint()
        return np.floor(d + 0.5)
    if metric == "euc2d-continuous":
        return d
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


@dataclass(frozen=True)
class Commodity:
    id: int
    payload: tuple[tuple[int, float], ...]

    @classmethod
    def from_mapping(cls, id: int, payload_at: Mapping[int, float]) -> "Commodity":
        items = tuple(sorted((int(k), float(v)) for k, v in payload_at.items() if v != 0))
        return cls(id, items)

    @property
    def payload_at(self) -> dict[int, float]:
        return dict(self.payload)

    @property
    def pickups(self) -> list[int]:
        return [node for node, q in self.payload if q > 0]

    @property
    def deliveries(self) -> list[int]:
        return [node for node, q in self.payload if q < 0]


@dataclass(frozen=True)
class PrecedenceSet:
    parents_of: Mapping[int, frozenset[int]]
    children_of: Mapping[int, frozenset[int]]

    @classmethod
    def from_commodities(cls, commodities: Iterable[Commodity]) -> "PrecedenceSet":
        parents: dict[int, set[int]] = {}
        children: dict[int, set[int]] = {}
        for com in commodities:
            for p in com.pickups:
                for c in com.deliveries:
                    parents.setdefault(c, set()).add(p)
                    children.setdefault(p, set()).add(c)
        return cls(
            {k: frozenset(v) for k, v in sorted(parents.items())},
            {k: frozenset(v) for k, v in sorted(children.items())},
        )

    @property
    def parent_nodes(self) -> frozenset[int]:
        return frozenset(self.children_of)

    @property
    def child_nodes(self) -> frozenset[int]:
        return frozenset(self.parents_of)

    def parents(self, node: int) -> frozenset[int]:
        return self.parents_of.get(node, frozenset())

    def children(self, node: int) -> frozenset[int]:
        return self.children_of.get(node, frozenset())


@dataclass(frozen=True)
class Instance:
    """A TSP-PC instance.

    ``points`` holds one coordinate pair per location 0..N; the end depot
    N + 1 shares the coordinates of node 0 and is not stored twice.
    ``source_ids`` maps each location to its id in the originating file.
    """

    name: str
    points: tuple[tuple[float, float], ...]
    commodities: tuple[Commodity, ...]
    metric: str = DEFAULT_METRIC
    source: str = ""
    direction: str = ""
    source_ids: tuple[int, ...] = ()

    def __post_init__(self):
        if self.metric not in METRICS:
            raise InstanceError(f"unknown metric {self.metric!r}")
        if len(self.points) < 2:
            raise InstanceError("an instance needs a depot and at least one location")
        for x, y in self.points:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InstanceError("coordinates must be finite")
        if self.source_ids and len(self.source_ids) != len(self.points):
            raise InstanceError("source_ids must list one id per location")
        n = self.n_locations
        seen_ids = set()
        for com in self.commodities:
            if com.id in seen_ids:
                raise InstanceError(f"duplicate commodity id {com.id}")
            seen_ids.add(com.id)
            total = 0.0
            for node, q in com.payload:
                if not 1 <= node <= n:
                    raise InstanceError(
                        f"commodity {com.id} has payload at node {node}; "
                        f"payloads must sit on locations 1..{n}"
                    )
                total += q
            if abs(total) > 1e-9:
                raise InstanceError(f"payloads of commodity {com.id} sum to {total}, not 0")
        prec = self.precedence
        both = prec.parent_nodes & prec.child_nodes
        if both:
            raise InstanceError(f"nodes {sorted(both)} are both parent and child")

    @property
    def n_locations(self) -> int:
        """N, the number of non-depot nodes."""
        return len(self.points) - 1

    @property
    def end(self) -> int:
        return len(self.points)

    @property
    def n_nodes(self) -> int:
        """Node count including both depot copies (N + 2)."""
        return len(self.points) + 1

    @cached_property
    def coords(self) -> np.ndarray:
        """(N + 2, 2) array; the last row repeats the depot."""
        arr = np.array(self.points + (self.points[0],), dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def costs(self) -> np.ndarray:
        c = distance_matrix(self.coords, self.metric)
        c.setflags(write=False)
        return c

    @cached_property
    def precedence(self) -> PrecedenceSet:
        return PrecedenceSet.from_commodities(self.commodities)

    @cached_property
    def payload_matrix(self) -> np.ndarray:
        """q[node, commodity-position]; rows for both depots are zero."""
        q = np.zeros((self.n_nodes, len(self.commodities)))
        for m, com in enumerate(self.commodities):
            for node, value in com.payload:
                q[node, m] = value
        q.setflags(write=False)
        return q

    @cached_property
    def bbox_diagonal(self) -> float:
        c = self.coords
        return float(np.hypot(*(c.max(axis=0) - c.min(axis=0))))

    def check_node(self, node: int) -> None:
        if not (isinstance(node, (int, np.integer)) and 0 <= node <= self.end):
            raise InstanceError(f"invalid node id {node!r} (valid: 0..{self.end})")


def cost(instance: Instance, i: int, j: int) -> float:
    instance.check_node(i)
    instance.check_node(j)
    return float(instance.costs[i, j])


def _check_order(instance: Instance, order: Sequence[int]) -> None:
    seen = set()
    for node in order:
        instance.check_node(node)
        if node in seen:
            raise TourStructureError(f"node {node} repeated")
        seen.add(node)


def tour_cost(instance: Instance, order: Sequence[int]) -> float:
    if len(order) < 2:
        raise TourStructureError("a tour needs at least two nodes")
    _check_order(instance, order)
    idx = np.asarray(order, dtype=np.intp)
    return float(instance.costs[idx[:-1], idx[1:]].sum())


def structural_problems(instance: Instance, order: Sequence[int]) -> list[str]:
    problems = []
    if len(order) == 0:
        return ["empty tour"]
    if order[0] != 0:
        problems.append(f"tour starts at {order[0]}, not at depot 0")
    if order[-1] != instance.end:
        problems.append(f"tour ends at {order[-1]}, not at end depot {instance.end}")
    counts: dict[int, int] = {}
    for node in order:
        if not (isinstance(node, (int, np.integer)) and 0 <= node <= instance.end):
            problems.append(f"unknown node {node!r}")
            continue
        counts[int(node)] = counts.get(int(node), 0) + 1
    dups = sorted(k for k, v in counts.items() if v > 1)
    if dups:
        problems.append(f"repeated nodes {dups}")
    missing = sorted(set(range(instance.end + 1)) - set(counts))
    if missing:
        problems.append(f"missing nodes {missing}")
    return problems


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    cost: float
    heuristic: str = ""

    @classmethod
    def build(cls, instance: Instance, order: Sequence[int], heuristic: str = "") -> "Tour":
        order = tuple(int(v) for v in order)
        problems = structural_problems(instance, order)
        if problems:
            raise TourStructureError("; ".join(problems))
        return cls(order, tour_cost(instance, order), heuristic)

    def __len__(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of simulating a tour.

    ``status`` is one of ``feasible``, ``structural`` or ``precedence``.
    For a precedence violation, ``node``/``commodity``/``payload`` locate the
    first negative payload along the tour.
    """

    status: str
    problems: tuple[str, ...] = ()
    node: Optional[int] = None
    commodity: Optional[int] = None
    payload: Optional[float] = None
    max_payload: float = 0.0
    cost: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def __bool__(self) -> bool:
        return self.feasible

    def describe(self) -> str:
        if self.status == "feasible":
            return f"feasible: cost {self.cost:.10g}, max payload {self.max_payload:g}"
        if self.status == "structural":
            return "structural error: " + "; ".join(self.problems)
        return (
            f"infeasible: payload of commodity {self.commodity} drops to "
            f"{self.payload:g} at node {self.node}"
        )


def simulate_payload(instance: Instance, order: Sequence[int]) -> np.ndarray:
    """Payload carried when leaving each tour position, shape (len(order), M)."""
    q = instance.payload_matrix[np.asarray(order, dtype=np.intp)]
    y = np.cumsum(q, axis=0)
    # depot starts empty
    y[0] = 0.0
    return y


def validate_tour(instance: Instance, tour: Union[Tour, Sequence[int]]) -> FeasibilityReport:
    order = tour.order if isinstance(tour, Tour) else tuple(tour)
    problems = structural_problems(instance, order)
    if problems:
        return FeasibilityReport("structural", tuple(problems))
    y = simulate_payload(instance, order)
    cost_value = tour_cost(instance, order)
    max_payload = float(y.max()) if y.size else 0.0
    if y.size:
        bad = np.argwhere(y < -1e-9)
        if len(bad):
            pos, m = bad[0]
            return FeasibilityReport(
                "precedence",
                (f"commodity {instance.commodities[m].id} negative at node {order[pos]}",),
                node=int(order[pos]),
                commodity=instance.commodities[m].id,
                payload=float(y[pos, m]),
                max_payload=max_payload,
                cost=cost_value,
            )
        leftover = np.flatnonzero(np.abs(y[-1]) > 1e-9)
        if len(leftover):
            m = leftover[0]
            return FeasibilityReport(
                "precedence",
                (f"commodity {instance.commodities[m].id} not empty at the end depot",),
                node=instance.end,
                commodity=instance.commodities[m].id,
                payload=float(y[-1, m]),
                max_payload=max_payload,
                cost=cost_value,
            )
    return FeasibilityReport("feasible", max_payload=max_payload, cost=cost_value)
