import itertools
import math
from pathlib import Path

import numpy as np
import pytest

from tsppc.model import Commodity, Instance

DATA = Path(__file__).resolve().parents[1] / "data" / "tsplib"

_acceptance_lines: list[str] = []


def line_instance(p_x=1.0, d_x=2.0, metric="euc2d-continuous") -> Instance:
    """Depot at the origin, one pickup (node 1) and one delivery (node 2) on the x axis."""
    return Instance(
        name="line",
        points=((0.0, 0.0), (p_x, 0.0), (d_x, 0.0)),
        commodities=(Commodity.from_mapping(0, {1: 1.0, 2: -1.0}),),
        metric=metric,
    )


def brute_force_optimum(instance: Instance) -> tuple[float, tuple[int, ...]]:
    """Exhaustive search over every precedence-respecting visiting order.

    Distances come from ``math.dist`` and the check uses parent positions, so
    nothing here relies on the library's payload simulation or DP.
    """
    pts = list(instance.points) + [instance.points[0]]
    end = instance.end
    rounded = instance.metric == "euc2d-rounded"

    def d(a, b):
        v = math.dist(pts[a], pts[b])
        return math.floor(v + 0.5) if rounded else v

    parents = {c: set(ps) for c, ps in instance.precedence.parents_of.items()}
    locations = list(range(1, end))
    best = [math.inf, None]
    order = [0]
    seen = set()

    def walk(cost):
        if len(order) == end:
            total = cost + d(order[-1], end)
            if total < best[0]:
                best[0], best[1] = total, tuple(order) + (end,)
            return
        for k in locations:
            if k in seen or not parents.get(k, set()) <= seen:
                continue
            seen.add(k)
            order.append(k)
            walk(cost + d(order[-2], k))
            order.pop()
            seen.discard(k)

    walk(0.0)
    return best[0], best[1]


def precedence_ok(instance: Instance, order) -> bool:
    pos = {v: i for i, v in enumerate(order)}
    return all(
        pos[p] < pos[c] for c, ps in instance.precedence.parents_of.items() for p in ps
    )


def small_random_instance(rng: np.random.Generator, n_tasks: int, max_locations: int = 10,
                          **kwargs) -> Instance:
    from tsppc.generator import random_instance

    while True:
        inst = random_instance(rng, n_tasks, **kwargs)
        if inst.n_locations <= max_locations:
            return inst


@pytest.fixture
def acceptance_report():
    return _acceptance_lines.append


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


class DenseCheck:
    """Rows and bounds of a model as arrays, to test many points at once."""

    def __init__(self, model):
        self.names = model.variables
        col = {v: k for k, v in enumerate(self.names)}
        self.a = np.zeros((len(model.constraints), len(self.names)))
        for r, con in enumerate(model.constraints):
            for var, coef in con.coeffs:
                self.a[r, col[var]] += coef
        self.rhs = np.array([con.rhs for con in model.constraints])
        self.sense = np.array([con.sense for con in model.constraints])
        self.lo = np.array([model.bounds.get(v, (0.0, np.inf))[0] for v in self.names])
        self.hi = np.array([model.bounds.get(v, (0.0, np.inf))[1] for v in self.names])

    def ok(self, points, tol=1e-7):
        """Feasibility of each point, given as dicts or as rows of a value matrix."""
        if isinstance(points, np.ndarray):
            v = points
        else:
            v = np.array([[p.get(n, 0.0) for n in self.names] for p in points])
        lhs = v @ self.a.T
        rows = np.where(self.sense == "<=", lhs <= self.rhs + tol,
                        np.where(self.sense == ">=", lhs >= self.rhs - tol,
                                 np.abs(lhs - self.rhs) <= tol))
        bounds = (v >= self.lo - tol) & (v <= self.hi + tol)
        return rows.all(axis=1) & bounds.all(axis=1)

    def order_matrix(self, instance, orders):
        """Model values for many visiting orders at once (one row per order).

        Same meaning as ``tour_assignment``: arcs of the order, payloads
        simulated along it and their products on used arcs.
        """
        col = {v: k for k, v in enumerate(self.names)}
        k_orders, length = orders.shape
        rows = np.arange(k_orders)
        v = np.zeros((k_orders, len(self.names)))
        q = instance.payload_matrix
        loads = np.cumsum(q[orders], axis=1)  # (K, positions, M)
        idx = np.full((instance.end + 1, instance.end + 1), -1)
        for (i, j) in itertools.permutations(range(instance.end + 1), 2):
            idx[i, j] = col.get(f"x_{i}_{j}", -1)
        for t in range(length - 1):
            a, b = orders[:, t], orders[:, t + 1]
            v[rows, idx[a, b]] = 1.0
            for m in range(q.shape[1]):
                lcol = np.array([col.get(f"l_{i}_{j}_{m}", -1) for i, j in zip(a, b)])
                keep = lcol >= 0
                v[rows[keep], lcol[keep]] = loads[keep, t, m]
        for t in range(length):
            for m in range(q.shape[1]):
                ycol = np.array([col[f"y_{n}_{m}"] for n in orders[:, t]])
                v[rows, ycol] = loads[:, t, m]
            if "u_0" in col:
                ucol = np.array([col[f"u_{n}"] for n in orders[:, t]])
                v[rows, ucol] = t
        return v
