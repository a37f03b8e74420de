"""Linearised TSP-PC model export (CPLEX LP format) with MIP-start files.

Variables, over the directed edge set E of all ordered node pairs i != j:

* ``x_i_j``      binary, edge (i, j) used
* ``y_i_m``      payload of commodity m when leaving node i (>= 0)
* ``l_i_j_m``    x_ij * y_im, tied to x and y by four big-M rows
* ``u_i``        visit order, only in MTZ mode

Payload evolution is written per receiving node j:
``y_jm = sum_i l_ijm + q_jm``, which is the product-free form of
``sum_j x_ij y_jm = y_im + sum_j x_ij q_jm`` once every node has one
predecessor. Subtours are cut by the full subset family (DFJ) up to
``DFJ_MAX_LOCATIONS`` locations; larger models need ``subtour="mtz"``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .formats import format_number
from .model import Instance, Tour, simulate_payload, validate_tour

DFJ_MAX_LOCATIONS = 16


class ExportError(ValueError):
    pass


def big_m(instance: Instance) -> float:
    """Smallest safe big-M: one more than the largest commodity load, at least 3."""
    top = max((sum(q for _, q in com.payload if q > 0) for com in instance.commodities), default=0.0)
    return max(3.0, 1.0 + top)


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple[tuple[str, float], ...]
    sense: str  # "<=", ">=", "="
    rhs: float

    def slack(self, values: dict) -> float:
        lhs = sum(coef * values.get(var, 0.0) for var, coef in self.coeffs)
        if self.sense == "<=":
            return self.rhs - lhs
        if self.sense == ">=":
            return lhs - self.rhs
        return -abs(lhs - self.rhs)


@dataclass
class MilpModel:
    name: str
    objective: dict[str, float]
    constraints: list[Constraint]
    binaries: list[str]
    bounds: dict[str, tuple[float, float]]
    header: dict[str, str] = field(default_factory=dict)
    start: Optional[dict[str, float]] = None

    @property
    def variables(self) -> list[str]:
        names = list(self.objective)
        seen = set(names)
        for v in itertools.chain(self.binaries, self.bounds):
            if v not in seen:
                seen.add(v)
                names.append(v)
        return names

    def violations(self, values: dict, tol: float = 1e-7) -> list[str]:
        """Names of rows, bounds and integrality conditions that ``values`` breaks."""
        bad = [con.name for con in self.constraints if con.slack(values) < -tol]
        for var, (lo, hi) in self.bounds.items():
            v = values.get(var, 0.0)
            if v < lo - tol or v > hi + tol:
                bad.append(f"bound:{var}")
        for var in self.binaries:
            v = values.get(var, 0.0)
            if min(abs(v), abs(v - 1)) > tol:
                bad.append(f"binary:{var}")
        return bad

    def objective_value(self, values: dict) -> float:
        return sum(coef * values.get(var, 0.0) for var, coef in self.objective.items())

    def to_lp(self) -> str:
        return "".join(self.iter_lp())

    def iter_lp(self) -> Iterator[str]:
        for key, value in self.header.items():
            yield f"\\ {key}: {value}\n"
        yield "Minimize\n obj:"
        yield from _terms(self.objective.items())
        yield "\nSubject To\n"
        for con in self.constraints:
            yield f" {con.name}:"
            yield from _terms(con.coeffs)
            yield f" {con.sense} {format_number(con.rhs)}\n"
        yield "Bounds\n"
        for var, (lo, hi) in self.bounds.items():
            if lo == -np.inf and hi == np.inf:
                yield f" {var} free\n"
            elif lo == hi:
                yield f" {var} = {format_number(lo)}\n"
            else:
                lo_s = "-inf" if lo == -np.inf else format_number(lo)
                hi_s = "+inf" if hi == np.inf else format_number(hi)
                yield f" {lo_s} <= {var} <= {hi_s}\n"
        yield "Binary\n"
        for i in range(0, len(self.binaries), 8):
            yield " " + " ".join(self.binaries[i:i + 8]) + "\n"
        yield "End\n"

    def start_to_mst(self) -> str:
        """MIP start as a ``name value`` listing (Gurobi ``.mst`` layout)."""
        if self.start is None:
            raise ExportError("model carries no warm start")
        lines = [f"# MIP start for {self.name}"]
        lines += [f"{var} {format_number(val)}" for var, val in self.start.items()]
        return "\n".join(lines) + "\n"


def _terms(items) -> Iterator[str]:
    first = True
    count = 0
    for var, coef in items:
        if coef == 0:
            continue
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        text = var if mag == 1 else f"{format_number(mag)} {var}"
        if first and sign == "+":
            yield f" {text}"
        else:
            yield f" {sign} {text}"
        first = False
        count += 1
        if count % 10 == 0:
            yield "\n  "


def x(i: int, j: int) -> str:
    return f"x_{i}_{j}"


def y(i: int, m: int) -> str:
    return f"y_{i}_{m}"


def lam(i: int, j: int, m: int) -> str:
    return f"l_{i}_{j}_{m}"


def u(i: int) -> str:
    return f"u_{i}"


def build_model(instance: Instance, warm_start: Optional[Tour] = None, *,
                subtour: str = "dfj", sparse_lambda: bool = False,
                big_m_value: Optional[float] = None) -> MilpModel:
    if subtour not in ("dfj", "mtz"):
        raise ExportError(f"unknown subtour mode {subtour!r}")
    n = instance.n_locations
    if subtour == "dfj" and n > DFJ_MAX_LOCATIONS:
        raise ExportError(
            f"{n} locations exceed the DFJ enumeration cap of {DFJ_MAX_LOCATIONS}; use the MTZ mode"
        )
    if warm_start is not None:
        report = validate_tour(instance, warm_start)
        if not report.feasible:
            raise ExportError(f"warm start rejected: {report.describe()}")

    end = instance.end
    nodes = range(end + 1)
    locations = range(1, end)
    coms = range(len(instance.commodities))
    q = instance.payload_matrix
    c = instance.costs
    M = big_m(instance) if big_m_value is None else float(big_m_value)
    prec = instance.precedence
    edges = [(i, j) for i in nodes for j in nodes if i != j]

    objective = {x(i, j): float(c[i, j]) for i, j in edges}
    binaries = [x(i, j) for i, j in edges]
    bounds: dict[str, tuple[float, float]] = {}
    cons: list[Constraint] = []

    def add(name, coeffs, sense, rhs):
        cons.append(Constraint(name, tuple(coeffs), sense, float(rhs)))

    # nothing enters the start depot or leaves the end depot
    for i in nodes:
        if i != 0:
            bounds[x(i, 0)] = (0.0, 0.0)
        if i != end:
            bounds[x(end, i)] = (0.0, 0.0)

    # only valid when every location is a pickup or a delivery
    if prec.parent_nodes and prec.parent_nodes | prec.child_nodes == set(locations):
        add("depot_out_pickup", [(x(0, j), 1.0) for j in sorted(prec.parent_nodes)], "=", 1)
        add("depot_in_delivery", [(x(i, end), 1.0) for i in sorted(prec.child_nodes)], "=", 1)
    add("depot_out", [(x(0, j), 1.0) for j in nodes if j != 0], "=", 1)
    add("depot_in", [(x(i, end), 1.0) for i in nodes if i != end], "=", 1)
    for j in locations:
        add(f"visit_{j}", [(x(i, j), 1.0) for i in nodes if i != j], "=", 1)
        add(f"flow_{j}", [(x(i, j), 1.0) for i in nodes if i != j]
            + [(x(j, k), -1.0) for k in nodes if k != j], "=", 0)

    if subtour == "dfj":
        all_nodes = list(nodes)
        for size in range(2, len(all_nodes)):
            for subset in itertools.combinations(all_nodes, size):
                name = "sec_" + "_".join(map(str, subset))
                add(name, [(x(i, j), 1.0) for i in subset for j in subset if i != j], "<=", size - 1)
    else:
        big = float(end)
        bounds[u(0)] = (0.0, 0.0)
        for i in range(1, end + 1):
            bounds[u(i)] = (1.0, big)
        for i, j in edges:
            if j == 0 or i == end:
                continue
            # u_j >= u_i + 1 - (big + 1) * (1 - x_ij)
            add(f"mtz_{i}_{j}", [(u(j), 1.0), (u(i), -1.0), (x(i, j), -(big + 1))], ">=", -big)

    for m in coms:
        bounds[y(0, m)] = (0.0, 0.0)
        for i in range(1, end + 1):
            bounds[y(i, m)] = (0.0, np.inf)

    def lambda_needed(i, j):
        if not sparse_lambda:
            return True
        return not (i == end or j == 0 or i == 0)

    for i, j in edges:
        for m in coms:
            if not lambda_needed(i, j):
                continue
            lv = lam(i, j, m)
            bounds[lv] = (-np.inf, np.inf)
            add(f"bm1_{i}_{j}_{m}", [(lv, 1.0), (y(i, m), -1.0), (x(i, j), M)], "<=", M)
            add(f"bm2_{i}_{j}_{m}", [(lv, 1.0), (y(i, m), -1.0), (x(i, j), -M)], ">=", -M)
            add(f"bm3_{i}_{j}_{m}", [(lv, 1.0), (x(i, j), -M)], "<=", 0)
            add(f"bm4_{i}_{j}_{m}", [(lv, 1.0), (x(i, j), M)], ">=", 0)

    for j in range(1, end + 1):
        for m in coms:
            terms = [(y(j, m), 1.0)]
            terms += [(lam(i, j, m), -1.0) for i in nodes if i != j and lambda_needed(i, j)]
            add(f"load_{j}_{m}", terms, "=", q[j, m])

    header = {
        "model": instance.name,
        "metric": instance.metric,
        "big_M": format_number(M),
        "subtour_constraints": "dfj (full subset enumeration)" if subtour == "dfj"
        else "mtz (order variables substituted for subset enumeration)",
        "lambda_index_set": "sparse" if sparse_lambda else "full",
        "nodes": f"0 = start depot, {end} = end depot",
    }
    model = MilpModel(instance.name, objective, cons, binaries, bounds, header)
    if warm_start is not None:
        model.start = tour_assignment(instance, warm_start.order, model, subtour=subtour)
    return model


def tour_assignment(instance: Instance, order: Sequence[int], model: Optional[MilpModel] = None,
                    *, subtour: str = "dfj") -> dict[str, float]:
    """Values of every model variable implied by visiting ``order``.

    Payloads are simulated along the tour (possibly negative for an
    infeasible order) and lambda is set to x * y.
    """
    end = instance.end
    nodes = range(end + 1)
    succ = {a: b for a, b in zip(order[:-1], order[1:])}
    loads = simulate_payload(instance, order)
    y_val = {v: loads[p] for p, v in enumerate(order)}
    values: dict[str, float] = {}
    for i in nodes:
        for j in nodes:
            if i != j:
                values[x(i, j)] = 1.0 if succ.get(i) == j else 0.0
    for i in nodes:
        for m in range(len(instance.commodities)):
            values[y(i, m)] = float(y_val[i][m])
    for i in nodes:
        for j in nodes:
            if i == j:
                continue
            for m in range(len(instance.commodities)):
                values[lam(i, j, m)] = values[x(i, j)] * values[y(i, m)]
    if subtour == "mtz":
        for p, v in enumerate(order):
            values[u(v)] = float(p)
    if model is not None:
        known = set(model.variables)
        values = {k: v for k, v in values.items() if k in known}
    return values


def export_milp(instance: Instance, warm_start: Optional[Tour] = None, **kwargs) -> tuple[str, Optional[str]]:
    """LP text of the model and, with a warm start, the MIP-start text."""
    model = build_model(instance, warm_start, **kwargs)
    return model.to_lp(), (model.start_to_mst() if warm_start is not None else None)
