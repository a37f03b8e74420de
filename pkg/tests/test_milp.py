import itertools

import numpy as np
import pytest

from conftest import DenseCheck, line_instance, precedence_ok, small_random_instance
from tsppc.exact import exact_oracle
from tsppc.generator import random_instance
from tsppc.heuristics import achci
from tsppc.milp import (DFJ_MAX_LOCATIONS, ExportError, big_m, build_model, export_milp, lam,
                        tour_assignment, x, y)
from tsppc.model import Commodity, Instance, Tour, tour_cost


def two_tasks():
    return Instance(
        "two",
        ((0.0, 0.0), (1.0, 2.0), (4.0, 1.0), (2.0, -1.0), (-1.0, 3.0)),
        (Commodity.from_mapping(0, {1: 1, 3: -1}), Commodity.from_mapping(1, {2: 1, 4: -1})),
    )


def all_orders(inst):
    for perm in itertools.permutations(range(1, inst.end)):
        yield [0, *perm, inst.end]


@pytest.mark.parametrize("subtour", ["dfj", "mtz"])
def test_every_permutation_of_two_tasks(subtour):
    inst = two_tasks()
    model = build_model(inst, subtour=subtour)
    feasible = 0
    for order in all_orders(inst):
        bad = model.violations(tour_assignment(inst, order, model, subtour=subtour))
        if precedence_ok(inst, order):
            feasible += 1
            assert bad == [], order
            assert model.objective_value(tour_assignment(inst, order, model)) == pytest.approx(
                tour_cost(inst, order))
        else:
            assert bad, order
    assert feasible == 6


def test_two_parent_permutations():
    inst = Instance(
        "tri",
        ((0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (3.0, 0.0), (0.0, 2.0)),
        (Commodity.from_mapping(0, {1: 1, 2: 1, 3: -2}),),
    )
    model = build_model(inst)
    for order in all_orders(inst):
        bad = model.violations(tour_assignment(inst, order, model))
        assert (bad == []) == precedence_ok(inst, order), order


def test_delivery_first_breaks_a_load_bound():
    inst = line_instance()
    model = build_model(inst)
    bad = model.violations(tour_assignment(inst, [0, 2, 1, 3], model))
    assert "bound:y_2_0" in bad


def subtour_values(inst, path, cycle):
    """x values for a depot path plus a disjoint cycle."""
    arcs = set(zip(path, path[1:])) | set(zip(cycle, cycle[1:] + cycle[:1]))
    return {x(i, j): float((i, j) in arcs) for i in range(inst.end + 1)
            for j in range(inst.end + 1) if i != j}


def test_subtour_breaks_dfj():
    inst = two_tasks()
    model = build_model(inst)
    values = subtour_values(inst, [0, 1, 3, 5], [2, 4])
    secs = [n for n in model.violations(values) if n.startswith("sec_")]
    assert "sec_2_4" in secs
    # degree rows alone are happy with it
    assert not [n for n in model.violations(values) if n.startswith(("visit_", "flow_"))]


def test_subtour_breaks_mtz_for_any_order_values():
    inst = two_tasks()
    model = build_model(inst, subtour="mtz")
    base = subtour_values(inst, [0, 1, 3, 5], [2, 4])
    rng = np.random.default_rng(7)
    for _ in range(50):
        values = dict(base)
        for v in range(1, inst.end + 1):
            values[f"u_{v}"] = float(rng.uniform(1, inst.end))
        assert any(n.startswith("mtz_") for n in model.violations(values))


def test_dense_check_agrees_with_violations():
    inst = two_tasks()
    model = build_model(inst)
    orders = list(all_orders(inst))
    points = [tour_assignment(inst, o, model) for o in orders]
    assert DenseCheck(model).ok(points).tolist() == [model.violations(p) == [] for p in points]


def test_substitution_three_tasks_random():
    rng = np.random.default_rng(8)
    for _ in range(3):
        inst = small_random_instance(rng, 3, max_locations=7)
        model = build_model(inst)
        orders = list(all_orders(inst))
        ok = DenseCheck(model).ok([tour_assignment(inst, o, model) for o in orders])
        assert ok.tolist() == [precedence_ok(inst, o) for o in orders]


def test_order_matrix_matches_tour_assignment():
    rng = np.random.default_rng(11)
    for subtour in ("dfj", "mtz"):
        inst = small_random_instance(rng, 3, max_locations=7)
        model = build_model(inst, subtour=subtour)
        check = DenseCheck(model)
        orders = list(all_orders(inst))[::37]
        points = [tour_assignment(inst, o, model, subtour=subtour) for o in orders]
        want = np.array([[p.get(n, 0.0) for n in check.names] for p in points])
        assert np.array_equal(check.order_matrix(inst, np.array(orders)), want)


def test_optimum_is_a_zero_violation_point():
    rng = np.random.default_rng(9)
    for _ in range(5):
        inst = small_random_instance(rng, 3, max_locations=8)
        res = exact_oracle(inst)
        model = build_model(inst, res.tour)
        assert model.violations(model.start) == []
        assert model.objective_value(model.start) == pytest.approx(res.tour.cost)


def test_warm_start_lambda_is_product():
    inst = two_tasks()
    tour = achci(inst)
    model = build_model(inst, tour)
    s = model.start
    for i in range(inst.end + 1):
        for j in range(inst.end + 1):
            if i != j:
                for m in range(2):
                    assert s[lam(i, j, m)] == s[x(i, j)] * s[y(i, m)]
    assert big_m(inst) == 3.0
    assert model.header["big_M"] == "3"
    assert model.violations(s) == []


def test_big_m_grows_with_two_parent_loads():
    inst = Instance(
        "big",
        ((0.0, 0.0), (1.0, 0.0), (2.0, 0.0)),
        (Commodity.from_mapping(0, {1: 3, 2: -3}),),
    )
    assert big_m(inst) == 4.0
    model = build_model(inst)
    assert model.violations(tour_assignment(inst, [0, 1, 2, 3], model)) == []
    # M below the carried load cuts off lambda on 1 -> 2
    tight = build_model(inst, big_m_value=2)
    assert tight.violations(tour_assignment(inst, [0, 1, 2, 3], tight))


def test_infeasible_warm_start_rejected():
    inst = line_instance()
    with pytest.raises(ExportError, match="warm start rejected"):
        build_model(inst, Tour.build(inst, [0, 2, 1, 3]))


def test_dfj_cap():
    rng = np.random.default_rng(10)
    inst = random_instance(rng, 9, triple_prob=0.0)
    assert inst.n_locations > DFJ_MAX_LOCATIONS
    with pytest.raises(ExportError, match="MTZ"):
        build_model(inst)
    model = build_model(inst, achci(inst), subtour="mtz")
    assert model.violations(model.start) == []
    assert not any(c.name.startswith("sec_") for c in model.constraints)


def test_unknown_subtour_mode():
    with pytest.raises(ExportError):
        build_model(line_instance(), subtour="gg")


def test_sparse_lambda():
    inst = two_tasks()
    full = build_model(inst)
    sparse = build_model(inst, sparse_lambda=True)
    assert len(sparse.constraints) < len(full.constraints)
    assert lam(0, 1, 0) not in sparse.variables and lam(1, 2, 0) in sparse.variables
    for order in all_orders(inst):
        ok = sparse.violations(tour_assignment(inst, order, sparse)) == []
        assert ok == precedence_ok(inst, order)


def test_lp_text_layout():
    inst = line_instance()
    lp, mst = export_milp(inst, Tour.build(inst, [0, 1, 2, 3]))
    lines = lp.splitlines()
    assert "\\ big_M: 3" in lines
    assert any(l.startswith("\\ subtour_constraints: dfj") for l in lines)
    for section in ("Minimize", "Subject To", "Bounds", "Binary", "End"):
        assert section in lines
    assert lines.index("Minimize") < lines.index("Subject To") < lines.index("Bounds") < lines.index("Binary")
    assert " x_1_0 = 0" in lines and " y_0_0 = 0" in lines
    assert " depot_out_pickup: x_0_1 = 1" in lines
    assert " load_2_0: y_2_0 - l_0_2_0 - l_1_2_0 - l_3_2_0 = -1" in lines
    mst_lines = mst.splitlines()
    assert mst_lines[0].startswith("#")
    entries = dict(l.split() for l in mst_lines[1:])
    assert entries["x_0_1"] == "1" and entries["x_1_2"] == "1" and entries["x_0_2"] == "0"
    assert entries["y_1_0"] == "1" and entries["l_1_2_0"] == "1"


def test_no_warm_start_means_no_mst():
    lp, mst = export_milp(line_instance())
    assert mst is None and lp.endswith("End\n")
