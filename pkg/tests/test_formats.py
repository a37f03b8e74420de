import numpy as np
import pytest

from conftest import DATA, line_instance
from tsppc.formats import (COMPLETE_MARKER, ParseError, load_tour, parse_tsplib, read_csv,
                           read_instance, read_tour, read_tsplib, write_csv, write_instance,
                           write_tour)
from tsppc.generator import GeneratorConfig, generate, random_instance
from tsppc.heuristics import nearest_neighbor
from tsppc.model import Tour, tour_cost, validate_tour

MINIMAL = """NAME : tiny
TYPE : TSP
COMMENT : three points
DIMENSION : 3
EDGE_WEIGHT_TYPE : EUC_2D
NODE_COORD_SECTION
1 0 0
2 3.5 4
3 -1 2e1
EOF
"""


def test_minimal_document():
    cloud = parse_tsplib(MINIMAL)
    assert cloud.name == "tiny" and cloud.dimension == 3
    assert cloud.coords == ((0.0, 0.0), (3.5, 4.0), (-1.0, 20.0))
    assert cloud.comment == "three points"


def test_eil51_file():
    cloud = read_tsplib(DATA / "eil51.tsp")
    assert cloud.name == "eil51" and cloud.dimension == 51
    assert cloud.coords[0] == (37.0, 52.0)


def test_dimension_mismatch_reports_line():
    text = MINIMAL.replace("DIMENSION : 3", "DIMENSION : 5").replace("3 -1 2e1\n", "3 -1 2e1\n4 1 1\n")
    with pytest.raises(ParseError, match="DIMENSION is 5 but 4") as err:
        parse_tsplib(text)
    assert err.value.line == 6


@pytest.mark.parametrize("change,message", [
    (("EUC_2D", "GEO"), "unsupported EDGE_WEIGHT_TYPE"),
    (("EDGE_WEIGHT_TYPE : EUC_2D\n", ""), "missing EDGE_WEIGHT_TYPE"),
    (("NODE_COORD_SECTION\n1 0 0\n2 3.5 4\n3 -1 2e1\n", ""), "missing NODE_COORD_SECTION"),
    (("2 3.5 4", "2 3,5 4"), "malformed number"),
    (("2 3.5 4", "2 3.5"), "expected 'id x y'"),
    (("TYPE : TSP", "TYPE : ATSP"), "unsupported TYPE"),
    (("3 -1 2e1", "2 -1 2e1"), "duplicate node id"),
    (("EOF", "EDGE_WEIGHT_SECTION\n1 2 3\nEOF"), "unsupported section"),
])
def test_parse_errors(change, message):
    with pytest.raises(ParseError, match=message):
        parse_tsplib(MINIMAL.replace(*change))


def test_malformed_line_number():
    with pytest.raises(ParseError) as err:
        parse_tsplib(MINIMAL.replace("2 3.5 4", "2 x 4"))
    assert err.value.line == 8


def test_one_task_round_trip():
    inst = line_instance()
    text = write_instance(inst)
    section = text.split("PRECEDENCE_SECTION\n")[1].split("PAYLOAD_SECTION")[0]
    assert section.strip().splitlines() == ["1 2"]
    assert read_instance(text) == inst


def test_generated_round_trip_exact():
    cloud = read_tsplib(DATA / "eil51.tsp")
    for direction in ("children", "parents"):
        inst = generate(cloud, GeneratorConfig(direction))
        text = write_instance(inst)
        back = read_instance(text)
        assert back == inst
        assert write_instance(back) == text


def test_random_round_trips():
    rng = np.random.default_rng(5)
    for i in range(100):
        inst = random_instance(rng, int(rng.integers(1, 12)), integral=bool(i % 2),
                               metric=("euc2d-rounded", "euc2d-continuous")[i % 2], name=f"r{i}")
        assert read_instance(write_instance(inst)) == inst


def test_precedence_to_unknown_node():
    cloud = read_tsplib(DATA / "eil51.tsp")
    text = write_instance(generate(cloud, GeneratorConfig("children")))
    text = text.replace("PRECEDENCE_SECTION\n", "PRECEDENCE_SECTION\n1 999\n")
    with pytest.raises(ParseError, match="node 999"):
        read_instance(text)


def test_precedence_disagreeing_with_payloads():
    text = write_instance(line_instance()).replace("PRECEDENCE_SECTION\n1 2\n", "PRECEDENCE_SECTION\n2 1\n")
    with pytest.raises(ParseError, match="disagrees"):
        read_instance(text)


@pytest.mark.parametrize("change,message", [
    (("FORMAT_VERSION : 1", "FORMAT_VERSION : 2"), "FORMAT_VERSION"),
    (("PAYLOAD_SECTION", "WEIGHT_SECTION"), "unknown section"),
    (("TYPE : TSPPC", "TYPE : TSP"), "not a TSPPC"),
    (("2 0 -1", "2 0 -2"), "inconsistent"),
])
def test_instance_errors(change, message):
    with pytest.raises(ParseError, match=message):
        read_instance(write_instance(line_instance()).replace(*change))


def test_tour_document_line_instance():
    inst = line_instance()
    tour = Tour.build(inst, [0, 1, 2, 3], "nn")
    text = write_tour(tour, inst)
    body = text.split("TOUR_SECTION\n")[1].split("-1")[0].split()
    assert body == ["0", "1", "2", "3"]
    doc = read_tour(text)
    assert doc.order == tour.order and doc.cost == 4.0
    assert doc.comments["metric"] == inst.metric and doc.comments["heuristic"] == "nn"


def test_eil51_nn_tour_document(tmp_path):
    inst = generate(read_tsplib(DATA / "eil51.tsp"), GeneratorConfig("children"))
    tour = nearest_neighbor(inst)
    path = tmp_path / "nn.tour"
    path.write_text(write_tour(tour, inst))
    doc = load_tour(path)
    assert doc.cost == pytest.approx(583, rel=0.05)
    assert validate_tour(inst, doc.order).feasible
    assert tour_cost(inst, doc.order) == doc.cost


def test_tour_dimension_mismatch():
    text = write_tour(Tour.build(line_instance(), [0, 1, 2, 3]), line_instance())
    with pytest.raises(ParseError, match="DIMENSION"):
        read_tour(text.replace("DIMENSION : 4", "DIMENSION : 5"))


def test_csv_marker(tmp_path):
    path = tmp_path / "t.csv"
    assert write_csv(path, ["a", "b"], [(1, 2.5), (3, "x")]) == 2
    lines = path.read_text().splitlines()
    assert lines[-1] == f"{COMPLETE_MARKER} rows=2"
    assert read_csv(path) == [{"a": "1", "b": "2.5"}, {"a": "3", "b": "x"}]
    assert not (tmp_path / "t.csv.partial").exists()
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ParseError, match="completeness"):
        read_csv(path)


def test_csv_interrupted_leaves_no_table(tmp_path):
    def rows():
        yield (1, 2)
        raise RuntimeError("boom")

    path = tmp_path / "t.csv"
    with pytest.raises(RuntimeError):
        write_csv(path, ["a", "b"], rows())
    assert not path.exists()
    assert not (tmp_path / "t.csv.partial").exists()
