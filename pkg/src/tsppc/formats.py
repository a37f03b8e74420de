"""TSPLIB point clouds, the ``.tsppc`` instance format, tour files and CSV tables.

A ``.tsppc`` document is a TSPLIB-style header followed by sections::

    NAME : eil51-children
    TYPE : TSPPC
    FORMAT_VERSION : 1
    SOURCE : eil51
    DIRECTION : children_central
    METRIC : euc2d-continuous
    DIMENSION : 51
    EDGE_WEIGHT_TYPE : EUC_2D
    NODE_COORD_SECTION
    0 32 39
    ...
    DEPOT_SECTION
    0
    -1
    PRECEDENCE_SECTION
    1 26
    ...
    PAYLOAD_SECTION
    1 0 1
    26 0 -1
    ...
    SOURCE_ID_SECTION
    0 46
    ...
    EOF

Node ids are the internal ones (0 = depot, N + 1 = implicit end depot).
``SOURCE_ID_SECTION`` records the id each location had in the TSPLIB file.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .model import DEFAULT_METRIC, Commodity, Instance, InstanceError, Tour

FORMAT_VERSION = 1
SUPPORTED_EDGE_WEIGHT_TYPES = ("EUC_2D",)


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class TsplibPointCloud:
    name: str
    coords: tuple[tuple[float, float], ...]
    comment: str = ""

    @property
    def dimension(self) -> int:
        return len(self.coords)


def _split_header(line: str) -> tuple[str, str]:
    if ":" in line:
        key, value = line.split(":", 1)
    else:
        parts = line.split(None, 1)
        key, value = parts[0], parts[1] if len(parts) > 1 else ""
    return key.strip().upper(), value.strip()


def _number(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"malformed number {token!r}", lineno) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite number {token!r}", lineno)
    return value


def _integer(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"malformed integer {token!r}", lineno) from None


def parse_tsplib(text: str) -> TsplibPointCloud:
    headers: dict[str, str] = {}
    comments: list[str] = []
    coords: dict[int, tuple[float, float]] = {}
    section = None
    coord_line = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if section == "NODE_COORD_SECTION" and (line[0].isdigit() or line[0] in "+-."):
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"expected 'id x y', got {line!r}", lineno)
            node = _integer(parts[0], lineno)
            if node in coords:
                raise ParseError(f"duplicate node id {node}", lineno)
            coords[node] = (_number(parts[1], lineno), _number(parts[2], lineno))
            continue
        key, value = _split_header(line)
        if key.endswith("_SECTION"):
            if key != "NODE_COORD_SECTION":
                raise ParseError(f"unsupported section {key}", lineno)
            section = key
            coord_line = lineno
            continue
        if section is not None:
            raise ParseError(f"unexpected line {line!r} inside {section}", lineno)
        if key == "COMMENT":
            comments.append(value)
        else:
            headers[key] = value

    if headers.get("TYPE", "TSP").upper() != "TSP":
        raise ParseError(f"unsupported TYPE {headers['TYPE']!r}; only TSP is read")
    ewt = headers.get("EDGE_WEIGHT_TYPE")
    if ewt is None:
        raise ParseError("missing EDGE_WEIGHT_TYPE")
    if ewt.upper() not in SUPPORTED_EDGE_WEIGHT_TYPES:
        raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {ewt!r}")
    if "DIMENSION" not in headers:
        raise ParseError("missing DIMENSION")
    dimension = _integer(headers["DIMENSION"], None)
    if section is None:
        raise ParseError("missing NODE_COORD_SECTION")
    if len(coords) != dimension:
        raise ParseError(
            f"DIMENSION is {dimension} but {len(coords)} coordinate records were read",
            coord_line,
        )
    ids = sorted(coords)
    if ids != list(range(1, dimension + 1)):
        raise ParseError("node ids must be 1..DIMENSION", coord_line)
    return TsplibPointCloud(
        headers.get("NAME", ""), tuple(coords[i] for i in ids), "; ".join(comments)
    )


def read_tsplib(path) -> TsplibPointCloud:
    with open(path, encoding="ascii", errors="replace") as fh:
        return parse_tsplib(fh.read())


def format_number(value: float) -> str:
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def write_instance(instance: Instance) -> str:
    out = [
        f"NAME : {instance.name}",
        "TYPE : TSPPC",
        f"FORMAT_VERSION : {FORMAT_VERSION}",
    ]
    if instance.source:
        out.append(f"SOURCE : {instance.source}")
    if instance.direction:
        out.append(f"DIRECTION : {instance.direction}")
    out += [
        f"METRIC : {instance.metric}",
        f"DIMENSION : {len(instance.points)}",
        "EDGE_WEIGHT_TYPE : EUC_2D",
        "NODE_COORD_SECTION",
    ]
    out += [f"{i} {format_number(x)} {format_number(y)}" for i, (x, y) in enumerate(instance.points)]
    out += ["DEPOT_SECTION", "0", "-1", "PRECEDENCE_SECTION"]
    prec = instance.precedence
    for parent in sorted(prec.children_of):
        for child in sorted(prec.children_of[parent]):
            out.append(f"{parent} {child}")
    out.append("PAYLOAD_SECTION")
    for com in instance.commodities:
        for node, q in com.payload:
            out.append(f"{node} {com.id} {format_number(q)}")
    if instance.source_ids:
        out.append("SOURCE_ID_SECTION")
        out += [f"{i} {sid}" for i, sid in enumerate(instance.source_ids)]
    out.append("EOF")
    return "\n".join(out) + "\n"


_INSTANCE_SECTIONS = (
    "NODE_COORD_SECTION",
    "DEPOT_SECTION",
    "PRECEDENCE_SECTION",
    "PAYLOAD_SECTION",
    "SOURCE_ID_SECTION",
)


def read_instance(text: str) -> Instance:
    headers: dict[str, str] = {}
    rows: dict[str, list[tuple[int, list[str]]]] = {s: [] for s in _INSTANCE_SECTIONS}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        head = line.split(None, 1)[0].rstrip(":").upper()
        if head.endswith("_SECTION"):
            if head not in _INSTANCE_SECTIONS:
                raise ParseError(f"unknown section {head}", lineno)
            section = head
            continue
        if section is not None and (line[0].isdigit() or line[0] in "+-."):
            rows[section].append((lineno, line.split()))
            continue
        if section is not None:
            raise ParseError(f"unexpected line {line!r} inside {section}", lineno)
        key, value = _split_header(line)
        headers[key] = value

    if headers.get("TYPE", "").upper() != "TSPPC":
        raise ParseError(f"not a TSPPC document (TYPE {headers.get('TYPE')!r})")
    version = headers.get("FORMAT_VERSION")
    if version is None or _integer(version, None) != FORMAT_VERSION:
        raise ParseError(f"unsupported FORMAT_VERSION {version!r}; expected {FORMAT_VERSION}")
    if headers.get("EDGE_WEIGHT_TYPE", "EUC_2D").upper() != "EUC_2D":
        raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {headers['EDGE_WEIGHT_TYPE']!r}")
    if "DIMENSION" not in headers:
        raise ParseError("missing DIMENSION")
    dimension = _integer(headers["DIMENSION"], None)

    points: dict[int, tuple[float, float]] = {}
    for lineno, parts in rows["NODE_COORD_SECTION"]:
        if len(parts) != 3:
            raise ParseError("expected 'id x y'", lineno)
        node = _integer(parts[0], lineno)
        if node in points:
            raise ParseError(f"duplicate node id {node}", lineno)
        points[node] = (_number(parts[1], lineno), _number(parts[2], lineno))
    if sorted(points) != list(range(dimension)):
        raise ParseError(
            f"NODE_COORD_SECTION must list ids 0..{dimension - 1} (DIMENSION {dimension})"
        )
    end = dimension

    depots = [_integer(p[0], ln) for ln, p in rows["DEPOT_SECTION"] if p[0] != "-1"]
    if depots != [0]:
        raise ParseError(f"DEPOT_SECTION must name node 0, got {depots}")

    def node_ref(token: str, lineno: int) -> int:
        node = _integer(token, lineno)
        if not 1 <= node < end:
            raise ParseError(f"node {node} is not a location of this instance (1..{end - 1})", lineno)
        return node

    payloads: dict[int, dict[int, float]] = {}
    for lineno, parts in rows["PAYLOAD_SECTION"]:
        if len(parts) != 3:
            raise ParseError("expected 'node commodity q'", lineno)
        node = node_ref(parts[0], lineno)
        com = _integer(parts[1], lineno)
        if node in payloads.setdefault(com, {}):
            raise ParseError(f"duplicate payload for node {node}, commodity {com}", lineno)
        payloads[com][node] = _number(parts[2], lineno)

    declared = set()
    for lineno, parts in rows["PRECEDENCE_SECTION"]:
        if parts == ["-1"]:
            continue
        if len(parts) != 2:
            raise ParseError("expected 'parent child'", lineno)
        declared.add((node_ref(parts[0], lineno), node_ref(parts[1], lineno)))

    source_ids = []
    if rows["SOURCE_ID_SECTION"]:
        mapping = {}
        for lineno, parts in rows["SOURCE_ID_SECTION"]:
            if len(parts) != 2:
                raise ParseError("expected 'node source_id'", lineno)
            mapping[_integer(parts[0], lineno)] = _integer(parts[1], lineno)
        if sorted(mapping) != list(range(dimension)):
            raise ParseError("SOURCE_ID_SECTION must cover every location")
        source_ids = [mapping[i] for i in range(dimension)]

    commodities = tuple(Commodity.from_mapping(cid, payloads[cid]) for cid in sorted(payloads))
    try:
        instance = Instance(
            name=headers.get("NAME", ""),
            points=tuple(points[i] for i in range(dimension)),
            commodities=commodities,
            metric=headers.get("METRIC", DEFAULT_METRIC),
            source=headers.get("SOURCE", ""),
            direction=headers.get("DIRECTION", ""),
            source_ids=tuple(source_ids),
        )
    except InstanceError as exc:
        raise ParseError(f"inconsistent instance data: {exc}") from None
    derived = {(p, c) for c, ps in instance.precedence.parents_of.items() for p in ps}
    if derived != declared:
        extra = sorted(declared - derived)[:3]
        missing = sorted(derived - declared)[:3]
        raise ParseError(
            "PRECEDENCE_SECTION disagrees with PAYLOAD_SECTION "
            f"(declared only: {extra}, implied only: {missing})"
        )
    return instance


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return read_instance(fh.read())


def save_instance(instance: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_instance(instance))


def write_tour(tour: Tour, instance: Instance, name: Optional[str] = None) -> str:
    name = name or f"{instance.name}.{tour.heuristic or 'tour'}"
    out = [
        f"NAME : {name}",
        f"COMMENT : cost {tour.cost!r}",
        f"COMMENT : metric {instance.metric}",
        f"COMMENT : heuristic {tour.heuristic or 'unknown'}",
        f"COMMENT : instance {instance.name}",
        "TYPE : TOUR",
        f"DIMENSION : {len(tour.order)}",
        "TOUR_SECTION",
    ]
    out += [str(v) for v in tour.order]
    out += ["-1", "EOF"]
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class TourDocument:
    name: str
    order: tuple[int, ...]
    comments: dict

    @property
    def cost(self) -> Optional[float]:
        value = self.comments.get("cost")
        return float(value) if value is not None else None


def read_tour(text: str) -> TourDocument:
    name = ""
    comments: dict[str, str] = {}
    order: list[int] = []
    dimension = None
    in_tour = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if in_tour:
            for token in line.split():
                value = _integer(token, lineno)
                if value == -1:
                    in_tour = False
                    break
                order.append(value)
            continue
        key, value = _split_header(line)
        if key == "TOUR_SECTION":
            in_tour = True
        elif key == "NAME":
            name = value
        elif key == "COMMENT":
            parts = value.split(None, 1)
            if len(parts) == 2:
                comments[parts[0].lower()] = parts[1]
        elif key == "DIMENSION":
            dimension = _integer(value, lineno)
        elif key == "TYPE" and value.upper() != "TOUR":
            raise ParseError(f"not a TOUR document (TYPE {value!r})", lineno)
    if dimension is not None and dimension != len(order):
        raise ParseError(f"DIMENSION is {dimension} but the tour lists {len(order)} nodes")
    return TourDocument(name, tuple(order), comments)


def load_tour(path) -> TourDocument:
    with open(path, encoding="utf-8") as fh:
        return read_tour(fh.read())


COMPLETE_MARKER = "# complete"


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write a CSV table and a trailing completeness marker row.

    The file is written under a temporary name and renamed once complete.
    """
    tmp = f"{path}.partial"
    count = 0
    try:
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow(row)
                count += 1
            fh.write(f"{COMPLETE_MARKER} rows={count}\n")
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    os.replace(tmp, path)
    return count


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[-1].startswith(COMPLETE_MARKER):
        raise ParseError(f"{path}: missing completeness marker")
    return list(csv.DictReader(io.StringIO("\n".join(lines[:-1]))))
