"""Readers and writers for CVRPLib ``.vrp`` files and the ``.postvrp`` text format.

``.postvrp`` layout (one record per line, ``#`` starts a comment)::

    NAME ManhattanPilot_500_2
    N 3
    RMAX 480
    DEPOT 0 0          # coordinates optional when a MATRIX follows
    D 17 3.5 4.0       # delivery label, then optional x y
    D 18 10 2
    D 21 -4 7
    MATRIX             # optional: N+1 rows, depot first, then deliveries in D order
    ...
    EOF

Without a MATRIX the distances are unrounded Euclidean.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

from .model import (
    DEPOT,
    Capacity,
    Instance,
    InstanceError,
    MaxRouteLength,
    euclidean_matrix,
)


class ParseError(InstanceError):
    """A malformed instance file. Carries the offending line number and field."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(field)
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


# -- instance names ------------------------------------------------------------

@dataclass(frozen=True)
class PostVrpName:
    family: str
    size: int
    id: int


@dataclass(frozen=True)
class CvrplibName:
    prefix: str
    n: int
    k: int


@dataclass(frozen=True)
class ForeignName:
    raw: str


_CVRPLIB_NAME = re.compile(r"^([A-Za-z]+)-n(\d+)-k(\d+)$")
_POSTVRP_NAME = re.compile(r"^([A-Za-z][A-Za-z0-9]*?)[_-](\d+)[_-](\d+)$")
_KNOWN_SUFFIXES = (".vrp", ".postvrp", ".txt", ".sol", ".csv", ".json")


def parse_instance_name(name: str) -> Union[PostVrpName, CvrplibName, ForeignName]:
    """Structured view of an instance name. Never raises."""
    stem = Path(str(name)).name
    for suffix in _KNOWN_SUFFIXES:
        if stem.lower().endswith(suffix):
            stem = stem[: -len(suffix)]
            break
    m = _CVRPLIB_NAME.match(stem)
    if m:
        return CvrplibName(m.group(1), int(m.group(2)), int(m.group(3)))
    m = _POSTVRP_NAME.match(stem)
    if m:
        return PostVrpName(m.group(1), int(m.group(2)), int(m.group(3)))
    return ForeignName(str(name))


def name_k(name: str) -> int | None:
    parsed = parse_instance_name(name)
    return parsed.k if isinstance(parsed, CvrplibName) else None


@dataclass(frozen=True)
class InstanceFile:
    path: Path
    format: str  # "CVRPLIB" or "POSTVRP"
    declared_k: int | None = None
    declared_n: int | None = None

    @classmethod
    def detect(cls, path) -> "InstanceFile":
        path = Path(path)
        fmt = "POSTVRP" if path.suffix.lower() == ".postvrp" else "CVRPLIB"
        parsed = parse_instance_name(path.name)
        if isinstance(parsed, CvrplibName):
            return cls(path, fmt, parsed.k, parsed.n)
        return cls(path, fmt)


def load_instance(path) -> Instance:
    """Read an instance file, dispatching on the extension."""
    info = InstanceFile.detect(path)
    text = Path(path).read_text()
    if info.format == "POSTVRP":
        return parse_postvrp(text)
    return parse_cvrplib(text)


# -- CVRPLib -------------------------------------------------------------------

_REQUIRED_CVRPLIB = ("NAME", "DIMENSION", "CAPACITY", "EDGE_WEIGHT_TYPE")
_CVRPLIB_SECTIONS = ("NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION")


def _number(token: str, line: int, fieldname: str, kind=float):
    try:
        if kind is int:
            value = float(token)
            if not value.is_integer():
                raise ValueError
            return int(value)
        return float(token)
    except ValueError:
        raise ParseError(f"malformed number {token!r}", line, fieldname) from None


def _looks_numeric(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def parse_cvrplib(text: str) -> Instance:
    """Parse a TSPLIB-style CVRP instance with EUC_2D weights.

    Distances follow the benchmark convention ``nint(euclidean)``.
    """
    header: dict[str, tuple[str, int]] = {}
    sections: dict[str, list[tuple[int, list[str]]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        head = line.split()[0].rstrip(":")
        if head.endswith("_SECTION"):
            current = head
            sections[current] = []
            continue
        if ":" in line and not _looks_numeric(head):
            key, _, value = line.partition(":")
            header[key.strip().upper()] = (value.strip(), lineno)
            current = None
            continue
        if current is None:
            raise ParseError(f"unexpected content {line!r}", lineno)
        sections[current].append((lineno, line.split()))

    for key in _REQUIRED_CVRPLIB:
        if key not in header:
            raise ParseError("missing header field", field=key)
    for sec in _CVRPLIB_SECTIONS:
        if sec not in sections:
            raise ParseError("missing section", field=sec)

    name = header["NAME"][0]
    wtype, wline = header["EDGE_WEIGHT_TYPE"]
    if wtype.upper() != "EUC_2D":
        raise ParseError(f"unsupported weight type {wtype!r}", wline, "EDGE_WEIGHT_TYPE")
    dim = _number(header["DIMENSION"][0], header["DIMENSION"][1], "DIMENSION", int)
    cap_raw, cap_line = header["CAPACITY"]
    capacity = _number(cap_raw, cap_line, "CAPACITY")
    capacity = int(capacity) if capacity.is_integer() else capacity

    coords: dict[int, tuple[float, float]] = {}
    for lineno, parts in sections["NODE_COORD_SECTION"]:
        if len(parts) != 3:
            raise ParseError("expected 'id x y'", lineno, "NODE_COORD_SECTION")
        node = _number(parts[0], lineno, "NODE_COORD_SECTION", int)
        if node in coords:
            raise ParseError(f"duplicate node {node}", lineno, "NODE_COORD_SECTION")
        coords[node] = (
            _number(parts[1], lineno, "NODE_COORD_SECTION"),
            _number(parts[2], lineno, "NODE_COORD_SECTION"),
        )
    demand: dict[int, float] = {}
    for lineno, parts in sections["DEMAND_SECTION"]:
        if len(parts) != 2:
            raise ParseError("expected 'id demand'", lineno, "DEMAND_SECTION")
        node = _number(parts[0], lineno, "DEMAND_SECTION", int)
        q = _number(parts[1], lineno, "DEMAND_SECTION")
        demand[node] = int(q) if q.is_integer() else q
    depots = []
    for lineno, parts in sections["DEPOT_SECTION"]:
        for tok in parts:
            v = _number(tok, lineno, "DEPOT_SECTION", int)
            if v == -1:
                break
            depots.append((v, lineno))
    if len(depots) != 1:
        raise ParseError(f"expected exactly one depot, found {len(depots)}", field="DEPOT_SECTION")
    depot, depot_line = depots[0]

    if len(coords) != dim:
        raise ParseError(f"DIMENSION is {dim} but {len(coords)} coordinates given",
                         field="NODE_COORD_SECTION")
    if set(demand) != set(coords):
        raise ParseError("demand and coordinate node sets differ", field="DEMAND_SECTION")
    if depot not in coords:
        raise ParseError(f"depot {depot} has no coordinates", depot_line, "DEPOT_SECTION")
    if demand[depot] != 0:
        raise ParseError(f"depot demand is {demand[depot]}, expected 0", field="DEMAND_SECTION")

    labels = [depot] + [v for v in coords if v != depot]
    pts = [coords[v] for v in labels]
    try:
        return Instance(
            name=name,
            dist=euclidean_matrix(pts, rounded=True),
            constraint=Capacity(capacity, tuple(demand[v] for v in labels)),
            coords=pts,
            labels=labels,
        )
    except InstanceError as exc:
        raise ParseError(str(exc)) from exc


def _fmt(x) -> str:
    if isinstance(x, float) and x.is_integer():
        return str(int(x))
    return repr(x)


def write_cvrplib(inst: Instance) -> str:
    """Serialize a capacitated, coordinate-bearing instance back to ``.vrp`` text."""
    if inst.capacity is None or inst.coords is None:
        raise InstanceError("only capacitated instances with coordinates can be written as CVRPLib")
    lines = [
        f"NAME : {inst.name}",
        "TYPE : CVRP",
        f"DIMENSION : {inst.n + 1}",
        "EDGE_WEIGHT_TYPE : EUC_2D",
        f"CAPACITY : {_fmt(inst.capacity)}",
        "NODE_COORD_SECTION",
    ]
    lines += [f"{lab}\t{_fmt(x)}\t{_fmt(y)}" for lab, (x, y) in zip(inst.labels, inst.coords)]
    lines.append("DEMAND_SECTION")
    lines += [f"{lab}\t{_fmt(q)}" for lab, q in zip(inst.labels, inst.demands)]
    lines += ["DEPOT_SECTION", f"\t{inst.depot_label}", "\t-1", "EOF", ""]
    return "\n".join(lines)


# -- PostVRP -------------------------------------------------------------------

def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_postvrp(text: str) -> Instance:
    """Parse a ``.postvrp`` file into a route-length-limited instance."""
    name = None
    declared_n = None
    rmax = None
    depot_xy = None
    depot_seen = False
    deliveries: list[tuple[str, tuple[float, float] | None, int]] = []
    matrix_rows: list[list[float]] | None = None
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        lineno = i + 1
        line = _strip_comment(lines[i])
        i += 1
        if not line:
            continue
        parts = line.split()
        key = parts[0].upper()
        if key == "EOF":
            break
        if key == "NAME":
            if len(parts) < 2:
                raise ParseError("missing value", lineno, "NAME")
            name = " ".join(parts[1:])
        elif key == "N":
            if len(parts) != 2:
                raise ParseError("expected 'N <count>'", lineno, "N")
            declared_n = _number(parts[1], lineno, "N", int)
        elif key == "RMAX":
            if len(parts) != 2:
                raise ParseError("expected 'RMAX <limit>'", lineno, "RMAX")
            rmax = _number(parts[1], lineno, "RMAX")
            if rmax <= 0:
                raise ParseError("RMAX must be positive", lineno, "RMAX")
        elif key == "DEPOT":
            if len(parts) not in (1, 3):
                raise ParseError("expected 'DEPOT [x y]'", lineno, "DEPOT")
            depot_seen = True
            if len(parts) == 3:
                depot_xy = (_number(parts[1], lineno, "DEPOT"), _number(parts[2], lineno, "DEPOT"))
        elif key == "D":
            if len(parts) not in (2, 4):
                raise ParseError("expected 'D <id> [x y]'", lineno, "D")
            xy = None
            if len(parts) == 4:
                xy = (_number(parts[2], lineno, "D"), _number(parts[3], lineno, "D"))
            deliveries.append((parts[1], xy, lineno))
        elif key == "MATRIX":
            matrix_rows = []
            while i < len(lines):
                row_line = _strip_comment(lines[i])
                if row_line.upper() == "EOF":
                    break
                i += 1
                if row_line:
                    matrix_rows.append(
                        [_number(tok, i, "MATRIX") for tok in row_line.split()]
                    )
        else:
            raise ParseError(f"unknown record {parts[0]!r}", lineno)

    if name is None:
        raise ParseError("missing NAME", field="NAME")
    if rmax is None:
        raise ParseError("missing RMAX", field="RMAX")
    if not depot_seen:
        raise ParseError("missing DEPOT", field="DEPOT")
    if not deliveries:
        raise ParseError("no deliveries", field="D")
    if declared_n is not None and declared_n != len(deliveries):
        raise ParseError(f"N is {declared_n} but {len(deliveries)} deliveries listed", field="N")
    labels = ["depot"] + [lab for lab, _, _ in deliveries]
    if len(set(labels)) != len(labels):
        raise ParseError("delivery labels must be unique (and not 'depot')", field="D")
    labels = [_label(x) for x in labels]

    have_coords = depot_xy is not None and all(xy is not None for _, xy, _ in deliveries)
    coords = [depot_xy] + [xy for _, xy, _ in deliveries] if have_coords else None
    if matrix_rows is not None:
        size = len(deliveries) + 1
        if len(matrix_rows) != size or any(len(r) != size for r in matrix_rows):
            raise ParseError(f"MATRIX must be {size}x{size}", field="MATRIX")
        dist = matrix_rows
    elif have_coords:
        dist = euclidean_matrix(coords, rounded=False)
    else:
        raise ParseError("need coordinates for every node or a MATRIX section")

    try:
        return Instance(name=name, dist=dist, constraint=MaxRouteLength(rmax),
                        coords=coords, labels=labels)
    except InstanceError as exc:
        raise ParseError(str(exc)) from exc


def _label(token: str):
    try:
        return int(token)
    except ValueError:
        return token


def write_postvrp(inst: Instance, with_matrix: bool | None = None) -> str:
    """Serialize a route-length-limited instance.

    The matrix is written when coordinates are absent or when requested.
    """
    if inst.max_length is None:
        raise InstanceError("only RMAX instances can be written as .postvrp")
    if with_matrix is None:
        with_matrix = inst.coords is None
    lines = [f"NAME {inst.name}", f"N {inst.n}", f"RMAX {_fmt(inst.max_length)}"]
    if inst.coords is not None:
        x, y = inst.coords[DEPOT]
        lines.append(f"DEPOT {_fmt(x)} {_fmt(y)}")
    else:
        lines.append("DEPOT")
    for d in inst.deliveries:
        if inst.coords is not None:
            x, y = inst.coords[d]
            lines.append(f"D {inst.labels[d]} {_fmt(x)} {_fmt(y)}")
        else:
            lines.append(f"D {inst.labels[d]}")
    if with_matrix:
        lines.append("MATRIX")
        for row in _rows(inst):
            lines.append(" ".join(_fmt(float(v)) for v in row))
    lines += ["EOF", ""]
    return "\n".join(lines)


def _rows(inst: Instance) -> Iterable:
    for u in range(inst.n + 1):
        yield inst.dist[u]


# -- generator output -> .postvrp ------------------------------------------------

def convert_generator_json(data: dict) -> str:
    """Normalize a generator dump to ``.postvrp`` text.

    Accepted keys: ``name``, ``rmax``, ``depot`` ([x, y] or null), ``deliveries``
    (list of ``{"id", "x", "y"}`` objects or ``[id, x, y]`` triples) and an
    optional ``matrix`` (depot row first).
    """
    try:
        name = data["name"]
        rmax = data["rmax"]
        items = data["deliveries"]
    except KeyError as exc:
        raise ParseError(f"generator output lacks {exc.args[0]!r}") from None
    depot = data.get("depot")
    lines = [f"NAME {name}", f"N {len(items)}", f"RMAX {_fmt(float(rmax))}"]
    lines.append("DEPOT" if depot is None else f"DEPOT {_fmt(float(depot[0]))} {_fmt(float(depot[1]))}")
    for item in items:
        if isinstance(item, dict):
            ident, x, y = item["id"], item.get("x"), item.get("y")
        elif len(item) == 3:
            ident, x, y = item
        else:
            ident, x, y = item[0], None, None
        if x is None or y is None:
            lines.append(f"D {ident}")
        else:
            lines.append(f"D {ident} {_fmt(float(x))} {_fmt(float(y))}")
    if data.get("matrix") is not None:
        lines.append("MATRIX")
        lines += [" ".join(_fmt(float(v)) for v in row) for row in data["matrix"]]
    lines += ["EOF", ""]
    text = "\n".join(lines)
    parse_postvrp(text)  # validate before handing it back
    return text


def convert_file(src, rmax: float | None = None) -> str:
    """Convert a generator JSON dump, or a CVRPLib file plus an RMAX, to ``.postvrp``."""
    src = Path(src)
    if src.suffix.lower() == ".json":
        data = json.loads(src.read_text())
        if rmax is not None:
            data["rmax"] = rmax
        return convert_generator_json(data)
    if rmax is None:
        raise ParseError("converting a CVRPLib file needs an RMAX")
    cvrp = parse_cvrplib(src.read_text())
    data = {
        "name": cvrp.name,
        "rmax": rmax,
        "depot": list(cvrp.coords[DEPOT]),
        "deliveries": [[cvrp.labels[d], *cvrp.coords[d]] for d in cvrp.deliveries],
    }
    return convert_generator_json(data)
