"""JSON formats for complexes, maps, diagram realizations, and towers.

Every integer is written as a decimal string so large entries survive
readers that parse numbers into floats; rationals are written "p/q".
Loading distinguishes two failure modes: FormatError means the file
cannot be read as the declared shape and carries the JSON path of the
first offending field, while InvalidObject means the shapes were fine
but the encoded object breaks a defining identity (a boundary that
does not square to zero, an edge map that is not a chain map).
"""

from __future__ import annotations

import json
from fractions import Fraction

from .chains import ChainComplex, GradedMap
from .diagrams import (
    Bimodule,
    DComplex,
    DiagramOfBimodules,
    Edge,
    preset_diagram,
    tensor_with_bimodule,
)
from .exact_linalg import QQ, ZZ, Matrix, Ring, ShapeMismatch, Zmod
from .ladder import D0Complex, D0Morphism


class FormatError(ValueError):
    """The payload does not match the expected shape at some JSON path."""


class InvalidObject(ValueError):
    """Well-shaped data encoding an object that breaks its own axioms."""


# ---------------------------------------------------------------------------
# Scalars


def dump_ring(ring: Ring) -> str:
    if ring.kind == "Zmod":
        return f"Z/{ring.modulus}"
    return ring.kind


def load_ring(value, where: str) -> Ring:
    if not isinstance(value, str):
        raise FormatError(f"{where}: expected a ring name string")
    if value == "Z":
        return ZZ
    if value == "Q":
        return QQ
    if value.startswith("Z/"):
        tail = value[2:]
        if not (tail.isdigit() and int(tail) >= 2):
            raise FormatError(f"{where}: modulus in {value!r} must be an integer >= 2")
        return Zmod(int(tail))
    raise FormatError(f"{where}: unknown ring {value!r}, expected Z, Q, or Z/<m>")


def load_int(value, where: str) -> int:
    if isinstance(value, bool):
        raise FormatError(f"{where}: expected an integer, got a boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        text = value.strip()
        sign_free = text[1:] if text[:1] in "+-" else text
        if sign_free.isdigit():
            return int(text)
    raise FormatError(f"{where}: expected an integer in decimal notation, got {value!r}")


def _dump_entry(x) -> str:
    return str(x)


def _load_entry(value, ring: Ring, where: str):
    if ring.kind == "Q":
        if isinstance(value, (int, str)) and not isinstance(value, bool):
            try:
                return Fraction(value)
            except (ValueError, ZeroDivisionError):
                pass
        raise FormatError(f"{where}: expected an integer or 'p/q' string, got {value!r}")
    return load_int(value, where)


# ---------------------------------------------------------------------------
# Matrices and block families


def dump_matrix(m: Matrix) -> list:
    return [[_dump_entry(x) for x in row] for row in m.entries]


def load_matrix(value, ring: Ring, rows: int, cols: int, where: str) -> Matrix:
    if not isinstance(value, list):
        raise FormatError(f"{where}: expected a list of rows")
    if len(value) != rows:
        raise FormatError(f"{where}: expected {rows} rows, got {len(value)}")
    data = []
    for i, row in enumerate(value):
        if not isinstance(row, list):
            raise FormatError(f"{where} row {i}: expected a list of entries")
        if len(row) != cols:
            raise FormatError(f"{where} row {i}: expected {cols} entries, got {len(row)}")
        data.append(
            [_load_entry(x, ring, f"{where} row {i} column {j}") for j, x in enumerate(row)]
        )
    if rows == 0:
        return Matrix.zero(ring, 0, cols)
    return Matrix.from_rows(ring, data)


def _expect_object(value, where: str, keys: tuple) -> dict:
    if not isinstance(value, dict):
        raise FormatError(f"{where}: expected a JSON object")
    for key in keys:
        if key not in value:
            raise FormatError(f"{where}: missing field {key!r}")
    return value


def dump_blocks(f: GradedMap) -> dict:
    return {str(n): dump_matrix(m) for n, m in f.blocks}


def load_blocks(value, source: ChainComplex, target: ChainComplex, degree: int, where: str) -> GradedMap:
    if not isinstance(value, dict):
        raise FormatError(f"{where}: expected an object of degree-indexed blocks")
    blocks = {}
    for key, mat in value.items():
        n = load_int(key, f"{where} key {key!r}")
        blocks[n] = load_matrix(
            mat, source.ring, target.rank(n + degree), source.rank(n), f"{where}[{key}]"
        )
    try:
        return GradedMap.build(source, target, degree, blocks)
    except (ValueError, ShapeMismatch) as err:
        raise FormatError(f"{where}: {err}") from err


# ---------------------------------------------------------------------------
# Chain complexes


def dump_complex(c: ChainComplex) -> dict:
    return {
        "ring": dump_ring(c.ring),
        "ranks": {str(n): str(r) for n, r in c.ranks},
        "differentials": {str(n): dump_matrix(m) for n, m in c.diffs},
    }


def load_complex(value, where: str = "complex", validate: bool = True) -> ChainComplex:
    obj = _expect_object(value, where, ("ring", "ranks", "differentials"))
    ring = load_ring(obj["ring"], f"{where}.ring")
    if not isinstance(obj["ranks"], dict):
        raise FormatError(f"{where}.ranks: expected an object")
    ranks = {}
    for key, val in obj["ranks"].items():
        n = load_int(key, f"{where}.ranks key {key!r}")
        r = load_int(val, f"{where}.ranks[{key}]")
        if r < 0:
            raise FormatError(f"{where}.ranks[{key}]: rank must be nonnegative")
        ranks[n] = r
    if not isinstance(obj["differentials"], dict):
        raise FormatError(f"{where}.differentials: expected an object")
    diffs = {}
    for key, val in obj["differentials"].items():
        n = load_int(key, f"{where}.differentials key {key!r}")
        diffs[n] = load_matrix(
            val, ring, ranks.get(n - 1, 0), ranks.get(n, 0), f"{where}.differentials[{key}]"
        )
    built = ChainComplex.build(ring, ranks, diffs, validate=False)
    if validate:
        try:
            built.validate()
        except ValueError as err:
            raise InvalidObject(f"{where}: {err}") from err
    return built


# ---------------------------------------------------------------------------
# Standalone graded maps


def dump_graded_map(f: GradedMap) -> dict:
    return {
        "source": dump_complex(f.source),
        "target": dump_complex(f.target),
        "degree": str(f.degree),
        "blocks": dump_blocks(f),
    }


def load_graded_map(value, where: str = "map", validate: bool = True) -> GradedMap:
    obj = _expect_object(value, where, ("source", "target", "degree", "blocks"))
    source = load_complex(obj["source"], f"{where}.source", validate)
    target = load_complex(obj["target"], f"{where}.target", validate)
    degree = load_int(obj["degree"], f"{where}.degree")
    return load_blocks(obj["blocks"], source, target, degree, f"{where}.blocks")


# ---------------------------------------------------------------------------
# Diagram realizations


def dump_diagram(d: DiagramOfBimodules) -> dict:
    return {
        "vertices": [[name, dump_ring(ring)] for name, ring in d.vertices],
        "edges": [
            {
                "name": e.name,
                "source": e.source,
                "target": e.target,
                "rank": str(e.bimodule.rank),
            }
            for e in d.edges
        ],
        "relations": [[list(left), list(right)] for left, right in d.relations],
    }


def load_diagram(value, where: str = "diagram") -> DiagramOfBimodules:
    if not isinstance(value, dict):
        raise FormatError(f"{where}: expected a JSON object")
    if "name" in value:
        name = value["name"]
        if not isinstance(name, str):
            raise FormatError(f"{where}.name: expected a string")
        ring = load_ring(value.get("ring", "Z"), f"{where}.ring")
        params = {}
        for key in ("s_rank", "t_rank", "u_rank", "levels"):
            if key in value:
                params[key] = load_int(value[key], f"{where}.{key}")
        try:
            return preset_diagram(name, ring, **params)
        except ValueError as err:
            raise FormatError(f"{where}: {err}") from err
    obj = _expect_object(value, where, ("vertices", "edges"))
    if not isinstance(obj["vertices"], list):
        raise FormatError(f"{where}.vertices: expected a list")
    vertices = []
    for i, pair in enumerate(obj["vertices"]):
        if not (isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], str)):
            raise FormatError(f"{where}.vertices[{i}]: expected [name, ring]")
        vertices.append((pair[0], load_ring(pair[1], f"{where}.vertices[{i}]")))
    rings = dict(vertices)
    if not isinstance(obj["edges"], list):
        raise FormatError(f"{where}.edges: expected a list")
    edges = []
    for i, entry in enumerate(obj["edges"]):
        espec = _expect_object(entry, f"{where}.edges[{i}]", ("name", "source", "target", "rank"))
        for key in ("name", "source", "target"):
            if not isinstance(espec[key], str):
                raise FormatError(f"{where}.edges[{i}].{key}: expected a string")
        if espec["target"] not in rings:
            raise FormatError(f"{where}.edges[{i}]: unknown target vertex {espec['target']!r}")
        rank = load_int(espec["rank"], f"{where}.edges[{i}].rank")
        if rank < 1:
            raise FormatError(f"{where}.edges[{i}].rank: bimodule rank must be positive")
        edges.append(
            Edge(espec["name"], espec["source"], espec["target"], Bimodule(rings[espec["target"]], rank))
        )
    relations = []
    for i, pair in enumerate(value.get("relations", [])):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise FormatError(f"{where}.relations[{i}]: expected [path, path]")
        left, right = pair
        for side in (left, right):
            if not (isinstance(side, list) and all(isinstance(x, str) for x in side)):
                raise FormatError(f"{where}.relations[{i}]: paths are lists of edge names")
        relations.append((tuple(left), tuple(right)))
    try:
        return DiagramOfBimodules(tuple(vertices), tuple(edges), tuple(relations))
    except ValueError as err:
        raise FormatError(f"{where}: {err}") from err


def dump_dcomplex(x: DComplex) -> dict:
    return {
        "diagram": dump_diagram(x.diagram),
        "complexes": {name: dump_complex(c) for name, c in x.vertex_complexes},
        "edge_maps": {name: dump_blocks(f) for name, f in x.edge_maps},
    }


def load_dcomplex(value, where: str = "dcomplex", validate: bool = True) -> DComplex:
    obj = _expect_object(value, where, ("diagram", "complexes", "edge_maps"))
    diagram = load_diagram(obj["diagram"], f"{where}.diagram")
    if not isinstance(obj["complexes"], dict):
        raise FormatError(f"{where}.complexes: expected an object")
    complexes = {}
    for name, _ in diagram.vertices:
        if name not in obj["complexes"]:
            raise FormatError(f"{where}.complexes: missing vertex {name!r}")
        complexes[name] = load_complex(
            obj["complexes"][name], f"{where}.complexes[{name}]", validate
        )
    if not isinstance(obj["edge_maps"], dict):
        raise FormatError(f"{where}.edge_maps: expected an object")
    maps = {}
    for e in diagram.edges:
        if e.name not in obj["edge_maps"]:
            raise FormatError(f"{where}.edge_maps: missing edge {e.name!r}")
        target = tensor_with_bimodule(complexes[e.target], e.bimodule)
        maps[e.name] = load_blocks(
            obj["edge_maps"][e.name],
            complexes[e.source],
            target,
            0,
            f"{where}.edge_maps[{e.name}]",
        )
    try:
        return DComplex.build(diagram, complexes, maps, validate=validate)
    except (ValueError, ShapeMismatch) as err:
        raise InvalidObject(f"{where}: {err}") from err


# ---------------------------------------------------------------------------
# Towers


def dump_bimodule(s: Bimodule) -> dict:
    return {"ring": dump_ring(s.base), "rank": str(s.rank)}


def load_bimodule(value, where: str = "bimodule") -> Bimodule:
    obj = _expect_object(value, where, ("ring", "rank"))
    ring = load_ring(obj["ring"], f"{where}.ring")
    rank = load_int(obj["rank"], f"{where}.rank")
    if rank < 1:
        raise FormatError(f"{where}.rank: bimodule rank must be positive")
    return Bimodule(ring, rank)


def dump_d0complex(d: D0Complex) -> dict:
    return {
        "bimodule": dump_bimodule(d.bimodule),
        "level_count": str(d.top_index + 1),
        "stabilization": str(d.stabilization),
        "levels": [dump_complex(d.level(i)) for i in range(d.top_index + 1)],
        "ascents": [dump_blocks(f) for f in d.ascents],
        "descents": [dump_blocks(f) for f in d.descents],
    }


def load_d0complex(value, where: str = "d0complex", validate: bool = True) -> D0Complex:
    obj = _expect_object(
        value, where, ("bimodule", "level_count", "stabilization", "levels", "ascents", "descents")
    )
    bim = load_bimodule(obj["bimodule"], f"{where}.bimodule")
    count = load_int(obj["level_count"], f"{where}.level_count")
    if not isinstance(obj["levels"], list):
        raise FormatError(f"{where}.levels: expected a list")
    if count != len(obj["levels"]):
        raise FormatError(
            f"{where}.level_count: says {count} but {len(obj['levels'])} levels are present"
        )
    levels = [
        load_complex(item, f"{where}.levels[{i}]", validate)
        for i, item in enumerate(obj["levels"])
    ]
    top = len(levels) - 1
    for key, want in (("ascents", max(top, 0)), ("descents", max(top, 0))):
        if not isinstance(obj[key], list) or len(obj[key]) != want:
            raise FormatError(f"{where}.{key}: expected a list of {want} block families")
    ascents = [
        load_blocks(item, levels[i], levels[i + 1], 0, f"{where}.ascents[{i}]")
        for i, item in enumerate(obj["ascents"])
    ]
    descents = [
        load_blocks(
            item,
            levels[i + 1],
            tensor_with_bimodule(levels[i], bim),
            0,
            f"{where}.descents[{i}]",
        )
        for i, item in enumerate(obj["descents"])
    ]
    stab = load_int(obj["stabilization"], f"{where}.stabilization")
    try:
        return D0Complex.build(bim, levels, ascents, descents, stab)
    except (ValueError, ShapeMismatch) as err:
        raise InvalidObject(f"{where}: {err}") from err


def dump_d0morphism(f: D0Morphism) -> dict:
    return {
        "source": dump_d0complex(f.source),
        "target": dump_d0complex(f.target),
        "components": [dump_blocks(g) for g in f.components],
    }


def load_d0morphism(value, where: str = "morphism", validate: bool = True) -> D0Morphism:
    obj = _expect_object(value, where, ("source", "target", "components"))
    source = load_d0complex(obj["source"], f"{where}.source", validate)
    target = load_d0complex(obj["target"], f"{where}.target", validate)
    want = source.top_index + 1
    if not isinstance(obj["components"], list) or len(obj["components"]) != want:
        raise FormatError(f"{where}.components: expected a list of {want} block families")
    components = [
        load_blocks(item, source.level(i), target.level(i), 0, f"{where}.components[{i}]")
        for i, item in enumerate(obj["components"])
    ]
    try:
        return D0Morphism.build(source, target, components)
    except (ValueError, ShapeMismatch) as err:
        raise InvalidObject(f"{where}: {err}") from err


def dump_scenario(probe: D0Complex, target: D0Complex) -> dict:
    return {"probe": dump_d0complex(probe), "target": dump_d0complex(target)}


def load_scenario(value, where: str = "scenario", validate: bool = True) -> tuple:
    obj = _expect_object(value, where, ("probe", "target"))
    probe = load_d0complex(obj["probe"], f"{where}.probe", validate)
    target = load_d0complex(obj["target"], f"{where}.target", validate)
    return probe, target


# ---------------------------------------------------------------------------
# Kind detection and text round trips

_KINDS = (
    ("differentials", "complex", load_complex),
    ("blocks", "map", load_graded_map),
    ("diagram", "dcomplex", load_dcomplex),
    ("ascents", "d0complex", load_d0complex),
    ("components", "morphism", load_d0morphism),
    ("probe", "scenario", load_scenario),
)


def detect_kind(value) -> str:
    """Name the payload shape by its marker field."""
    if not isinstance(value, dict):
        raise FormatError("payload: expected a JSON object")
    for marker, kind, _ in _KINDS:
        if marker in value:
            return kind
    raise FormatError(
        "payload: no marker field found; expected one of "
        + ", ".join(marker for marker, _, _ in _KINDS)
    )


def load_any(value, validate: bool = True) -> tuple:
    """(kind, object) for a payload of any supported shape."""
    kind = detect_kind(value)
    for marker, name, loader in _KINDS:
        if name == kind:
            return kind, loader(value, kind, validate)
    raise AssertionError("detect_kind returned an unknown kind")


def dumps(payload: dict) -> str:
    """Canonical text form: sorted keys, two-space indent, newline end."""
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def loads(text: str) -> dict:
    try:
        value = json.loads(text)
    except json.JSONDecodeError as err:
        raise FormatError(f"payload: invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from err
    if not isinstance(value, dict):
        raise FormatError("payload: expected a JSON object at top level")
    return value
