"""Reading partitioned data sets and quiver data from JSON or CSV."""

from __future__ import annotations

import csv
import json
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .data import PartitionedDataSet
from .linalg import RationalMatrix, format_rational, parse_rational
from .quiver import DatumError, QuiverDatum, make_datum

FIXTURES = ("ex1", "ex2", "ex3", "ex4")


class InputError(ValueError):
    """Malformed or inconsistent input file."""


def fixture_text(name: str) -> str:
    return resources.files("qsrsr.fixtures").joinpath(f"{name}.json").read_text()


def resolve(path: str) -> tuple[str, str | None]:
    """Return (json text or file path, fixture name if a bundled fixture was used).

    A path that does not exist but whose stem names a bundled fixture (for
    example ``ex4`` or ``examples/ex4.json``) resolves to that fixture.
    """
    p = Path(path)
    if p.exists():
        return str(p), None
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    if stem in FIXTURES:
        return fixture_text(stem), stem
    raise InputError(f"no such file: {path}")


def _loads(text: str):
    try:
        return json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc


def _rational(x, where: str) -> Fraction:
    try:
        return parse_rational(x)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"{where}: cannot parse {x!r} as a rational") from exc


def partitioned_from_obj(obj) -> PartitionedDataSet:
    if not isinstance(obj, dict) or "blocks" not in obj or "points" not in obj:
        raise InputError("data JSON needs 'blocks' and 'points'")
    blocks = obj["blocks"]
    if not isinstance(blocks, list) or not all(isinstance(d, int) and not isinstance(d, bool) for d in blocks):
        raise InputError("'blocks' must be a list of integers")
    pts = [[_rational(x, f"point {k + 1}") for x in p] for k, p in enumerate(obj["points"])]
    try:
        return PartitionedDataSet(tuple(blocks), tuple(tuple(p) for p in pts))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def parse_blocks(spec: str) -> list[int]:
    try:
        out = [int(x) for x in spec.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"bad --blocks value {spec!r}") from exc
    if not out:
        raise InputError("--blocks is empty")
    return out


def partitioned_from_csv(text: str, blocks: list[int]) -> PartitionedDataSet:
    rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
    pts = [[_rational(c, f"row {k + 1}") for c in r] for k, r in enumerate(rows)]
    try:
        return PartitionedDataSet(tuple(blocks), tuple(tuple(p) for p in pts))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def datum_from_obj(obj) -> QuiverDatum:
    if not isinstance(obj, dict) or "vertices" not in obj:
        raise InputError("quiver JSON needs 'vertices' and 'arrows'")
    try:
        verts = [(str(v["id"]), int(v["weight"]), int(v["dim"])) for v in obj["vertices"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad vertex entry: {exc}") from exc
    dims = {v: d for v, _, d in verts}
    arrows = []
    for a in obj.get("arrows", []):
        try:
            aid, tail, head = str(a["id"]), str(a["tail"]), str(a["head"])
            rows = a.get("matrix", [])
        except (KeyError, TypeError) as exc:
            raise InputError(f"bad arrow entry: {exc}") from exc
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise InputError(f"arrow {aid}: matrix must be a list of rows")
        mat = [[_rational(x, f"arrow {aid}") for x in r] for r in rows]
        ncols = len(mat[0]) if mat else dims.get(tail, 0)
        if any(len(r) != ncols for r in mat):
            raise InputError(f"arrow {aid}: ragged matrix")
        if not mat and ncols == 0:
            mat = [[] for _ in range(dims.get(head, 0))]     # d(head) x 0
        arrows.append((aid, tail, head, RationalMatrix(mat, ncols)))
    split = obj.get("bipartite_split")
    if split is not None:
        split = (tuple(split["sources"]), tuple(split["sinks"]))
    return make_datum(verts, arrows, split)


def load_any(path: str, blocks: str | None = None) -> tuple[PartitionedDataSet | QuiverDatum, str | None]:
    """Load a data set (JSON, or CSV with ``blocks``) or a quiver datum JSON."""
    src, fixture = resolve(path)
    text = src if fixture else Path(src).read_text()
    if blocks is not None:
        return partitioned_from_csv(text, parse_blocks(blocks)), fixture
    obj = _loads(text)
    if isinstance(obj, dict) and "vertices" in obj:
        try:
            return datum_from_obj(obj), fixture
        except DatumError as exc:
            raise InputError(str(exc)) from exc
    return partitioned_from_obj(obj), fixture


def datum_to_obj(datum: QuiverDatum) -> dict:
    q = datum.quiver
    out = {
        "vertices": [{"id": z, "weight": datum.weight[z], "dim": datum.dims[z]} for z in q.vertices],
        "arrows": [{"id": a.id, "tail": a.tail, "head": a.head,
                    "matrix": [[format_rational(x) for x in r] for r in datum.rep.maps[a.id].rows]} for a in q.arrows],
    }
    if q.bipartite_split is not None:
        out["bipartite_split"] = {"sources": list(q.bipartite_split[0]), "sinks": list(q.bipartite_split[1])}
    return out


def load_fixture(name: str) -> PartitionedDataSet:
    """One of the bundled example data sets ex1..ex4."""
    if name not in FIXTURES:
        raise KeyError(name)
    return partitioned_from_obj(_loads(fixture_text(name)))
