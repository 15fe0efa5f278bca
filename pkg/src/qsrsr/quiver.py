"""Quiver representations with integer weights, and their subrepresentations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .linalg import RationalMatrix, SubspaceBasis, rank


class DatumError(ValueError):
    """Raised when a quiver datum violates one of its invariants."""


@dataclass(frozen=True)
class Arrow:
    id: str
    tail: str
    head: str


@dataclass(frozen=True)
class Quiver:
    vertices: tuple[str, ...]
    arrows: tuple[Arrow, ...]
    bipartite_split: tuple[tuple[str, ...], tuple[str, ...]] | None = None

    def topological_order(self) -> list[str] | None:
        """Kahn's algorithm in declaration order; None if there is a cycle."""
        indeg = {v: 0 for v in self.vertices}
        out: dict[str, list[str]] = {v: [] for v in self.vertices}
        for a in self.arrows:
            indeg[a.head] += 1
            out[a.tail].append(a.head)
        ready = [v for v in self.vertices if indeg[v] == 0]
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for w in out[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    ready.append(w)
        return order if len(order) == len(self.vertices) else None

    def is_acyclic(self) -> bool:
        return self.topological_order() is not None

    def arrow(self, arrow_id: str) -> Arrow:
        for a in self.arrows:
            if a.id == arrow_id:
                return a
        raise KeyError(arrow_id)


@dataclass(frozen=True)
class Representation:
    quiver: Quiver
    dims: Mapping[str, int]
    maps: Mapping[str, RationalMatrix]


@dataclass(frozen=True)
class QuiverDatum:
    rep: Representation
    weight: Mapping[str, int]
    notes: tuple[str, ...] = field(default=(), compare=False)

    @property
    def quiver(self) -> Quiver:
        return self.rep.quiver

    @property
    def dims(self) -> Mapping[str, int]:
        return self.rep.dims


@dataclass(frozen=True)
class Subrepresentation:
    """Per-vertex subspaces W(z) of V(z)."""

    spaces: Mapping[str, SubspaceBasis]

    def dim_vector(self) -> dict[str, int]:
        return {z: s.dim for z, s in self.spaces.items()}


@dataclass(frozen=True)
class Violation:
    kind: str
    location: str
    message: str

    def __str__(self):
        return f"{self.kind} at {self.location}: {self.message}"


def weight_pairing(sigma: Mapping[str, int], d: Mapping[str, int]) -> int:
    """sigma . d = sum over vertices of sigma(z) d(z)."""
    if set(sigma) != set(d):
        raise ValueError(f"vertex sets differ: {sorted(set(sigma) ^ set(d))}")
    return sum(sigma[z] * d[z] for z in sigma)


def validate(datum: QuiverDatum) -> list[Violation]:
    """Check acyclicity and matrix shapes, then sigma . dim V = 0.

    Returns the violations found (empty means the datum is valid).  Shape
    problems are reported before the pairing so the first entry is always
    the most basic failure.
    """
    q = datum.quiver
    out: list[Violation] = []
    vset = set(q.vertices)
    if len(vset) != len(q.vertices):
        out.append(Violation("duplicate", "vertices", "vertex ids are not unique"))
    ids = [a.id for a in q.arrows]
    if len(set(ids)) != len(ids):
        out.append(Violation("duplicate", "arrows", "arrow ids are not unique"))
    for a in q.arrows:
        for end in (a.tail, a.head):
            if end not in vset:
                out.append(Violation("unknown-vertex", f"arrow {a.id}", f"{end!r} is not a vertex"))
    if out:
        return out
    if not q.is_acyclic():
        out.append(Violation("cycle", "quiver", "quiver has an oriented cycle"))
    for z in q.vertices:
        if z not in datum.dims or datum.dims[z] < 0:
            out.append(Violation("dimension", f"vertex {z}", "missing or negative dimension"))
        if z not in datum.weight:
            out.append(Violation("weight", f"vertex {z}", "missing weight"))
    if q.bipartite_split is not None:
        plus, minus = map(set, q.bipartite_split)
        for a in q.arrows:
            if a.tail not in plus or a.head not in minus:
                out.append(Violation("bipartite", f"arrow {a.id}", "arrow does not go from sources to sinks"))
    if out:
        return out
    for a in q.arrows:
        m = datum.rep.maps.get(a.id)
        want = (datum.dims[a.head], datum.dims[a.tail])
        if m is None:
            out.append(Violation("shape", f"arrow {a.id}", "missing matrix"))
        elif m.shape != want:
            out.append(Violation("shape", f"arrow {a.id}", f"matrix is {m.shape[0]}x{m.shape[1]}, expected {want[0]}x{want[1]}"))
    if out:
        return out
    p = weight_pairing(dict(datum.weight), dict(datum.dims))
    if p != 0:
        out.append(Violation("pairing", "datum", f"sigma . dim V = {p} != 0"))
    return out


def ensure_valid(datum: QuiverDatum) -> QuiverDatum:
    problems = validate(datum)
    if problems:
        raise DatumError(str(problems[0]))
    return datum


def _apply(m: RationalMatrix, space: SubspaceBasis) -> list[list]:
    rows = m.rows
    return [[sum((r[k] * v[k] for k in range(len(v)) if v[k]), 0) for r in rows] for v in space.vectors]


def image_under(m: RationalMatrix, space: SubspaceBasis) -> SubspaceBasis:
    return SubspaceBasis.span(_apply(m, space), m.nrows)


def is_subrepresentation(V: Representation, W: Subrepresentation) -> bool:
    """True iff V(a)(W(ta)) <= W(ha) for every arrow, tested by exact ranks."""
    for a in V.quiver.arrows:
        src, dst = W.spaces[a.tail], W.spaces[a.head]
        if src.ambient != V.dims[a.tail] or dst.ambient != V.dims[a.head]:
            return False
        if src.dim == 0:
            continue
        images = _apply(V.maps[a.id], src)
        if rank(list(dst.vectors) + images) != dst.dim:
            return False
    return True


def full_subrep(V: Representation) -> Subrepresentation:
    return Subrepresentation({z: SubspaceBasis.full(V.dims[z]) for z in V.quiver.vertices})


def zero_subrep(V: Representation) -> Subrepresentation:
    return Subrepresentation({z: SubspaceBasis.zero(V.dims[z]) for z in V.quiver.vertices})


def is_bipartite_datum(datum: QuiverDatum) -> bool:
    """Every vertex with nonzero dimension has nonzero weight and every arrow
    goes from a positive-weight vertex to a negative-weight one."""
    w, d = datum.weight, datum.dims
    if any(w[z] == 0 and d[z] > 0 for z in datum.quiver.vertices):
        return False
    return all(w[a.tail] > 0 and w[a.head] < 0 for a in datum.quiver.arrows)


# ---------------------------------------------------------------------------
# bipartization
# ---------------------------------------------------------------------------

class PathExplosion(DatumError):
    pass


@dataclass(frozen=True)
class Bipartized:
    datum: QuiverDatum
    paths: Mapping[str, tuple[str, ...]]   # new arrow id -> original arrow ids, tail first
    flagged: tuple[str, ...]               # zero-weight vertices of positive dimension


def bipartize(datum: QuiverDatum, max_paths: int = 100_000) -> Bipartized:
    """Build (Q^sigma, V^sigma): one arrow per oriented path from a positive
    to a negative weight vertex, carrying the composite linear map."""
    ensure_valid(datum)
    q, w, d = datum.quiver, datum.weight, datum.dims
    out_arrows: dict[str, list[Arrow]] = {v: [] for v in q.vertices}
    for a in q.arrows:
        out_arrows[a.tail].append(a)
    plus = tuple(z for z in q.vertices if w[z] > 0)
    minus = tuple(z for z in q.vertices if w[z] < 0)
    flagged = tuple(z for z in q.vertices if w[z] == 0 and d[z] > 0)

    arrows: list[Arrow] = []
    maps: dict[str, RationalMatrix] = {}
    paths: dict[str, tuple[str, ...]] = {}
    explored = 0

    def walk(x: str, v: str, path: tuple[str, ...], mat: RationalMatrix) -> None:
        nonlocal explored
        for a in out_arrows[v]:
            explored += 1
            if explored > max_paths:
                raise PathExplosion(f"more than {max_paths} paths; raise the cap to continue")
            p = path + (a.id,)
            m = datum.rep.maps[a.id] @ mat
            if w[a.head] < 0:
                aid = a.id if len(p) == 1 else ">".join(p)
                arrows.append(Arrow(aid, x, a.head))
                maps[aid] = m
                paths[aid] = p
            walk(x, a.head, p, m)

    for x in plus:
        walk(x, x, (), RationalMatrix.identity(d[x]))
    verts = plus + minus
    quiver = Quiver(verts, tuple(arrows), (plus, minus))
    rep = Representation(quiver, {z: d[z] for z in verts}, maps)
    notes = tuple(f"zero-weight vertex {z} (dim {d[z]}) only appears inside paths" for z in flagged)
    new = QuiverDatum(rep, {z: w[z] for z in verts}, notes)
    return Bipartized(new, paths, flagged)


def restrict_subrep(W: Subrepresentation, bip: Bipartized) -> Subrepresentation:
    """Push a subrepresentation of V forward to V^sigma (restriction to the
    nonzero-weight vertices)."""
    return Subrepresentation({z: W.spaces[z] for z in bip.datum.quiver.vertices})


def make_datum(vertices: Sequence[tuple[str, int, int]], arrows: Sequence[tuple[str, str, str, RationalMatrix]],
               bipartite_split=None) -> QuiverDatum:
    """Convenience constructor from (id, weight, dim) and (id, tail, head, matrix)."""
    quiver = Quiver(tuple(v[0] for v in vertices), tuple(Arrow(a, t, h) for a, t, h, _ in arrows), bipartite_split)
    rep = Representation(quiver, {v: dim for v, _, dim in vertices}, {a: m for a, _, _, m in arrows})
    return QuiverDatum(rep, {v: wt for v, wt, _ in vertices})
