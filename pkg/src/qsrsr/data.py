"""Partitioned data sets and simultaneous robust subspace recovery (SRSR).

A partitioned data set of type (n, m, d) is n points in Q^D whose coordinates
are split into m consecutive blocks of sizes d_1..d_m.  It is encoded as a
representation of the complete bipartite quiver K_{n,m}: one 1-dimensional
source per point, one sink per block, and the arrow x_i -> y_j carrying the
block v_i^j as a d_j x 1 matrix.  The weight is D on sources and -n on sinks.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .linalg import RationalMatrix, SubspaceBasis, parse_rational
from .quiver import QuiverDatum, Subrepresentation, is_bipartite_datum, make_datum


@dataclass(frozen=True)
class PartitionedDataSet:
    blocks: tuple[int, ...]
    points: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if not self.blocks or any(d < 1 for d in self.blocks):
            raise ValueError("need at least one block, each of size >= 1")
        if not self.points:
            raise ValueError("need at least one point")
        D = sum(self.blocks)
        for k, p in enumerate(self.points):
            if len(p) != D:
                raise ValueError(f"point {k + 1} has {len(p)} coordinates, expected {D}")

    @classmethod
    def from_values(cls, blocks: Sequence[int], points: Sequence[Sequence]) -> PartitionedDataSet:
        return cls(tuple(int(d) for d in blocks),
                   tuple(tuple(parse_rational(x) for x in p) for p in points))

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def D(self) -> int:
        return sum(self.blocks)

    def offsets(self) -> list[int]:
        out, acc = [], 0
        for d in self.blocks:
            out.append(acc)
            acc += d
        return out

    def block(self, i: int, j: int) -> tuple[Fraction, ...]:
        """v_i^j (0-based indices)."""
        o = self.offsets()[j]
        return self.points[i][o:o + self.blocks[j]]

    def scaled(self, c) -> PartitionedDataSet:
        c = Fraction(c)
        return PartitionedDataSet(self.blocks, tuple(tuple(c * x for x in p) for p in self.points))


@dataclass(frozen=True)
class SubspaceTuple:
    spaces: tuple[SubspaceBasis, ...]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.spaces)

    @classmethod
    def full(cls, X: PartitionedDataSet) -> SubspaceTuple:
        return cls(tuple(SubspaceBasis.full(d) for d in X.blocks))

    @classmethod
    def zero(cls, X: PartitionedDataSet) -> SubspaceTuple:
        return cls(tuple(SubspaceBasis.zero(d) for d in X.blocks))


@dataclass(frozen=True)
class SrsrEvaluation:
    index_set: tuple[int, ...]
    margin: Fraction
    pairing_value: int

    @property
    def is_solution(self) -> bool:
        return self.margin > 0


def source_id(i: int) -> str:
    return f"x{i + 1}"


def sink_id(j: int) -> str:
    return f"y{j + 1}"


def arrow_id(i: int, j: int) -> str:
    return f"a{i + 1}_{j + 1}"


def to_representation(X: PartitionedDataSet) -> QuiverDatum:
    """Encode X as (V_X, sigma_0) on K_{n,m}."""
    n, D = X.n, X.D
    vertices = [(source_id(i), D, 1) for i in range(n)] + [(sink_id(j), -n, d) for j, d in enumerate(X.blocks)]
    arrows = [(arrow_id(i, j), source_id(i), sink_id(j), RationalMatrix.column(X.block(i, j)))
              for i in range(n) for j in range(X.m)]
    split = (tuple(source_id(i) for i in range(n)), tuple(sink_id(j) for j in range(X.m)))
    return make_datum(vertices, arrows, split)


def _check_shapes(X: PartitionedDataSet, T: SubspaceTuple) -> None:
    if len(T.spaces) != X.m or any(s.ambient != d for s, d in zip(T.spaces, X.blocks)):
        raise ValueError("subspace tuple does not match the block structure")


def index_set(X: PartitionedDataSet, T: SubspaceTuple) -> tuple[int, ...]:
    """I_T: points whose every block lies in the corresponding subspace (0-based)."""
    _check_shapes(X, T)
    return tuple(i for i in range(X.n)
                 if all(T.spaces[j].contains(X.block(i, j)) for j in range(X.m)))


def evaluate(X: PartitionedDataSet, T: SubspaceTuple) -> SrsrEvaluation:
    I = index_set(X, T)
    total = sum(T.dims)
    pairing = X.D * len(I) - X.n * total
    return SrsrEvaluation(I, Fraction(pairing, X.D), pairing)


def canonical_subrep(X: PartitionedDataSet, T: SubspaceTuple) -> Subrepresentation:
    """W_T: the line at x_i for i in I_T, zero elsewhere, and T_j at y_j."""
    I = set(index_set(X, T))
    spaces = {source_id(i): (SubspaceBasis.full(1) if i in I else SubspaceBasis.zero(1)) for i in range(X.n)}
    spaces.update({sink_id(j): T.spaces[j] for j in range(X.m)})
    return Subrepresentation(spaces)


def span_tuple(X: PartitionedDataSet, I) -> SubspaceTuple:
    """T_j = span{v_i^j : i in I}."""
    return SubspaceTuple(tuple(SubspaceBasis.span([X.block(i, j) for i in I], d)
                               for j, d in enumerate(X.blocks)))


@dataclass(frozen=True)
class OracleResult:
    disc: int
    index_set: tuple[int, ...]
    tuple: SubspaceTuple


class OracleTooLarge(ValueError):
    pass


def brute_force_discrepancy(X: PartitionedDataSet, max_n: int = 12) -> OracleResult:
    """disc(V_X, sigma_0) by enumerating every subset of points.

    For each subset I the tuple of block spans is evaluated with its full
    (possibly larger) index set.  Replacing any tuple T by the spans of its
    own index set never lowers the pairing, so the maximum found here is the
    discrepancy.  Ties go to the lexicographically smallest index set.
    """
    if X.n > max_n:
        raise OracleTooLarge(f"n = {X.n} exceeds the oracle limit {max_n}")
    best: tuple[int, tuple[int, ...], SubspaceTuple] | None = None
    seen: set[tuple[int, ...]] = set()
    for size in range(X.n + 1):
        for I in combinations(range(X.n), size):
            T = span_tuple(X, I)
            ev = evaluate(X, T)
            if ev.index_set in seen:
                continue
            seen.add(ev.index_set)
            key = (ev.pairing_value, ev.index_set)
            if best is None or key[0] > best[0] or (key[0] == best[0] and key[1] < best[1]):
                best = (ev.pairing_value, ev.index_set, T)
    return OracleResult(*best)


def brute_force_disc_datum(datum: QuiverDatum, max_sources: int = 12) -> tuple[int, Subrepresentation]:
    """disc(V, sigma) for a bipartite datum whose sources all have dim <= 1.

    With one-dimensional sources a subrepresentation is determined, up to
    enlarging sinks (which only lowers the pairing), by the set of sources it
    contains; the sinks are then the spans of the incoming images.
    """
    if not is_bipartite_datum(datum):
        raise ValueError("datum is not bipartite with signed weights")
    q, w, d = datum.quiver, datum.weight, datum.dims
    sources = [z for z in q.vertices if w[z] > 0 and d[z] == 1]
    if any(w[z] > 0 and d[z] > 1 for z in q.vertices):
        raise ValueError("oracle needs every source to have dimension <= 1")
    if len(sources) > max_sources:
        raise OracleTooLarge(f"{len(sources)} sources exceeds the oracle limit {max_sources}")
    sinks = [z for z in q.vertices if w[z] < 0]
    best = None
    for size in range(len(sources) + 1):
        for S in combinations(sources, size):
            chosen = set(S)
            spaces = {z: (SubspaceBasis.full(d[z]) if z in chosen else SubspaceBasis.zero(d[z]))
                      for z in q.vertices if w[z] > 0}
            for y in sinks:
                imgs = [datum.rep.maps[a.id].columns()[0] for a in q.arrows if a.head == y and a.tail in chosen]
                spaces[y] = SubspaceBasis.span(imgs, d[y])
            for z in q.vertices:
                spaces.setdefault(z, SubspaceBasis.zero(d[z]))
            value = sum(w[z] * spaces[z].dim for z in q.vertices)
            if best is None or value > best[0]:
                best = (value, Subrepresentation(spaces))
    return best
