"""Completely positive operators attached to bipartite quiver data.

For a bipartite datum (V, sigma) with sigma > 0 on sources x_i and < 0 on sinks
y_j, the operator lives on N x N matrices with

    N = sum_i sigma(x_i) dim V(x_i) = sum_j -sigma(y_j) dim V(y_j).

The domain R^N is split into M' = sum_i sigma(x_i) blocks (sigma(x_i) copies
of V(x_i) per source), the codomain into M = sum_j -sigma(y_j) blocks.  There
is one Kraus operator for every arrow a: x_i -> y_j and every pair of block
indices (q, r) in I_j^- x I_i^+, equal to V(a) placed at block (q, r).

Those L = sum |A_ij| sigma_-(y_j) sigma_+(x_i) matrices are never built in the
hot path.  Since each has a single nonzero block, T(Y) is block diagonal with
(q, q)-block  sum_{i, a in A_ij} V(a) (sum_{r in I_i^+} Y_rr) V(a)^T, and the
dual is the mirror formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterator, Sequence

import numpy as np

from .linalg import RationalMatrix, SubspaceBasis, block_diag, rank
from .quiver import DatumError, QuiverDatum, ensure_valid

SINGULAR_RTOL = 1e-10
CLAMP_RTOL = 1e-14


class SingularOperator(ArithmeticError):
    """T(I) or T*(I) is singular, so the operator cannot be normalized."""


@dataclass(frozen=True)
class SigmaLayout:
    sources: tuple[str, ...]
    sinks: tuple[str, ...]
    source_dims: tuple[int, ...]
    sink_dims: tuple[int, ...]
    sigma_plus: tuple[int, ...]
    sigma_minus: tuple[int, ...]

    @property
    def N(self) -> int:
        return sum(s * d for s, d in zip(self.sigma_plus, self.source_dims))

    @property
    def M(self) -> int:
        return sum(self.sigma_minus)

    @property
    def M_prime(self) -> int:
        return sum(self.sigma_plus)

    def I_minus(self, j: int) -> range:
        start = sum(self.sigma_minus[:j])
        return range(start, start + self.sigma_minus[j])

    def I_plus(self, i: int) -> range:
        start = sum(self.sigma_plus[:i])
        return range(start, start + self.sigma_plus[i])

    def domain_blocks(self) -> list[tuple[int, slice]]:
        """(source index, coordinate slice) for each domain block r."""
        out, off = [], 0
        for i, (s, d) in enumerate(zip(self.sigma_plus, self.source_dims)):
            for _ in range(s):
                out.append((i, slice(off, off + d)))
                off += d
        return out

    def codomain_blocks(self) -> list[tuple[int, slice]]:
        out, off = [], 0
        for j, (s, d) in enumerate(zip(self.sigma_minus, self.sink_dims)):
            for _ in range(s):
                out.append((j, slice(off, off + d)))
                off += d
        return out


def build_layout(datum: QuiverDatum) -> SigmaLayout:
    ensure_valid(datum)
    q, w, d = datum.quiver, datum.weight, datum.dims
    for z in q.vertices:
        if w[z] == 0:
            raise DatumError(f"vertex {z} has zero weight; bipartize first")
    for a in q.arrows:
        if w[a.tail] < 0 or w[a.head] > 0:
            raise DatumError(f"arrow {a.id} goes against the weight signs")
    src = tuple(z for z in q.vertices if w[z] > 0)
    snk = tuple(z for z in q.vertices if w[z] < 0)
    layout = SigmaLayout(src, snk, tuple(d[z] for z in src), tuple(d[z] for z in snk),
                         tuple(w[z] for z in src), tuple(-w[z] for z in snk))
    assert layout.N == sum(s * dd for s, dd in zip(layout.sigma_minus, layout.sink_dims))
    return layout


@dataclass(frozen=True)
class KrausArrow:
    i: int
    j: int
    id: str
    payload: RationalMatrix


@dataclass(frozen=True)
class KrausSet:
    layout: SigmaLayout
    arrows: tuple[KrausArrow, ...]
    rank_one: bool
    scale: int = 1                                          # lcm of payload denominators
    int_payloads: tuple[tuple[tuple[int, ...], ...], ...] = field(default=(), repr=False)

    @property
    def N(self) -> int:
        return self.layout.N

    @property
    def L(self) -> int:
        lay = self.layout
        return sum(lay.sigma_minus[a.j] * lay.sigma_plus[a.i] for a in self.arrows)

    def indices(self) -> Iterator[tuple[int, int, int, int, int]]:
        """Enumerate S_sigma as (i, j, arrow position, q, r)."""
        lay = self.layout
        for k, a in enumerate(self.arrows):
            for q in lay.I_minus(a.j):
                for r in lay.I_plus(a.i):
                    yield a.i, a.j, k, q, r

    def materialize(self, idx: tuple[int, int, int, int, int]) -> RationalMatrix:
        """The full N x N Kraus operator for one index (tests and debugging)."""
        _, _, k, q, r = idx
        N = self.N
        rows_of = self.layout.codomain_blocks()[q][1]
        cols_of = self.layout.domain_blocks()[r][1]
        out = [[Fraction(0)] * N for _ in range(N)]
        P = self.arrows[k].payload
        for s, row in enumerate(P.rows):
            out[rows_of.start + s][cols_of.start:cols_of.stop] = row
        return RationalMatrix(out, N)

    def magnitude(self) -> int:
        """Largest absolute entry after clearing all denominators."""
        return max((abs(x) for p in self.int_payloads for row in p for x in row), default=0)

    def scaled_by(self, c) -> KrausSet:
        c = Fraction(c)
        arrows = tuple(KrausArrow(a.i, a.j, a.id, a.payload.scale(c)) for a in self.arrows)
        return _assemble(self.layout, arrows)


def _assemble(layout: SigmaLayout, arrows: Sequence[KrausArrow]) -> KrausSet:
    den = 1
    for a in arrows:
        for row in a.payload.rows:
            for x in row:
                den = lcm(den, x.denominator)
    ints = tuple(tuple(tuple(int(x * den) for x in row) for row in a.payload.rows) for a in arrows)
    rank_one = all(rank(a.payload) <= 1 for a in arrows)
    return KrausSet(layout, tuple(arrows), rank_one, den, ints)


def build_kraus(datum: QuiverDatum) -> KrausSet:
    layout = build_layout(datum)
    si = {z: k for k, z in enumerate(layout.sources)}
    sj = {z: k for k, z in enumerate(layout.sinks)}
    arrows = [KrausArrow(si[a.tail], sj[a.head], a.id, datum.rep.maps[a.id]) for a in datum.quiver.arrows]
    arrows.sort(key=lambda a: (a.i, a.j))   # stable: declaration order within (i, j)
    return _assemble(layout, arrows)


# ---------------------------------------------------------------------------
# exact application
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockPSD:
    """A PSD matrix on the domain or codomain side, by its diagonal blocks.

    ``full`` holds the whole matrix when it is not block diagonal; the
    operators only ever read the diagonal blocks.
    """

    side: str
    blocks: tuple[RationalMatrix, ...]
    full: RationalMatrix | None = None

    def to_full(self) -> RationalMatrix:
        return self.full if self.full is not None else block_diag(self.blocks)

    def rank(self) -> int:
        if self.full is not None:
            return rank(self.full)
        return sum(rank(b) for b in self.blocks if b.nrows)

    @classmethod
    def from_full(cls, K: KrausSet, Y: RationalMatrix, side: str = "domain") -> BlockPSD:
        blocks = K.layout.domain_blocks() if side == "domain" else K.layout.codomain_blocks()
        if Y.shape != (K.N, K.N):
            raise ValueError(f"expected {K.N}x{K.N}, got {Y.shape}")
        return cls(side, tuple(Y.submatrix(s, s) for _, s in blocks), Y)

    @classmethod
    def identity(cls, K: KrausSet, side: str = "domain") -> BlockPSD:
        blocks = K.layout.domain_blocks() if side == "domain" else K.layout.codomain_blocks()
        return cls(side, tuple(RationalMatrix.identity(s.stop - s.start) for _, s in blocks))


def _sum(mats: Sequence[RationalMatrix], n: int) -> RationalMatrix:
    out = RationalMatrix.zeros(n, n)
    for m in mats:
        out = out + m
    return out


def apply(K: KrausSet, Y: BlockPSD) -> BlockPSD:
    """T(Y) = sum_k A_k Y A_k^T, block diagonal on the codomain side."""
    lay = K.layout
    if Y.side != "domain" or len(Y.blocks) != lay.M_prime:
        raise ValueError("apply expects a domain-side matrix")
    S = [_sum([Y.blocks[r] for r in lay.I_plus(i)], d) for i, d in enumerate(lay.source_dims)]
    Z = [RationalMatrix.zeros(d, d) for d in lay.sink_dims]
    for a in K.arrows:
        P = a.payload
        Z[a.j] = Z[a.j] + P @ S[a.i] @ P.T
    blocks = tuple(Z[j] for j in range(len(lay.sinks)) for _ in lay.I_minus(j))
    return BlockPSD("codomain", blocks)


def apply_dual(K: KrausSet, X: BlockPSD) -> BlockPSD:
    """T*(X) = sum_k A_k^T X A_k, block diagonal on the domain side."""
    lay = K.layout
    if X.side != "codomain" or len(X.blocks) != lay.M:
        raise ValueError("apply_dual expects a codomain-side matrix")
    S = [_sum([X.blocks[q] for q in lay.I_minus(j)], d) for j, d in enumerate(lay.sink_dims)]
    Z = [RationalMatrix.zeros(d, d) for d in lay.source_dims]
    for a in K.arrows:
        P = a.payload
        Z[a.i] = Z[a.i] + P.T @ S[a.j] @ P
    blocks = tuple(Z[i] for i in range(len(lay.sources)) for _ in lay.I_plus(i))
    return BlockPSD("domain", blocks)


def apply_naive(K: KrausSet, Y: RationalMatrix) -> RationalMatrix:
    """Sum over every materialized Kraus operator; reference only."""
    out = RationalMatrix.zeros(K.N, K.N)
    for idx in K.indices():
        A = K.materialize(idx)
        out = out + A @ Y @ A.T
    return out


def apply_dual_naive(K: KrausSet, X: RationalMatrix) -> RationalMatrix:
    out = RationalMatrix.zeros(K.N, K.N)
    for idx in K.indices():
        A = K.materialize(idx)
        out = out + A.T @ X @ A
    return out


def identity_singularity(K: KrausSet) -> tuple[bool, bool]:
    """Exact test of whether T(I) and T*(I) are singular.

    T(I) is singular iff the payload images into some sink do not span it;
    T*(I) is singular iff the payloads out of some source share a kernel vector.
    """
    lay = K.layout
    t_sing = False
    for j, d in enumerate(lay.sink_dims):
        cols = [c for a in K.arrows if a.j == j for c in a.payload.columns()]
        if d and (rank(cols) < d if cols else True):
            t_sing = True
    ts_sing = False
    for i, d in enumerate(lay.source_dims):
        rows = [r for a in K.arrows if a.i == i for r in a.payload.rows]
        if d and (rank(rows) < d if rows else True):
            ts_sing = True
    return t_sing, ts_sing


# ---------------------------------------------------------------------------
# subspace images (used by Wong sequences and certificate checks)
# ---------------------------------------------------------------------------

def _mat_vec(P: Sequence[Sequence], v: Sequence) -> list:
    return [sum((a * b for a, b in zip(row, v) if a and b), 0) for row in P]


def source_projections(K: KrausSet, U: SubspaceBasis) -> list[SubspaceBasis]:
    """F_i = sum over r in I_i^+ of the r-th block projection of U."""
    lay = K.layout
    vecs: list[list] = [[] for _ in lay.sources]
    for i, s in lay.domain_blocks():
        for u in U.vectors:
            piece = u[s]
            if any(piece):
                vecs[i].append(piece)
    return [SubspaceBasis.span(v, d) for v, d in zip(vecs, lay.source_dims)]


def sink_images(K: KrausSet, sources: Sequence[SubspaceBasis]) -> list[SubspaceBasis]:
    """Z_j = sum_{i, a in A_ij} V(a)(F_i), using the integer payloads."""
    lay = K.layout
    vecs: list[list] = [[] for _ in lay.sinks]
    for a, P in zip(K.arrows, K.int_payloads):
        for f in sources[a.i].vectors:
            vecs[a.j].append(_mat_vec(P, f))
    return [SubspaceBasis.span(v, d) for v, d in zip(vecs, lay.sink_dims)]


def product_subspace(K: KrausSet, per_sink: Sequence[SubspaceBasis]) -> SubspaceBasis:
    """The codomain subspace equal to Z_j on every block q in I_j^-."""
    N = K.N
    rows = []
    for j, s in K.layout.codomain_blocks():
        for z in per_sink[j].vectors:
            v = [Fraction(0)] * N
            v[s] = z
            rows.append(tuple(v))
    return SubspaceBasis(N, tuple(rows))     # already in RREF: disjoint blocks in order


def kraus_image(K: KrausSet, U: SubspaceBasis) -> SubspaceBasis:
    """sum_k A_k(U) for a domain subspace U."""
    return product_subspace(K, sink_images(K, source_projections(K, U)))


def kraus_image_dim(K: KrausSet, U: SubspaceBasis) -> int:
    Z = sink_images(K, source_projections(K, U))
    return sum(s * z.dim for s, z in zip(K.layout.sigma_minus, Z))


# ---------------------------------------------------------------------------
# floating-point scaled operator
# ---------------------------------------------------------------------------

def ds_value(t_of_identity: np.ndarray, tstar_of_identity: np.ndarray) -> float:
    """tr((T(I) - I)^2) + tr((T*(I) - I)^2) for full symmetric matrices."""
    a = t_of_identity - np.eye(len(t_of_identity))
    b = tstar_of_identity - np.eye(len(tstar_of_identity))
    return float(np.trace(a @ a) + np.trace(b @ b))


def _slices(dims: Sequence[int]) -> list[slice]:
    out, off = [], 0
    for d in dims:
        out.append(slice(off, off + d))
        off += d
    return out


class _Geometry:
    """Dense float layout: sinks stacked by rows, arrows by columns."""

    def __init__(self, K: KrausSet):
        lay = K.layout
        self.src = _slices(lay.source_dims)
        self.snk = _slices(lay.sink_dims)
        d_in, d_out = sum(lay.source_dims), sum(lay.sink_dims)
        widths = [lay.source_dims[a.i] for a in K.arrows]
        self.arr = _slices(widths)
        P = sum(widths)
        self.phi = np.zeros((d_out, P))
        self.expand = np.zeros((P, d_in))
        self.mask = np.zeros((P, P))
        col_w = np.zeros(P)
        row_w = np.zeros(d_out)
        for a, s in zip(K.arrows, self.arr):
            self.phi[self.snk[a.j], s] = a.payload.to_numpy()
            self.expand[s, self.src[a.i]] = np.eye(s.stop - s.start)
            self.mask[s, s] = 1.0
            col_w[s] = lay.sigma_plus[a.i]
        for j, s in enumerate(self.snk):
            row_w[s] = lay.sigma_minus[j]
        self.col_w = col_w
        self.row_w = row_w
        self.d_in, self.d_out = d_in, d_out


def _inv_sqrt(mat: np.ndarray, where: str) -> np.ndarray:
    if mat.size == 0:
        return mat
    try:
        evals, evecs = np.linalg.eigh((mat + mat.T) / 2)
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError(f"eigendecomposition failed for {where}") from exc
    if not np.all(np.isfinite(evals)):
        raise FloatingPointError(f"non-finite spectrum for {where}")
    top = evals.max()
    if top <= 0 or evals.min() < SINGULAR_RTOL * top:
        raise SingularOperator(f"{where} is numerically singular")
    evals = np.maximum(evals, CLAMP_RTOL * top)
    return (evecs / np.sqrt(evals)) @ evecs.T


class ScaledKraus:
    """A Kraus set together with block-diagonal left/right scalings.

    The scaled operator has Kraus operators L A_k R with L = diag(L_j) over
    codomain blocks and R = diag(R_i) over domain blocks; the scalings are the
    same on every copy of a vertex, so they are stored once per vertex.  The
    exact Kraus data is never modified.
    """

    def __init__(self, K: KrausSet, left: np.ndarray | None = None, right: np.ndarray | None = None,
                 geometry: _Geometry | None = None):
        self.kraus = K
        self.geom = geometry or _Geometry(K)
        self.left = np.eye(self.geom.d_out) if left is None else left
        self.right = np.eye(self.geom.d_in) if right is None else right
        g = self.geom
        rt = (g.expand @ self.right @ g.expand.T) * g.mask
        self._k = self.left @ g.phi @ rt
        self._t: list[np.ndarray] | None = None
        self._ts: list[np.ndarray] | None = None

    def payloads(self) -> list[np.ndarray]:
        g = self.geom
        return [self._k[g.snk[a.j], s] for a, s in zip(self.kraus.arrows, g.arr)]

    def t_identity_blocks(self) -> list[np.ndarray]:
        """The distinct diagonal blocks of T(I), one per sink."""
        if self._t is None:
            g = self.geom
            big = (self._k * g.col_w) @ self._k.T
            self._t = [big[s, s] for s in g.snk]
        return self._t

    def tstar_identity_blocks(self) -> list[np.ndarray]:
        if self._ts is None:
            g = self.geom
            cols = (self._k.T * g.row_w) @ self._k * g.mask
            big = g.expand.T @ cols @ g.expand
            self._ts = [big[s, s] for s in g.src]
        return self._ts

    def ds_parts(self) -> tuple[float, float]:
        lay = self.kraus.layout
        t = sum(w * float(np.sum((b - np.eye(len(b))) ** 2))
                for w, b in zip(lay.sigma_minus, self.t_identity_blocks()))
        ts = sum(w * float(np.sum((b - np.eye(len(b))) ** 2))
                 for w, b in zip(lay.sigma_plus, self.tstar_identity_blocks()))
        return t, ts

    def ds(self) -> float:
        t, ts = self.ds_parts()
        return t + ts

    def normalize_right(self) -> ScaledKraus:
        g = self.geom
        fix = np.zeros((g.d_in, g.d_in))
        for k, (s, b) in enumerate(zip(g.src, self.tstar_identity_blocks())):
            fix[s, s] = _inv_sqrt(b, f"T*(I) at source {self.kraus.layout.sources[k]}")
        return ScaledKraus(self.kraus, self.left, self.right @ fix, g)

    def normalize_left(self) -> ScaledKraus:
        g = self.geom
        fix = np.zeros((g.d_out, g.d_out))
        for k, (s, b) in enumerate(zip(g.snk, self.t_identity_blocks())):
            fix[s, s] = _inv_sqrt(b, f"T(I) at sink {self.kraus.layout.sinks[k]}")
        return ScaledKraus(self.kraus, fix @ self.left, self.right, g)

    def right_blocks(self) -> list[np.ndarray]:
        return [self.right[s, s] for s in self.geom.src]


def ds(K: KrausSet | ScaledKraus) -> float:
    return (K if isinstance(K, ScaledKraus) else ScaledKraus(K)).ds()


def normalize_right(K: KrausSet | ScaledKraus) -> ScaledKraus:
    return (K if isinstance(K, ScaledKraus) else ScaledKraus(K)).normalize_right()


def normalize_left(K: KrausSet | ScaledKraus) -> ScaledKraus:
    return (K if isinstance(K, ScaledKraus) else ScaledKraus(K)).normalize_left()
