"""Exact rational linear algebra.

Everything here works over the rationals with :class:`fractions.Fraction`
entries.  Elimination clears the denominators of each row up front and then
runs fraction-free on Python integers, dividing every updated row by the gcd
of its entries so coefficients stay small.  Subspaces are kept in a canonical
form (reduced row echelon form of their basis vectors), so two equal
subspaces always compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Sequence

import numpy as np

Number = int | Fraction


def parse_rational(value) -> Fraction:
    """Parse ``"p/q"``, a decimal string, an int or a Fraction exactly."""
    if isinstance(value, bool):
        raise TypeError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse {value!r} as a rational") from exc
    raise TypeError(f"refusing inexact value {value!r}; pass a string instead")


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class RationalMatrix:
    """Immutable dense matrix with exact rational entries."""

    __slots__ = ("_rows", "shape")

    def __init__(self, rows: Iterable[Iterable[Number]], ncols: int | None = None):
        data = tuple(tuple(Fraction(x) for x in row) for row in rows)
        if data:
            width = len(data[0])
            if any(len(r) != width for r in data):
                raise ValueError("ragged rows")
            if ncols is not None and ncols != width:
                raise ValueError(f"expected {ncols} columns, got {width}")
        else:
            width = ncols or 0
        self._rows = data
        self.shape = (len(data), width)

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> RationalMatrix:
        return cls(([0] * ncols for _ in range(nrows)), ncols)

    @classmethod
    def identity(cls, n: int) -> RationalMatrix:
        return cls(([int(i == j) for j in range(n)] for i in range(n)), n)

    @classmethod
    def column(cls, values: Iterable[Number]) -> RationalMatrix:
        return cls([x] for x in values)

    @classmethod
    def from_strings(cls, rows, ncols: int | None = None) -> RationalMatrix:
        return cls(([parse_rational(x) for x in row] for row in rows), ncols)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[Number]], nrows: int) -> RationalMatrix:
        if not columns:
            return cls.zeros(nrows, 0)
        return cls(zip(*columns), len(columns))

    @property
    def rows(self) -> tuple[tuple[Fraction, ...], ...]:
        return self._rows

    @property
    def nrows(self) -> int:
        return self.shape[0]

    @property
    def ncols(self) -> int:
        return self.shape[1]

    def columns(self) -> list[tuple[Fraction, ...]]:
        return [tuple(r[j] for r in self._rows) for j in range(self.ncols)]

    def __getitem__(self, idx):
        i, j = idx
        return self._rows[i][j]

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.shape == other.shape and self._rows == other._rows

    def __hash__(self):
        return hash((self.shape, self._rows))

    def __repr__(self):
        body = "; ".join(" ".join(format_rational(x) for x in r) for r in self._rows)
        return f"RationalMatrix{self.shape}[{body}]"

    @property
    def T(self) -> RationalMatrix:
        return RationalMatrix(zip(*self._rows), self.nrows) if self.nrows else RationalMatrix.zeros(self.ncols, 0)

    def __matmul__(self, other: RationalMatrix) -> RationalMatrix:
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        cols = other.columns()
        out = [[sum((a * b for a, b in zip(row, col) if a and b), Fraction(0)) for col in cols]
               for row in self._rows]
        return RationalMatrix(out, other.ncols)

    def __add__(self, other: RationalMatrix) -> RationalMatrix:
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return RationalMatrix(([a + b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)), self.ncols)

    def __sub__(self, other: RationalMatrix) -> RationalMatrix:
        return self + (-other)

    def __neg__(self) -> RationalMatrix:
        return RationalMatrix(([-a for a in r] for r in self._rows), self.ncols)

    def scale(self, c: Number) -> RationalMatrix:
        c = Fraction(c)
        return RationalMatrix(([c * a for a in r] for r in self._rows), self.ncols)

    def is_zero(self) -> bool:
        return all(x == 0 for r in self._rows for x in r)

    def is_symmetric(self) -> bool:
        return self.nrows == self.ncols and all(
            self._rows[i][j] == self._rows[j][i] for i in range(self.nrows) for j in range(i))

    def trace(self) -> Fraction:
        return sum((self._rows[i][i] for i in range(min(self.shape))), Fraction(0))

    def submatrix(self, rows: slice | range, cols: slice | range) -> RationalMatrix:
        rs = self._rows[rows] if isinstance(rows, slice) else [self._rows[i] for i in rows]
        width = len(range(self.ncols)[cols]) if isinstance(cols, slice) else len(cols)
        if isinstance(cols, slice):
            return RationalMatrix((r[cols] for r in rs), width)
        return RationalMatrix(([r[j] for j in cols] for r in rs), width)

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self._rows], dtype=float).reshape(self.shape)

    def to_strings(self) -> list[list[str]]:
        return [[format_rational(x) for x in r] for r in self._rows]


def hstack(blocks: Sequence[RationalMatrix]) -> RationalMatrix:
    nrows = blocks[0].nrows
    if any(b.nrows != nrows for b in blocks):
        raise ValueError("hstack row mismatch")
    return RationalMatrix((sum((b.rows[i] for b in blocks), ()) for i in range(nrows)),
                          sum(b.ncols for b in blocks))


def block_diag(blocks: Sequence[RationalMatrix]) -> RationalMatrix:
    n = sum(b.nrows for b in blocks)
    m = sum(b.ncols for b in blocks)
    out = [[Fraction(0)] * m for _ in range(n)]
    r0 = c0 = 0
    for b in blocks:
        for i, row in enumerate(b.rows):
            out[r0 + i][c0:c0 + b.ncols] = row
        r0 += b.nrows
        c0 += b.ncols
    return RationalMatrix(out, m)


# ---------------------------------------------------------------------------
# elimination kernels
# ---------------------------------------------------------------------------

def _integer_rows(rows: Iterable[Sequence[Number]]) -> list[list[int]]:
    out = []
    for row in rows:
        den = 1
        for x in row:
            if x.denominator != 1:
                den = lcm(den, x.denominator)
        if den == 1:
            out.append([int(x) for x in row])
        else:
            out.append([x.numerator * (den // x.denominator) for x in row])
    return out


def _primitive(row: list[int]) -> list[int]:
    g = gcd(*row)
    if g > 1:
        return [x // g for x in row]
    return row


def _eliminate(rows: Iterable[Sequence[Number]], ncols: int, reduced: bool) -> tuple[list[list[int]], list[int]]:
    """Fraction-free elimination on integer rows.

    Returns the nonzero echelon rows (integers, each primitive) and the pivot
    columns.  With ``reduced`` every pivot column is cleared in all other rows.
    """
    A = [r for r in _integer_rows(rows) if any(r)]
    nrows = len(A)
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        best = None
        for i in range(r, nrows):
            v = A[i][c]
            if v and (best is None or abs(v) < abs(A[best][c])):
                best = i
                if abs(v) == 1:
                    break
        if best is None:
            continue
        if best != r:
            A[r], A[best] = A[best], A[r]
        prow = A[r]
        p = prow[c]
        targets = range(nrows) if reduced else range(r + 1, nrows)
        for i in targets:
            if i == r:
                continue
            row = A[i]
            f = row[c]
            if not f:
                continue
            g = gcd(p, f)
            a, b = p // g, f // g
            A[i] = _primitive([a * x - b * y for x, y in zip(row, prow)])
        pivots.append(c)
        r += 1
    return [row for row in A[:r]], pivots


def rref_rows(rows: Iterable[Sequence[Number]], ncols: int) -> tuple[tuple[tuple[Fraction, ...], ...], list[int]]:
    """Reduced row echelon form of the row space (nonzero rows only)."""
    E, pivots = _eliminate(rows, ncols, reduced=True)
    out = []
    for row, c in zip(E, pivots):
        p = row[c]
        out.append(tuple(Fraction(x, p) for x in row))
    return tuple(out), pivots


def _as_rows(A) -> tuple[Sequence[Sequence[Number]], int]:
    if isinstance(A, RationalMatrix):
        return A.rows, A.ncols
    rows = [list(r) for r in A]
    return rows, (len(rows[0]) if rows else 0)


def rank(A) -> int:
    rows, ncols = _as_rows(A)
    return len(_eliminate(rows, ncols, reduced=False)[1])


# ---------------------------------------------------------------------------
# subspaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubspaceBasis:
    """A subspace of Q^ambient held as the RREF of a basis (one vector per row).

    The basis *matrix* (ambient x dim, one basis vector per column) is the
    transpose, i.e. it is in reduced column echelon form.
    """

    ambient: int
    vectors: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def span(cls, vectors: Iterable[Sequence[Number]], ambient: int) -> SubspaceBasis:
        vecs = list(vectors)
        if any(len(v) != ambient for v in vecs):
            raise ValueError("vector length does not match ambient dimension")
        rows, _ = rref_rows(vecs, ambient)
        return cls(ambient, rows)

    @classmethod
    def zero(cls, ambient: int) -> SubspaceBasis:
        return cls(ambient, ())

    @classmethod
    def full(cls, ambient: int) -> SubspaceBasis:
        return cls(ambient, tuple(tuple(Fraction(int(i == j)) for j in range(ambient)) for i in range(ambient)))

    @property
    def dim(self) -> int:
        return len(self.vectors)

    @property
    def matrix(self) -> RationalMatrix:
        return RationalMatrix.from_columns(self.vectors, self.ambient)

    def pivots(self) -> list[int]:
        return [next(k for k, x in enumerate(v) if x) for v in self.vectors]

    def contains(self, v: Sequence[Number]) -> bool:
        """Exact membership by reduction against the echelon basis."""
        if len(v) != self.ambient:
            raise ValueError("vector length does not match ambient dimension")
        w = [Fraction(x) for x in v]
        for row, p in zip(self.vectors, self.pivots()):
            f = w[p]
            if f:
                w = [a - f * b for a, b in zip(w, row)]
        return not any(w)

    def __repr__(self):
        return f"SubspaceBasis(ambient={self.ambient}, dim={self.dim})"


def kernel(A) -> SubspaceBasis:
    """Right null space {x : A x = 0}."""
    rows, ncols = _as_rows(A)
    R, pivots = rref_rows(rows, ncols)
    pivset = set(pivots)
    basis = []
    for f in range(ncols):
        if f in pivset:
            continue
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(R, pivots):
            v[p] = -row[f]
        basis.append(v)
    return SubspaceBasis.span(basis, ncols)


def image(A: RationalMatrix) -> SubspaceBasis:
    """Column space of A."""
    return SubspaceBasis.span(A.columns(), A.nrows)


def annihilator(W: SubspaceBasis) -> SubspaceBasis:
    """Orthogonal complement {c : c . w = 0 for all w in W}."""
    if W.dim == 0:
        return SubspaceBasis.full(W.ambient)
    return kernel(W.vectors)


def preimage(B: RationalMatrix, W: SubspaceBasis) -> SubspaceBasis:
    """{x : B x in W}."""
    if B.nrows != W.ambient:
        raise ValueError("ambient dimension mismatch")
    C = annihilator(W)
    if C.dim == 0:
        return SubspaceBasis.full(B.ncols)
    return kernel(RationalMatrix(C.vectors, B.nrows) @ B)


def subspace_sum(spaces: Sequence[SubspaceBasis]) -> SubspaceBasis:
    if not spaces:
        raise ValueError("need at least one subspace")
    n = spaces[0].ambient
    if any(s.ambient != n for s in spaces):
        raise ValueError("ambient dimension mismatch")
    return SubspaceBasis.span((v for s in spaces for v in s.vectors), n)


def is_contained(U: SubspaceBasis, W: SubspaceBasis) -> bool:
    if U.ambient != W.ambient:
        raise ValueError("ambient dimension mismatch")
    return all(W.contains(u) for u in U.vectors)


def inverse(A: RationalMatrix) -> RationalMatrix:
    n = A.nrows
    if A.ncols != n:
        raise ValueError("not square")
    aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(A.rows)]
    R, pivots = rref_rows(aug, 2 * n)
    if pivots[:n] != list(range(n)) or len(R) < n:
        raise ZeroDivisionError("matrix is singular")
    return RationalMatrix((r[n:] for r in R[:n]), n)


def _projector_parts(U: SubspaceBasis) -> list[list[Fraction]]:
    # H = (Q^T Q)^{-1} Q^T, k x ambient
    Q = U.vectors
    k = len(Q)
    gram = RationalMatrix([[sum((a * b for a, b in zip(Q[s], Q[t]) if a and b), Fraction(0))
                            for t in range(k)] for s in range(k)], k)
    ginv = inverse(gram).rows
    return [[sum((ginv[a][b] * Q[b][t] for b in range(k) if Q[b][t]), Fraction(0))
             for t in range(U.ambient)] for a in range(k)]


def projector(U: SubspaceBasis) -> RationalMatrix:
    """Orthogonal projection onto U as Q (Q^T Q)^{-1} Q^T, exact."""
    n = U.ambient
    if U.dim == 0:
        return RationalMatrix.zeros(n, n)
    H = _projector_parts(U)
    Q = U.vectors
    k = U.dim
    return RationalMatrix([[sum((Q[a][s] * H[a][t] for a in range(k) if Q[a][s]), Fraction(0))
                            for t in range(n)] for s in range(n)], n)


def projector_diagonal_blocks(U: SubspaceBasis, slices: Sequence[slice]) -> list[RationalMatrix]:
    """Diagonal blocks P[s, s] of ``projector(U)`` without forming all of P."""
    if U.dim == 0:
        return [RationalMatrix.zeros(len(range(U.ambient)[s]), len(range(U.ambient)[s])) for s in slices]
    H = _projector_parts(U)
    Q = U.vectors
    k = U.dim
    out = []
    for s in slices:
        idx = range(U.ambient)[s]
        out.append(RationalMatrix([[sum((Q[a][p] * H[a][t] for a in range(k) if Q[a][p]), Fraction(0))
                                    for t in idx] for p in idx], len(idx)))
    return out
