"""Second Wong sequences, random max-rank combinations and shrunk subspaces."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .blops import KrausSet, kraus_image_dim, product_subspace, sink_images, source_projections
from .linalg import RationalMatrix, SubspaceBasis, annihilator, is_contained, kernel, rank, _integer_rows


class RetriesExhausted(RuntimeError):
    def __init__(self, message: str, lower_bound: int = 0, attempts: tuple = ()):
        super().__init__(message)
        self.lower_bound = lower_bound
        self.attempts = attempts


class NoShrunkSubspace(Exception):
    """An invertible B was drawn, which proves no shrunk subspace exists."""

    def __init__(self, combo: RandomCombination):
        super().__init__("random combination is invertible; the Kraus set has no shrunk subspace")
        self.combo = combo


@dataclass(frozen=True)
class RandomCombination:
    alpha: tuple[int, ...]            # one coefficient per index of S_sigma, in enumeration order
    seed: int
    retry: int
    s: int
    epsilon: Fraction
    rows: tuple[tuple[int, ...], ...]  # scale * B, integer
    scale: int                         # B = rows / scale

    @property
    def N(self) -> int:
        return len(self.rows)

    @property
    def matrix(self) -> RationalMatrix:
        return RationalMatrix(([Fraction(x, self.scale) for x in r] for r in self.rows), self.N)

    def rank(self) -> int:
        return rank(self.rows) if self.rows else 0

    def corank(self) -> int:
        return self.N - self.rank()


def sample_size(N: int, epsilon) -> int:
    epsilon = Fraction(epsilon)
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie strictly between 0 and 1")
    return max(1, math.ceil(Fraction(2 * N * N) / epsilon))


def assemble_b(K: KrausSet, alpha) -> list[list[int]]:
    """scale * sum_k alpha_k A_k, block by block."""
    N = K.N
    rows = [[0] * N for _ in range(N)]
    dom = K.layout.domain_blocks()
    cod = K.layout.codomain_blocks()
    for (i, j, k, q, r), a in zip(K.indices(), alpha):
        P = K.int_payloads[k]
        r0, c0 = cod[q][1].start, dom[r][1].start
        for s, prow in enumerate(P):
            row = rows[r0 + s]
            for t, x in enumerate(prow):
                if x:
                    row[c0 + t] += a * x
    return rows


def random_b(K: KrausSet, epsilon=Fraction(1, 2), seed: int = 0, retry: int = 0) -> RandomCombination:
    """B = sum alpha_k A_k with alpha_k uniform on {1, ..., ceil(2N^2/eps)}."""
    epsilon = Fraction(epsilon)
    s = sample_size(K.N, epsilon)
    rng = np.random.default_rng([int(seed), int(retry)])
    alpha = tuple(int(x) for x in rng.integers(1, s + 1, size=K.L))
    rows = assemble_b(K, alpha)
    return RandomCombination(alpha, int(seed), int(retry), s, epsilon, tuple(map(tuple, rows)), K.scale)


def combination_from_alpha(K: KrausSet, alpha, seed: int = 0, retry: int = 0, epsilon=Fraction(1, 2)) -> RandomCombination:
    """Rebuild B from recorded coefficients (replay)."""
    if len(alpha) != K.L:
        raise ValueError(f"expected {K.L} coefficients, got {len(alpha)}")
    rows = assemble_b(K, alpha)
    return RandomCombination(tuple(int(a) for a in alpha), int(seed), int(retry), sample_size(K.N, epsilon),
                             Fraction(epsilon), tuple(map(tuple, rows)), K.scale)


# ---------------------------------------------------------------------------
# Wong sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WongState:
    chain: tuple[SubspaceBasis, ...]    # W_0 = 0 < W_1 < ... < W_k = W*
    stabilized_at: int
    limit_sinks: tuple[SubspaceBasis, ...]   # W* restricted to one block of each sink

    @property
    def limit(self) -> SubspaceBasis:
        return self.chain[-1]

    @property
    def dims(self) -> list[int]:
        return [w.dim for w in self.chain]


def _preimage_product(K: KrausSet, B: RandomCombination, sinks: list[SubspaceBasis]) -> SubspaceBasis:
    """B^{-1}(W) for W equal to Z_j on every codomain block of sink j."""
    anns = [_integer_rows(annihilator(z).vectors) if z.dim < z.ambient else [] for z in sinks]
    eqs = []
    for j, sl in K.layout.codomain_blocks():
        block = B.rows[sl]
        for c in anns[j]:
            eqs.append([sum(ci * b[col] for ci, b in zip(c, block) if ci) for col in range(K.N)])
    if not eqs:
        return SubspaceBasis.full(K.N)
    return kernel(eqs) if any(any(e) for e in eqs) else SubspaceBasis.full(K.N)


def wong_limit(K: KrausSet, B: RandomCombination) -> WongState:
    """W_0 = 0, W_k = A(B^{-1}(W_{k-1})) until the chain stabilizes.

    Every W_k is a product subspace (the same Z_j on all blocks of sink j),
    so the sequence is run on the per-sink spaces.
    """
    sinks = [SubspaceBasis.zero(d) for d in K.layout.sink_dims]
    chain = [product_subspace(K, sinks)]
    for _ in range(K.N + 1):
        U = _preimage_product(K, B, sinks)
        nxt = sink_images(K, source_projections(K, U))
        W = product_subspace(K, nxt)
        if W == chain[-1]:
            return WongState(tuple(chain), len(chain) - 1, tuple(sinks))
        chain.append(W)
        sinks = nxt
    raise AssertionError("second Wong sequence failed to stabilize within N steps")


def preimage_of(K: KrausSet, B: RandomCombination, W: SubspaceBasis) -> SubspaceBasis:
    """B^{-1}(W) for an arbitrary codomain subspace (dense route)."""
    C = annihilator(W)
    if C.dim == 0:
        return SubspaceBasis.full(K.N)
    Cint = _integer_rows(C.vectors)
    eqs = [[sum(c[r] * B.rows[r][col] for r in range(K.N) if c[r]) for col in range(K.N)] for c in Cint]
    return kernel(eqs)


def image_of(B: RandomCombination) -> SubspaceBasis:
    return SubspaceBasis.span([[row[c] for row in B.rows] for c in range(B.N)], B.N)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShrunkCertificate:
    U: SubspaceBasis
    c: int                      # dim U - dim sum_k A_k(U)
    B: RandomCombination
    corank_B: int
    wong: WongState
    image_dim: int


@dataclass(frozen=True)
class NotContained:
    B: RandomCombination
    corank_B: int
    wong: WongState
    shrink_value: int           # dim U - dim A(U) for U = B^{-1}(W*), for the record


def shrink_value(K: KrausSet, U: SubspaceBasis) -> int:
    """dim U - dim sum_k A_k(U), recomputed by brute force over S_sigma.

    Every Kraus operator is applied to every basis vector of U with the
    rational payloads; nothing from the structured production path is reused.
    """
    N = K.N
    dom = K.layout.domain_blocks()
    cod = K.layout.codomain_blocks()
    vecs = []
    for _, _, k, q, r in K.indices():
        P = K.arrows[k].payload
        rs, cs = cod[q][1], dom[r][1]
        for u in U.vectors:
            piece = u[cs]
            if not any(piece):
                continue
            v = [Fraction(0)] * N
            for s, row in enumerate(P.rows):
                v[rs.start + s] = sum((a * b for a, b in zip(row, piece)), Fraction(0))
            vecs.append(v)
    return U.dim - (rank(vecs) if vecs else 0)


def shrunk_from_wong(K: KrausSet, B: RandomCombination, state: WongState | None = None) -> ShrunkCertificate | NotContained:
    """U = B^{-1}(W*) with c = corank(B) when W* lies in Im B, else NotContained.

    The equality dim U - dim A(U) = corank(B) is checked, not assumed.
    """
    state = state or wong_limit(K, B)
    corank = B.corank()
    U = _preimage_product(K, B, list(state.limit_sinks))
    image_dim = kraus_image_dim(K, U)
    value = U.dim - image_dim
    if not is_contained(state.limit, image_of(B)):
        return NotContained(B, corank, state, value)
    if value != corank:
        raise AssertionError(f"limit lies in Im B but dim U - dim A(U) = {value} != corank {corank}")
    return ShrunkCertificate(U, value, B, corank, state, image_dim)


def algorithm_p(K: KrausSet, epsilon=Fraction(1, 2), seed: int = 0, max_retries: int = 8,
                guard: bool = True) -> ShrunkCertificate:
    """Draw B and run the Wong sequence; retry until a shrunk subspace appears.

    With ``guard`` set, an invertible B ends the search with NoShrunkSubspace
    (an invertible element rules out every shrunk subspace).  Without it such
    draws count as failed attempts.
    """
    attempts = []
    for retry in range(max_retries):
        B = random_b(K, epsilon, seed, retry)
        out = shrunk_from_wong(K, B)
        attempts.append(out)
        if isinstance(out, ShrunkCertificate):
            if out.c >= 1:
                return out
            if guard:
                raise NoShrunkSubspace(B)
    raise RetriesExhausted(f"no shrunk subspace after {max_retries} attempts", 0, tuple(attempts))
