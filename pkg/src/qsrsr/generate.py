"""Seeded random instances, with optional planted low-dimensional structure."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .data import PartitionedDataSet
from .linalg import RationalMatrix
from .quiver import QuiverDatum, make_datum


def _composition(rng: np.random.Generator, total: int, parts: int) -> list[int]:
    cuts = sorted(rng.choice(np.arange(1, total), size=parts - 1, replace=False)) if parts > 1 else []
    edges = [0, *cuts, total]
    return [int(b - a) for a, b in zip(edges, edges[1:])]


def random_partitioned(rng: np.random.Generator, n_min: int = 3, n_max: int = 8, D_max: int = 6, coord: int = 9,
                       plant: float = 0.6, zero_prob: float = 0.02) -> PartitionedDataSet:
    """Integer points in [-coord, coord]; with probability ``plant`` a random
    subset of points is forced into random proper subspaces blockwise."""
    n = int(rng.integers(n_min, n_max + 1))
    D = int(rng.integers(2, D_max + 1))
    m = int(rng.integers(1, min(3, D) + 1))
    blocks = _composition(rng, D, m)
    pts = rng.integers(-coord, coord + 1, size=(n, D))
    pts[rng.random((n, D)) < zero_prob] = 0
    if rng.random() < plant:
        k = int(rng.integers(1, n))              # leave at least one free point
        chosen = rng.choice(n, size=k, replace=False)
        off = 0
        for d in blocks:
            t = int(rng.integers(min(1, d - 1), d))   # planted dimension < d, nonzero if possible
            basis = rng.integers(-3, 4, size=(d, t))
            for i in chosen:
                pts[i, off:off + d] = basis @ rng.integers(-2, 3, size=t) if t else 0
            off += d
    return PartitionedDataSet.from_values(blocks, [[int(x) for x in row] for row in pts])


def random_bipartite_datum(rng: np.random.Generator, n_src: int = 3, n_snk: int = 2, dim_max: int = 2,
                           weight_max: int = 3, coord: int = 3, arrow_prob: float = 0.7,
                           low_rank_prob: float = 0.3, src_dim_max: int | None = None) -> QuiverDatum:
    """A bipartite datum with sigma . dim V = 0, found by rejection sampling
    on the weights.  Payloads are small integer matrices, some of low rank.
    ``src_dim_max`` caps the source dimensions separately (default ``dim_max``)."""
    src_cap = dim_max if src_dim_max is None else src_dim_max
    for _ in range(1000):
        dx = [int(x) for x in rng.integers(1, src_cap + 1, size=n_src)]
        dy = [int(x) for x in rng.integers(1, dim_max + 1, size=n_snk)]
        sx = [int(x) for x in rng.integers(1, weight_max + 1, size=n_src)]
        total = sum(s * d for s, d in zip(sx, dx))
        sy = _split_weight(rng, total, dy, weight_max)
        if sy is not None:
            break
    else:
        raise RuntimeError("could not balance the weights")
    vertices = [(f"x{i + 1}", sx[i], dx[i]) for i in range(n_src)] + \
               [(f"y{j + 1}", -sy[j], dy[j]) for j in range(n_snk)]
    arrows = []
    for i in range(n_src):
        for j in range(n_snk):
            if rng.random() >= arrow_prob:
                continue
            mat = rng.integers(-coord, coord + 1, size=(dy[j], dx[i]))
            if rng.random() < low_rank_prob:
                mat = np.outer(rng.integers(-coord, coord + 1, size=dy[j]), rng.integers(-coord, coord + 1, size=dx[i]))
            arrows.append((f"a{i + 1}_{j + 1}", f"x{i + 1}", f"y{j + 1}",
                           RationalMatrix([[Fraction(int(x)) for x in row] for row in mat], dx[i])))
    split = (tuple(v[0] for v in vertices[:n_src]), tuple(v[0] for v in vertices[n_src:]))
    return make_datum(vertices, arrows, split)


def _split_weight(rng: np.random.Generator, total: int, dims: list[int], cap: int) -> list[int] | None:
    # find positive integers s_j <= cap with sum s_j d_j = total
    for _ in range(200):
        s = [int(x) for x in rng.integers(1, cap + 1, size=len(dims) - 1)]
        rest = total - sum(a * b for a, b in zip(s, dims))
        if rest > 0 and rest % dims[-1] == 0:
            return s + [rest // dims[-1]]
    return None
