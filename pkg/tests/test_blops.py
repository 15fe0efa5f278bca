from fractions import Fraction as F

import numpy as np
import pytest

from qsrsr.blops import (BlockPSD, ScaledKraus, apply, apply_dual, apply_dual_naive, apply_naive, build_kraus,
                         build_layout, ds, ds_value, identity_singularity, normalize_left, normalize_right)
from qsrsr.data import PartitionedDataSet, to_representation
from qsrsr.generate import random_bipartite_datum, random_partitioned
from qsrsr.linalg import RationalMatrix, rank
from qsrsr.quiver import DatumError, make_datum


def kraus_of(X):
    return build_kraus(to_representation(X))


def single(payload, sx=1, sy=-1):
    P = RationalMatrix(payload, len(payload[0]))
    return build_kraus(make_datum([("x", sx, P.ncols), ("y", sy, P.nrows)], [("a", "x", "y", P)]))


def trace(A):
    return sum(A.rows[k][k] for k in range(A.nrows))


def test_srsr_layout(ex):
    for X in ex.values():
        lay = kraus_of(X).layout
        assert set(lay.sigma_plus) == {X.D} and set(lay.sigma_minus) == {X.n}
        assert lay.N == X.n * X.D and lay.M == X.n * X.m and lay.M_prime == X.n * X.D


def test_ex4_sizes(ex):
    K = kraus_of(ex["ex4"])
    assert (K.N, K.L) == (30, 360)
    for X in ex.values():
        assert kraus_of(X).L == X.n ** 2 * X.m * X.D
        assert sum(1 for _ in kraus_of(X).indices()) == kraus_of(X).L


def test_single_arrow():
    K = single([[1]])
    assert (K.N, K.L) == (1, 1)


def test_rank_one_flag(ex):
    assert all(kraus_of(X).rank_one for X in ex.values())
    assert not single([[1, 0], [0, 1]]).rank_one
    assert single([[1, 2], [2, 4]]).rank_one


def test_layout_rejects_zero_weight_and_wrong_signs():
    P = RationalMatrix([[1]], 1)
    z = make_datum([("x", 1, 1), ("z", 0, 1), ("y", -1, 1)], [("a", "x", "z", P), ("b", "z", "y", P)])
    with pytest.raises(DatumError):
        build_layout(z)
    w = make_datum([("x", -1, 1), ("y", 1, 1)], [("a", "x", "y", P)])
    with pytest.raises(DatumError):
        build_layout(w)


def test_blowups_linearly_independent():
    K = kraus_of(PartitionedDataSet.from_values([2], [[1, 2], [3, -1]]))
    vecs = [sum(K.materialize(idx).rows, ()) for idx in K.indices()]
    assert len(vecs) == K.L == 8
    assert rank(vecs) == 8


def full_psd(rng, n, k=None):
    G = rng.integers(-3, 4, size=(n, k or n))
    return RationalMatrix((G @ G.T).tolist(), n)


def small_kraus(rng):
    if rng.random() < 0.5:
        return kraus_of(random_partitioned(rng, n_min=2, n_max=3, D_max=3, plant=0.3))
    return build_kraus(random_bipartite_datum(rng, n_src=2, n_snk=2, dim_max=2, weight_max=2))


def test_structured_matches_naive_on_toys():
    rng = np.random.default_rng(1)
    seen = 0
    while seen < 40:
        K = small_kraus(rng)
        if not 0 < K.N <= 8:
            continue
        seen += 1
        I = BlockPSD.identity(K)
        assert apply(K, I).to_full() == apply_naive(K, RationalMatrix.identity(K.N))
        Y = full_psd(rng, K.N)
        assert apply(K, BlockPSD.from_full(K, Y)).to_full() == apply_naive(K, Y)
        X = full_psd(rng, K.N)
        assert apply_dual(K, BlockPSD.from_full(K, X, "codomain")).to_full() == apply_dual_naive(K, X)


def test_identity_trace_on_toy():
    X = PartitionedDataSet.from_values([1, 1], [[1, 2], [3, F(1, 2)]])
    K = kraus_of(X)
    TI = apply(K, BlockPSD.identity(K)).to_full()
    expect = sum(K.layout.sigma_minus[a.j] * K.layout.sigma_plus[a.i] * trace(a.payload @ a.payload.T)
                 for a in K.arrows)
    assert trace(TI) == expect == trace(apply_naive(K, RationalMatrix.identity(K.N)))


def test_ex4_identity_matches_naive_integer_sum(ex):
    K = kraus_of(ex["ex4"])
    s = K.scale
    naive = np.zeros((K.N, K.N), dtype=np.int64)
    for idx in K.indices():
        A = np.array([[int(x * s) for x in r] for r in K.materialize(idx).rows], dtype=np.int64)
        naive += A @ A.T
    got = apply(K, BlockPSD.identity(K)).to_full()
    assert [[x * s * s for x in r] for r in got.rows] == naive.tolist()
    naive_dual = np.zeros_like(naive)
    for idx in K.indices():
        A = np.array([[int(x * s) for x in r] for r in K.materialize(idx).rows], dtype=np.int64)
        naive_dual += A.T @ A
    got = apply_dual(K, BlockPSD.identity(K, "codomain")).to_full()
    assert [[x * s * s for x in r] for r in got.rows] == naive_dual.tolist()


def test_zero_in_zero_out(ex):
    K = kraus_of(ex["ex1"])
    Z = RationalMatrix.zeros(K.N, K.N)
    assert apply(K, BlockPSD.from_full(K, Z)).to_full().is_zero()
    assert apply_dual(K, BlockPSD.from_full(K, Z, "codomain")).to_full().is_zero()


def test_adjointness():
    rng = np.random.default_rng(2)
    done = 0
    while done < 100:
        K = small_kraus(rng)
        if not 0 < K.N <= 8:
            continue
        done += 1
        Y = full_psd(rng, K.N, 2)
        X = full_psd(rng, K.N, 2)
        TY = apply(K, BlockPSD.from_full(K, Y)).to_full()
        TsX = apply_dual(K, BlockPSD.from_full(K, X, "codomain")).to_full()
        assert trace(TY @ X) == trace(Y @ TsX)


def test_scalar_dual_identity():
    K = kraus_of(PartitionedDataSet.from_values([1], [[3]]))
    assert apply_dual(K, BlockPSD.identity(K, "codomain")).to_full() == RationalMatrix([[9]], 1)
    K = kraus_of(PartitionedDataSet.from_values([1], [[3], [3]]))
    # each source sees its point once per copy of the sink: multiplicity n = 2
    assert apply_dual(K, BlockPSD.identity(K, "codomain")).to_full() == RationalMatrix.identity(2).scale(18)


def test_operators_preserve_psd_numerically():
    rng = np.random.default_rng(4)
    for _ in range(30):
        K = small_kraus(rng)
        if K.N == 0:
            continue
        for out in (apply(K, BlockPSD.from_full(K, full_psd(rng, K.N, 2))).to_full(),
                    apply_dual(K, BlockPSD.from_full(K, full_psd(rng, K.N, 2), "codomain")).to_full()):
            A = out.to_numpy()
            ev = np.linalg.eigvalsh(A)
            assert ev.min() >= -1e-10 * max(1.0, np.linalg.norm(A))


def test_identity_singularity(ex):
    assert identity_singularity(kraus_of(ex["ex4"])) == (False, False)
    K = kraus_of(PartitionedDataSet.from_values([2], [[1, 0], [2, 0]]))
    assert identity_singularity(K)[0]
    K = kraus_of(PartitionedDataSet.from_values([1, 1], [[0, 0], [1, 1]]))
    assert identity_singularity(K)[1]


def test_ds_formula():
    assert ds_value(2 * np.eye(4), np.eye(4)) == pytest.approx(4.0)
    assert ds_value(np.eye(3), np.eye(3)) == 0.0


def test_doubly_stochastic_is_fixed():
    K = single([[0, 1], [1, 0]])
    assert ds(K) == 0.0
    S = normalize_left(normalize_right(K))
    assert np.allclose(S.right, np.eye(2)) and np.allclose(S.left, np.eye(2))
    assert ds(S) <= 1e-24


def test_ds_zero_means_identities():
    K = single([[0, 1], [1, 0]])
    S = ScaledKraus(K)
    assert ds(S) == 0
    for b in S.t_identity_blocks() + S.tstar_identity_blocks():
        assert np.linalg.norm(b - np.eye(len(b))) <= 1e-6


def test_diagonal_toy_payloads_halved():
    K = single([[2, 0], [0, 2]])
    S = ScaledKraus(K)
    assert np.allclose(S.tstar_identity_blocks()[0], 4 * np.eye(2))
    R = normalize_right(K)
    assert np.allclose(R.payloads()[0], np.eye(2))


def test_normalization_zeroes_one_side(ex):
    rng = np.random.default_rng(6)
    Ks = [kraus_of(X) for X in ex.values()]
    while len(Ks) < 24:
        K = kraus_of(random_partitioned(rng))
        if identity_singularity(K) == (False, False):
            Ks.append(K)
    for K in Ks:
        R = normalize_right(K)
        assert R.ds_parts()[1] <= 1e-12
        L = normalize_left(R)
        assert L.ds_parts()[0] <= 1e-12


def test_ds_parts_agree_with_full_formula():
    K = kraus_of(PartitionedDataSet.from_values([1, 1], [[1, 2], [3, F(1, 2)]]))
    TI = np.zeros((K.N, K.N))
    TsI = np.zeros((K.N, K.N))
    for idx in K.indices():
        A = K.materialize(idx).to_numpy()
        TI += A @ A.T
        TsI += A.T @ A
    assert ds(K) == pytest.approx(ds_value(TI, TsI), rel=1e-12)


def test_ex4_ds_strictly_decreases(ex):
    S = ScaledKraus(kraus_of(ex["ex4"]))
    vals = [S.ds()]
    for j in range(1, 6):
        S = S.normalize_right() if j % 2 else S.normalize_left()
        vals.append(S.ds())
    assert all(a > b for a, b in zip(vals, vals[1:]))
