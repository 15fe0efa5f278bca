from fractions import Fraction as F

import numpy as np
import pytest

from qsrsr.data import (OracleTooLarge, PartitionedDataSet, SubspaceTuple, brute_force_discrepancy,
                        canonical_subrep, evaluate, index_set, to_representation)
from qsrsr.generate import random_partitioned
from qsrsr.linalg import SubspaceBasis
from qsrsr.quiver import is_subrepresentation, weight_pairing

span = SubspaceBasis.span

U4 = lambda: SubspaceTuple((span([[1, 2]], 2), span([[1, 1, 1], [3, 1, 3]], 3)))
S4 = lambda: SubspaceTuple((span([[1, 2]], 2), SubspaceBasis.full(3)))


def test_encoding_weights(ex):
    d = to_representation(ex["ex1"])
    assert [d.weight[z] for z in d.quiver.vertices] == [5, 5, 5, 5, -4, -4]
    assert [d.dims[z] for z in d.quiver.vertices] == [1, 1, 1, 1, 2, 3]
    assert d.quiver.bipartite_split == (("x1", "x2", "x3", "x4"), ("y1", "y2"))


def test_single_block_is_subspace_quiver():
    X = PartitionedDataSet.from_values([3], [[1, 0, 0], [0, 1, 0], [1, 1, 0], [0, 0, 1]])
    d = to_representation(X)
    assert len(d.quiver.bipartite_split[1]) == 1 and len(d.quiver.arrows) == 4
    assert d.weight["y1"] == -4 and d.weight["x1"] == 3


def test_degenerate_instance():
    d = to_representation(PartitionedDataSet.from_values([1], [[0]]))
    (a,) = d.quiver.arrows
    assert d.rep.maps[a.id].rows == ((0,),)
    assert dict(d.weight) == {"x1": 1, "y1": -1}


def test_round_trip_points(ex):
    for X in ex.values():
        d = to_representation(X)
        for i in range(X.n):
            back = sum((d.rep.maps[f"a{i + 1}_{j + 1}"].columns()[0] for j in range(X.m)), ())
            assert back == X.points[i]


def test_index_sets(ex):
    X = ex["ex4"]
    assert index_set(X, U4()) == (1, 2, 3, 4)          # points 2..5
    assert index_set(X, SubspaceTuple.full(X)) == tuple(range(6))
    assert index_set(X, SubspaceTuple.zero(X)) == ()


def test_evaluate_examples(ex):
    T3 = SubspaceTuple((span([[1, F(7, 20), F(3, 20)]], 3), span([[1, 1, 1]], 3), span([[1, F(1, 2)]], 2)))
    e = evaluate(ex["ex3"], T3)
    assert e.index_set == (0, 3) and e.pairing_value == 1 and e.margin == F(1, 8) and e.is_solution

    T1 = SubspaceTuple((SubspaceBasis.full(2), span([[F(1, 10), F(2, 10), F(1, 10)]], 3)))
    e = evaluate(ex["ex1"], T1)
    assert e.pairing_value == -2 and not e.is_solution

    e = evaluate(ex["ex4"], S4())
    assert e.index_set == (0, 1, 2, 3, 4) and e.pairing_value == 1 and e.margin == F(1, 5)
    e = evaluate(ex["ex4"], U4())
    assert e.pairing_value == 2 and e.margin == F(2, 5)


def test_canonical_subrep(ex):
    X = ex["ex4"]
    d = to_representation(X)
    W = canonical_subrep(X, U4())
    assert [W.spaces[z].dim for z in d.quiver.vertices] == [0, 1, 1, 1, 1, 0, 1, 2]
    assert is_subrepresentation(d.rep, W)
    full = canonical_subrep(X, SubspaceTuple.full(X))
    assert all(full.spaces[z].dim == d.dims[z] for z in d.quiver.vertices)
    zero = canonical_subrep(X, SubspaceTuple.zero(X))
    assert all(s.dim == 0 for s in zero.spaces.values())


def test_oracle_examples(ex):
    assert brute_force_discrepancy(ex["ex1"]).disc == 0
    assert brute_force_discrepancy(ex["ex2"]).disc == 0
    o = brute_force_discrepancy(ex["ex4"])
    assert o.disc == 2 and set(o.index_set) >= {1, 2, 3, 4} and o.tuple.dims == (1, 2)
    assert brute_force_discrepancy(ex["ex3"]).disc == 1       # frozen regression value


def test_oracle_limit():
    X = PartitionedDataSet.from_values([1], [[1]] * 13)
    with pytest.raises(OracleTooLarge):
        brute_force_discrepancy(X)


def random_tuple(rng, X):
    out = []
    for d in X.blocks:
        k = int(rng.integers(0, d + 1))
        if rng.random() < 0.5 and X.n:
            # spans of data blocks hit more points than random spaces
            idx = rng.choice(X.n, size=min(k, X.n), replace=False)
            out.append(span([X.block(int(i), len(out)) for i in idx], d))
        else:
            out.append(span(rng.integers(-3, 4, size=(k, d)).tolist(), d))
    return SubspaceTuple(tuple(out))


def test_pairing_matches_subrep_dimension_and_oracle_dominates():
    rng = np.random.default_rng(17)
    cache = {}
    for t in range(200):
        X = random_partitioned(rng, n_max=7, D_max=5) if t % 4 == 0 or not cache else cache["X"]
        cache["X"] = X
        d = to_representation(X)
        T = random_tuple(rng, X)
        e = evaluate(X, T)
        W = canonical_subrep(X, T)
        assert e.pairing_value == weight_pairing(dict(d.weight), W.dim_vector())
        assert e.margin * X.D == e.pairing_value
        if "disc" not in cache or t % 4 == 0:
            cache["disc"] = brute_force_discrepancy(X).disc
        assert cache["disc"] >= e.pairing_value


def test_enlarging_never_shrinks_index_set():
    rng = np.random.default_rng(23)
    for _ in range(50):
        X = random_partitioned(rng, n_max=6, D_max=5)
        T = random_tuple(rng, X)
        j = int(rng.integers(0, X.m))
        bigger = list(T.spaces)
        extra = rng.integers(-3, 4, size=X.blocks[j]).tolist()
        bigger[j] = span(list(bigger[j].vectors) + [extra], X.blocks[j])
        assert set(index_set(X, T)) <= set(index_set(X, SubspaceTuple(tuple(bigger))))
