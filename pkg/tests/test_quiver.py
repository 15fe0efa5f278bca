from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsrsr.data import SubspaceTuple, canonical_subrep, to_representation
from qsrsr.linalg import RationalMatrix, SubspaceBasis, subspace_sum
from qsrsr.quiver import (DatumError, PathExplosion, Subrepresentation, bipartize, ensure_valid, full_subrep,
                          image_under, is_subrepresentation, make_datum, restrict_subrep, validate, weight_pairing,
                          zero_subrep)


def M(rows, ncols=None):
    return RationalMatrix(rows, ncols if ncols is not None else len(rows[0]))


def test_validate_fixture_encodings(ex):
    for X in ex.values():
        assert validate(to_representation(X)) == []


def test_validate_single_empty_vertex():
    assert validate(make_datum([("z", 0, 0)], [])) == []


def test_validate_reports_pairing():
    d = make_datum([("x", 1, 1), ("y", -2, 1)], [("a", "x", "y", M([[1]]))])
    v = validate(d)
    assert [p.kind for p in v] == ["pairing"]
    assert "-1" in v[0].message
    with pytest.raises(DatumError):
        ensure_valid(d)


def test_validate_shape_and_cycle():
    d = make_datum([("x", 1, 1), ("y", -1, 1)], [("a", "x", "y", M([[1, 2]]))])
    assert validate(d)[0].kind == "shape"
    c = make_datum([("x", 0, 1), ("y", 0, 1)], [("a", "x", "y", M([[1]])), ("b", "y", "x", M([[1]]))])
    assert validate(c)[0].kind == "cycle"


def test_pairing_examples():
    sigma = {f"v{k}": w for k, w in enumerate([5] * 6 + [-6, -6])}
    d = {f"v{k}": x for k, x in enumerate([1] * 6 + [2, 3])}
    assert weight_pairing(sigma, d) == 0
    assert weight_pairing(sigma, {z: 0 for z in sigma}) == 0
    w = {f"v{k}": x for k, x in enumerate([0, 1, 1, 1, 1, 0, 1, 2])}
    assert weight_pairing(sigma, w) == 2


@given(st.lists(st.tuples(st.integers(-9, 9), st.integers(0, 9), st.integers(0, 9)), min_size=1, max_size=8))
def test_pairing_is_bilinear(rows):
    s = {str(k): r[0] for k, r in enumerate(rows)}
    d1 = {str(k): r[1] for k, r in enumerate(rows)}
    d2 = {str(k): r[2] for k, r in enumerate(rows)}
    both = {z: d1[z] + d2[z] for z in s}
    assert weight_pairing(s, both) == weight_pairing(s, d1) + weight_pairing(s, d2)


def test_subrep_trivial_cases(ex):
    V = to_representation(ex["ex4"]).rep
    assert is_subrepresentation(V, full_subrep(V))
    assert is_subrepresentation(V, zero_subrep(V))


def test_ex3_tuple_gives_subrep(ex):
    X = ex["ex3"]
    T = SubspaceTuple((SubspaceBasis.span([[1, F(7, 20), F(3, 20)]], 3),
                       SubspaceBasis.span([[1, 1, 1]], 3),
                       SubspaceBasis.span([[1, F(1, 2)]], 2)))
    W = canonical_subrep(X, T)
    assert is_subrepresentation(to_representation(X).rep, W)
    assert W.dim_vector() == {"x1": 1, "x2": 0, "x3": 0, "x4": 1, "x5": 0, "y1": 1, "y2": 1, "y3": 1}


def test_non_subrep_detected():
    d = make_datum([("x", 1, 1), ("y", -1, 1)], [("a", "x", "y", M([[3]]))])
    W = Subrepresentation({"x": SubspaceBasis.full(1), "y": SubspaceBasis.zero(1)})
    assert not is_subrepresentation(d.rep, W)


def test_bipartize_bipartite_is_identity(ex):
    d = to_representation(ex["ex1"])
    b = bipartize(d)
    assert b.datum.quiver.vertices == d.quiver.vertices
    assert [a.id for a in b.datum.quiver.arrows] == [a.id for a in d.quiver.arrows]
    assert all(b.datum.rep.maps[a] == d.rep.maps[a] for a in d.rep.maps)
    assert b.flagged == ()


def a3():
    return make_datum([("x", 1, 1), ("z", 0, 1), ("y", -1, 1)],
                      [("a", "x", "z", M([[2]])), ("b", "z", "y", M([[3]]))])


def test_bipartize_a3_composes():
    b = bipartize(a3())
    arrows = b.datum.quiver.arrows
    assert len(arrows) == 1 and (arrows[0].tail, arrows[0].head) == ("x", "y")
    assert b.datum.rep.maps[arrows[0].id] == M([[6]])
    assert b.paths[arrows[0].id] == ("a", "b")
    assert b.flagged == ("z",)
    assert validate(b.datum) == []


def test_bipartize_parallel_paths():
    d = make_datum([("x", 1, 1), ("z", 0, 1), ("y", -1, 1)],
                   [("a", "x", "z", M([[2]])), ("b", "z", "y", M([[3]])), ("c", "x", "y", M([[5]]))])
    b = bipartize(d)
    assert sorted(b.paths.values()) == [("a", "b"), ("c",)]
    assert all((a.tail, a.head) == ("x", "y") for a in b.datum.quiver.arrows)


def test_bipartize_path_cap():
    # a ladder with 2^k paths
    k = 12
    verts = [("s", 1, 1)] + [(f"z{i}", 0, 1) for i in range(k)] + [("t", -1, 1)]
    names = ["s"] + [f"z{i}" for i in range(k)] + ["t"]
    arrows = []
    for i in range(k + 1):
        arrows.append((f"p{i}", names[i], names[i + 1], M([[1]])))
        arrows.append((f"q{i}", names[i], names[i + 1], M([[1]])))
    with pytest.raises(PathExplosion):
        bipartize(make_datum(verts, arrows), max_paths=1000)


def random_path_datum(rng):
    """x -> z -> y plus x -> y, with a zero-weight middle vertex."""
    dx, dz, dy = (int(v) for v in rng.integers(1, 3, size=3))
    mk = lambda r, c: M(rng.integers(-2, 3, size=(r, c)).tolist(), c)
    return make_datum([("x", dy, dx), ("z", 0, dz), ("y", -dx, dy)],
                      [("a", "x", "z", mk(dz, dx)), ("b", "z", "y", mk(dy, dz)), ("c", "x", "y", mk(dy, dx))])


def random_subrep(rng, datum):
    spaces = {}
    for z in datum.quiver.topological_order():
        d = datum.dims[z]
        gens = [list(v) for v in rng.integers(-2, 3, size=(int(rng.integers(0, d + 1)), d))]
        inc = [image_under(datum.rep.maps[a.id], spaces[a.tail]) for a in datum.quiver.arrows if a.head == z]
        spaces[z] = subspace_sum([SubspaceBasis.span(gens, d), *inc])
    return Subrepresentation(spaces)


def test_bipartize_preserves_pairing_and_pushes_subreps():
    rng = np.random.default_rng(5)
    for _ in range(40):
        d = random_path_datum(rng)
        b = bipartize(d)
        nz = {z: d.dims[z] for z in d.quiver.vertices if d.weight[z] != 0}
        assert weight_pairing(dict(b.datum.weight), dict(b.datum.dims)) == \
            weight_pairing({z: d.weight[z] for z in nz}, nz)
        W = random_subrep(rng, d)
        assert is_subrepresentation(d.rep, W)
        assert is_subrepresentation(b.datum.rep, restrict_subrep(W, b))
