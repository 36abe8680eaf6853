from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from subdivforms import meshgen
from subdivforms.derham import build_D, matrix_rank
from subdivforms.errors import LevelOrder, UnsupportedConfiguration
from subdivforms.mesh import face_two_ring
from subdivforms.stencils import StencilTable, default_table, loop_beta
from subdivforms.subdivision import (accumulate, build_hierarchy, build_level, build_S,
                                     column_support, is_dyadic, loop_positions,
                                     refine_faces, refine_topology, support_violations)


def counts(m):
    return m.n_vertices, m.n_edges, m.n_faces


def test_refine_counts():
    t = meshgen.single_triangle()
    fine, rmap = refine_topology(t)
    assert counts(fine) == (6, 9, 4)
    assert counts(refine_topology(fine)[0])[2] == 16
    assert counts(refine_topology(meshgen.two_triangle_square())[0]) == (9, 16, 8)


@pytest.mark.parametrize("make", [meshgen.structured_square, lambda n: meshgen.irregular_disk()])
def test_refinement_map(make):
    m = make(3)
    fine, rmap = refine_topology(m)
    V, E, F = counts(m)
    assert counts(fine) == (V + E, 2 * E + 3 * F, 4 * F)
    assert rmap.half_children.shape == (E, 2)
    assert rmap.interior_children.shape == (F, 3)
    assert np.bincount(rmap.edge_parent[rmap.edge_kind == 0], minlength=E).tolist() == [2] * E
    assert np.bincount(rmap.edge_parent[rmap.edge_kind == 1], minlength=F).tolist() == [3] * F
    # corner child i keeps coarse corner i
    for i in range(3):
        assert np.array_equal(fine.faces[4 * np.arange(F) + i][:, 0], m.faces[:, i])


def test_loop_beta_regular():
    b = loop_beta(6)
    assert b == Fraction(1, 16)
    assert 1 - 6 * b == Fraction(5, 8)
    # closed form at a generic valence
    n = 7
    assert np.isclose(float(loop_beta(n)), (5 / 8 - (3 / 8 + np.cos(2 * np.pi / n) / 4) ** 2) / n)


def test_loop_vertex_rules_regular(square4):
    S0 = build_S(0, square4).matrix.tolil()
    v = 2 * 5 + 2
    row = dict(zip(S0.rows[v], S0.data[v]))
    assert row[v] == 5 / 8
    assert sorted(w for c, w in row.items() if c != v) == [1 / 16] * 6
    # boundary odd vertex: midpoint of its coarse edge
    e = int(np.flatnonzero(square4.boundary_edges)[0])
    r = square4.n_vertices + e
    assert dict(zip(S0.rows[r], S0.data[r])) == {square4.edges[e, 0]: 0.5, square4.edges[e, 1]: 0.5}


def test_affine_invariance(disk):
    for scheme in ("loopwang", "whitney"):
        S0 = build_S(0, disk, scheme=scheme).matrix
        p = np.array([0.3, -1.7])
        assert np.allclose(S0 @ np.tile(p, (disk.n_vertices, 1)), p, atol=1e-15)
        A = np.array([[2.0, 1.0], [-0.5, 3.0]])
        # affine images commute with the rules away from tagged corners
        X = disk.vertices @ A.T + p
        assert np.allclose(S0 @ X, (S0 @ disk.vertices) @ A.T + p, atol=1e-13)
    P = loop_positions(disk)
    assert P.shape == (disk.n_vertices + disk.n_edges, 2)


def test_whitney_vertex_rows(disk):
    S0 = build_S(0, disk, scheme="whitney").matrix
    V = disk.n_vertices
    assert (S0[:V] != sparse.identity(V)).nnz == 0
    E = disk.edges
    expect = np.zeros((disk.n_edges, V))
    expect[np.arange(len(E)), E[:, 0]] = 0.5
    expect[np.arange(len(E)), E[:, 1]] = 0.5
    assert np.array_equal(S0[V:].toarray(), expect)


@pytest.mark.parametrize("scheme", ["loopwang", "whitney"])
def test_row_sums(scheme, disk):
    _, _, S = build_level(disk, scheme)
    assert np.abs(S[0].sum(axis=1) - 1).max() <= 1e-14
    assert np.abs(4 * S[2].sum(axis=1) - 1).max() <= 1e-14


def test_regular_commutation_entrywise():
    m = meshgen.structured_square(4)
    fine, _, S = build_level(m, "loopwang")
    R1 = build_D(fine, 1).astype(float) @ S[1] - S[2] @ build_D(m, 1).astype(float)
    R0 = build_D(fine, 0).astype(float) @ S[0] - S[1] @ build_D(m, 0).astype(float)
    assert abs(R0).max() == 0.0
    assert abs(R1).max() == 0.0


def test_regular_stencils_dyadic():
    h = build_hierarchy(meshgen.structured_square(4), 2)
    for k in range(3):
        assert is_dyadic(h.S[k][1]) is not None
    t = default_table()
    for n in (3, 4, 6):
        assert all(Fraction(w).denominator & (Fraction(w).denominator - 1) == 0
                   for _, w in t.get(0, "interior-even", n))
    assert not StencilTable({(0, "interior-even", 5): t.get(0, "interior-even", 5)}).is_dyadic()


def test_accumulate(lw_square):
    h = lw_square
    I = accumulate(h, 1, 2, 2).matrix
    assert (I != sparse.identity(h.meshes[2].n_edges)).nnz == 0
    for k in range(3):
        A02 = accumulate(h, k, 0, 2).matrix
        assert abs(A02 - h.S[k][1] @ h.S[k][0]).max() == 0
        A03 = accumulate(h, k, 0, 3).matrix
        split = accumulate(h, k, 1, 3).matrix @ accumulate(h, k, 0, 1).matrix
        assert abs(A03 - split).max() == 0
    with pytest.raises(LevelOrder):
        accumulate(h, 0, 2, 1)


def test_full_column_rank(lw_square, wh_square):
    for h in (lw_square, wh_square):
        for k in range(3):
            A = accumulate(h, k, 0, 2).matrix
            assert A.shape[1] <= 2000
            assert matrix_rank(A) == A.shape[1]


def test_whitney_support_is_one_ring(wh_square):
    h = wh_square
    A = accumulate(h, 0, 0, 1)
    m = h.meshes[0]
    star_of = m.incidence(2, 0).tocsc()
    for i in range(m.n_vertices):
        star = star_of[:, i].indices
        one_ring = set(refine_faces(h, star, 0, 1))
        two_ring = set(refine_faces(h, face_two_ring(m, 0, i), 0, 1))
        assert set(column_support(A, h, i)) == one_ring
        assert one_ring < two_ring


def test_loopwang_support_regular_vertex(lw_square):
    h = lw_square
    m = h.meshes[0]
    v = 2 * 5 + 2
    A = accumulate(h, 0, 0, 1)
    ring = face_two_ring(m, 0, v)
    assert len(ring) == 24
    allowed = set(refine_faces(h, ring, 0, 1))
    assert len(allowed) == 96
    assert set(column_support(A, h, v)) <= allowed
    # subdivision bases reach past the one-ring (detector check)
    assert support_violations(h, 0, 0, 2, rings=1) > 0


def test_boundary_and_interior_columns(lw_square):
    h = lw_square
    A = accumulate(h, 1, 0, 2).matrix.tocsc()
    fine = h.meshes[2]
    coarse = h.meshes[0]
    for e in range(coarse.n_edges):
        rows = A[:, e].indices[A[:, e].data != 0]
        on_bnd = fine.boundary_edges[rows].any()
        assert on_bnd == bool(coarse.boundary_edges[e])


def test_constant_fields_reproduced(disk):
    fine, _, S = build_level(disk, "loopwang")
    for vec in ((1.0, 0.0), (0.2, 0.9)):
        c = disk.edge_vectors()[:, :2] @ vec
        f = fine.edge_vectors()[:, :2] @ vec
        assert np.abs(S[1] @ c - f).max() <= 1e-12


def test_table_roundtrip(tmp_path):
    t = default_table()
    p = tmp_path / "stencils.txt"
    t.write(p)
    u = StencilTable.read(p)
    assert u.records.keys() == t.records.keys()
    assert all(np.allclose([float(w) for _, w in u.records[k]], [float(w) for _, w in t.records[k]])
               for k in t.records)
    with pytest.raises(UnsupportedConfiguration):
        u.get(0, "interior-even", 40)


def test_unknown_scheme(square4):
    with pytest.raises(ValueError):
        build_level(square4, "catmull")


@settings(max_examples=12, deadline=None)
@given(n=st.integers(1, 4), alt=st.booleans(), scheme=st.sampled_from(["loopwang", "whitney"]))
def test_commutation_property(n, alt, scheme):
    h = build_hierarchy(meshgen.structured_square(n, alternating=alt), 2, scheme, corners="auto")
    for k in (0, 1):
        for l in range(2):
            A = accumulate(h, k, l, 2).matrix
            B = accumulate(h, k + 1, l, 2).matrix
            R = build_D(h.meshes[2], k).astype(float) @ A - B @ build_D(h.meshes[l], k).astype(float)
            assert (abs(R).max() if R.nnz else 0.0) <= 1e-13
    for k in range(3):
        assert support_violations(h, k, 0, 2) == 0
