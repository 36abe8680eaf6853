import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from subdivforms import meshgen
from subdivforms.derham import build_D, matrix_rank
from subdivforms.errors import DegenerateElement, DimensionMismatch, EmptyInterior
from subdivforms.fem import (assemble_curlcurl, assemble_mass, constant_form, curlcurl_via_D,
                             element_mass_k1, eliminate_boundary, project_l2,
                             projection_error_direct, reference_form, triangle_quadrature,
                             unrefine, zero_trace_operator)
from subdivforms.mesh import TriMesh
from subdivforms.subdivision import accumulate, build_hierarchy


def whitney_midpoint_mass(P, face):
    """Edge-midpoint quadrature of the Whitney 1-form products on one triangle."""
    P = np.asarray(P, float)
    T = np.vstack([P.T, np.ones(3)])
    grads = np.linalg.inv(T)[:, :2]  # row i: gradient of lambda_i
    area = 0.5 * abs(np.linalg.det(T))
    local = [(0, 1), (1, 2), (2, 0)]
    mids = [np.array(b) for b in ([.5, .5, 0], [0, .5, .5], [.5, 0, .5])]
    M = np.zeros((3, 3))
    for lam in mids:
        psi = []
        for a, b in local:
            ga, gb = face[a], face[b]
            if ga > gb:  # canonical orientation low -> high vertex id
                a, b = b, a
            psi.append(lam[a] * grads[b] - lam[b] * grads[a])
        psi = np.array(psi)
        M += area / 3 * psi @ psi.T
    return M


def test_mass_k0_unit_triangle():
    t = meshgen.single_triangle()
    M = assemble_mass(t, 0).matrix.toarray()
    expect = 0.5 / 12 * np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]])
    assert np.allclose(M, expect, atol=1e-16, rtol=0)


def test_mass_k2_diagonal(disk):
    M = assemble_mass(disk, 2).matrix
    assert (M - sparse.diags(M.diagonal())).nnz == 0
    assert np.allclose(M.diagonal(), 1 / disk.areas(), rtol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6), st.permutations([0, 1, 2]))
def test_mass_k1_matches_midpoint_rule(coords, ids):
    P = np.array(coords).reshape(3, 2)
    area2 = (P[1, 0] - P[0, 0]) * (P[2, 1] - P[0, 1]) - (P[1, 1] - P[0, 1]) * (P[2, 0] - P[0, 0])
    if area2 <= 1e-2:
        return
    face = list(ids)
    V = np.zeros((3, 2))
    V[face] = P
    m = TriMesh(V, [face])
    local = element_mass_k1(m)[0]
    expect = whitney_midpoint_mass(P, face)
    assert np.abs(local - expect).max() <= 1e-15 * max(1.0, np.abs(expect).max()) * 10


@pytest.mark.parametrize("make", [meshgen.single_triangle, meshgen.two_triangle_square,
                                  lambda: meshgen.structured_square(4), meshgen.irregular_disk,
                                  meshgen.annulus])
def test_curlcurl_identity(make):
    m = make()
    C = assemble_curlcurl(m).matrix
    assert abs(C - curlcurl_via_D(m)).max() <= 1e-14 * max(1.0, abs(C).max())
    x = np.random.default_rng(0).standard_normal(m.n_vertices)
    assert np.abs(C @ (build_D(m, 0) @ x)).max() <= 1e-13 * max(1.0, abs(C).max())


def test_curlcurl_rank_single_triangle():
    assert matrix_rank(assemble_curlcurl(meshgen.single_triangle()).matrix) == 1


def test_degenerate_element():
    m = TriMesh([[0, 0], [1, 0], [2, 1e-20]], [[0, 1, 2]], validate=False)
    with pytest.raises(DegenerateElement):
        assemble_mass(m, 0)


def test_unrefine_identity(lw_square):
    X = assemble_mass(lw_square.meshes[2], 1, level=2)
    assert unrefine(X, accumulate(lw_square, 1, 2, 2)) is X
    with pytest.raises(DimensionMismatch):
        unrefine(X, accumulate(lw_square, 0, 2, 2))


def test_unrefine_preserves_structure(lw_square):
    h = lw_square
    M = assemble_mass(h.meshes[3], 1, level=3)
    C = assemble_curlcurl(h.meshes[3], level=3)
    Mb = unrefine(M, accumulate(h, 1, 1, 3)).matrix
    Cb = unrefine(C, accumulate(h, 1, 1, 3)).matrix
    assert abs(Mb - Mb.T).max() <= 1e-15 * abs(Mb).max()
    assert np.linalg.eigvalsh(Mb.toarray()).min() > 0
    assert np.linalg.eigvalsh(Cb.toarray()).min() > -1e-12 * abs(Cb).max()


def test_density_increases(lw_square):
    h = lw_square
    M = assemble_mass(h.meshes[3], 1, level=3)
    dens = lambda X: X.matrix.nnz / X.matrix.shape[0] ** 2  # noqa: E731
    nnz_row = lambda X: X.matrix.nnz / X.matrix.shape[0]  # noqa: E731
    M1 = unrefine(M, accumulate(h, 1, 1, 3))
    assert dens(M1) > dens(M)
    assert nnz_row(M1) > nnz_row(M)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_whitney_unrefinement_identity(k, wh_square):
    h = wh_square
    for l in range(3):
        A = accumulate(h, k, l, 3)
        ML = assemble_mass(h.meshes[3], k, level=3)
        Ml = assemble_mass(h.meshes[l], k, level=l).matrix
        assert abs(unrefine(ML, A).matrix - Ml).max() <= 1e-13 * abs(Ml).max()


def test_eliminate_two_triangle_square():
    sq = meshgen.two_triangle_square()
    M = eliminate_boundary(assemble_mass(sq, 1), ~sq.boundary_edges)
    C = eliminate_boundary(assemble_curlcurl(sq), ~sq.boundary_edges)
    assert M.shape == C.shape == (1, 1)
    with pytest.raises(EmptyInterior):
        eliminate_boundary(assemble_mass(meshgen.single_triangle(), 1), np.zeros(3, bool))


def test_eliminate_k2_identity(disk):
    X = assemble_mass(disk, 2)
    Y = eliminate_boundary(X, np.ones(disk.n_faces, bool))
    assert (Y.matrix != X.matrix).nnz == 0


@pytest.mark.parametrize("kind", ["mass", "curlcurl"])
def test_elimination_routes_agree(kind):
    h = build_hierarchy(meshgen.structured_square(3), 3)
    m = h.meshes[3]
    X = assemble_mass(m, 1, 3) if kind == "mass" else assemble_curlcurl(m, 3)
    a = zero_trace_operator(h, X, 1, 3, route="rows").matrix
    b = zero_trace_operator(h, X, 1, 3, route="restrict").matrix
    assert abs(a - b).max() <= 1e-14 * abs(a).max()


def test_quadrature_exactness():
    bary, w = triangle_quadrature(6)
    assert np.isclose(w.sum(), 1.0)
    # mean of lambda_0^6 over a triangle is 2 * 6! / 8!
    assert np.isclose((w * bary[:, 0] ** 6).sum(), 2 * 720 / 40320, rtol=1e-12)


def test_constant_projection(lw_square, wh_square):
    _, e0 = project_l2(lw_square, 0, 1, 3, constant_form(0, 1.0))
    _, e1 = project_l2(lw_square, 1, 1, 3, constant_form(1, [0.3, -2.0]))
    assert e0 <= 1e-12
    assert e1 <= 1e-10
    # constant densities need quartered areas, i.e. midpoint geometry
    _, e2 = project_l2(wh_square, 2, 1, 3, constant_form(2, 1.0))
    assert e2 <= 1e-12


def test_smoothing_improves_projection():
    h = build_hierarchy(meshgen.structured_square(1), 6)
    f = reference_form(0)
    _, e33 = project_l2(h, 0, 3, 3, f)
    _, e36 = project_l2(h, 0, 3, 6, f)
    assert e33 > e36


def test_split_error_matches_direct(lw_square):
    f = reference_form(1)
    _, e = project_l2(lw_square, 1, 1, 3, f)
    assert np.isclose(e, projection_error_direct(lw_square, 1, 1, 3, f), rtol=1e-8)
