import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subdivforms import meshgen
from subdivforms.errors import DegenerateFace, MeshError, NonManifold
from subdivforms.mesh import (adjacency, build, corner_vertices, face_two_ring,
                              interior_simplices, simplex_set)
from subdivforms.mesh_io import read_mesh, read_obj, write_off


def brute_two_ring(faces, simplex):
    """Faces sharing a vertex with a face that contains every vertex of ``simplex``."""
    simplex = set(simplex)
    inc = [i for i, f in enumerate(faces) if simplex <= set(f)]
    verts = {v for i in inc for v in faces[i]}
    return {i for i, f in enumerate(faces) if verts & set(f)}


def test_single_triangle():
    m = meshgen.single_triangle()
    assert m.n_edges == 3
    assert m.boundary_edges.all()
    assert m.boundary_vertices.all()


def test_two_triangle_square():
    m = meshgen.two_triangle_square()
    assert m.n_edges == 5
    assert (~m.boundary_edges).sum() == 1
    assert tuple(m.edges[~m.boundary_edges][0]) == (0, 2)


def test_edge_shared_by_three_faces():
    V = [[0, 0], [1, 0], [0, 1], [1, 1], [-1, -1]]
    F = [[0, 1, 2], [1, 3, 2], [0, 4, 1], [0, 1, 3]]
    with pytest.raises(NonManifold):
        build(np.array(V, float), F)


def test_invalid_input():
    with pytest.raises(DegenerateFace):
        build([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]])  # clockwise
    with pytest.raises(DegenerateFace):
        build([[0, 0], [1, 0], [0, 1]], [[0, 0, 1]])
    with pytest.raises(MeshError):
        build([[0, 0], [1, 0], [0, 1]], [[0, 1, 5]])


def test_canonical_edges(square4):
    E = square4.edges
    assert np.all(E[:, 0] < E[:, 1])
    assert len(np.unique(E, axis=0)) == len(E)
    assert np.all(np.diff(E[:, 0] * square4.n_vertices + E[:, 1]) > 0)
    assert square4.signed_areas().min() > 0


def test_adjacency_examples():
    t = meshgen.single_triangle()
    assert set(adjacency(t, 0, 2, simplex_set(2, [0]))) == {0, 1, 2}
    sq = meshgen.two_triangle_square()
    diag = int(np.flatnonzero(~sq.boundary_edges)[0])
    assert set(adjacency(sq, 2, 1, [diag])) == {0, 1}
    # vertex 1 lies only on face 0
    assert set(adjacency(sq, 2, 0, [1])) == {0}
    with pytest.raises(ValueError):
        adjacency(sq, 2, 0, simplex_set(1, [0]))


def test_face_two_ring_regular_vertex():
    m = meshgen.structured_square(5)
    faces = [tuple(f) for f in m.faces]
    v = 2 * 6 + 2  # interior grid vertex (2, 2)
    assert m.valence(v) == 6
    ring = set(face_two_ring(m, 0, v))
    assert ring == brute_two_ring(faces, [v])
    assert len(ring) == 24


def test_face_two_ring_regular_edge():
    m = meshgen.structured_square(5)
    faces = [tuple(f) for f in m.faces]
    val = m.valence()
    sizes = set()
    for e in np.flatnonzero(~m.boundary_edges):
        a, b = m.edges[e]
        neigh = set(m.faces[m.edge_faces[e]].ravel())
        ring_v = {int(x) for f in range(m.n_faces) if neigh & set(m.faces[f]) for x in m.faces[f]}
        if any(m.boundary_vertices[v] for v in ring_v):
            continue
        assert all(val[v] == 6 for v in neigh)
        ring = set(face_two_ring(m, 1, e))
        assert ring == brute_two_ring(faces, [a, b])
        sizes.add(len(ring))
    # independent brute-force count
    assert sizes == {16}


def test_face_two_ring_single_triangle():
    t = meshgen.single_triangle()
    for k in range(3):
        assert set(face_two_ring(t, k, 0)) == {0}


def test_interior_simplices():
    t = meshgen.single_triangle()
    assert len(interior_simplices(t, 0)) == 0
    assert len(interior_simplices(t, 1)) == 0
    assert set(interior_simplices(t, 2)) == {0}
    sq = meshgen.two_triangle_square()
    assert [tuple(sq.edges[e]) for e in interior_simplices(sq, 1)] == [(0, 2)]
    assert len(interior_simplices(meshgen.structured_square(4), 0)) == 9


def test_corners():
    sq = meshgen.structured_square(3)
    assert len(corner_vertices(sq, np.radians(30))) == 4
    assert len(corner_vertices(meshgen.regular_polygon(6), np.radians(30))) == 6


def test_off_roundtrip(tmp_path, disk):
    p = tmp_path / "d.off"
    write_off(disk, p)
    m = read_mesh(p)
    assert np.allclose(m.vertices, disk.vertices)
    assert np.array_equal(m.faces, disk.faces)


def test_obj_reader(tmp_path):
    p = tmp_path / "t.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2 3/3\n")
    m = read_obj(p)
    assert m.n_faces == 1 and m.dim == 2


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 6), m=st.integers(1, 6), alt=st.booleans())
def test_structured_square_properties(n, m, alt):
    mesh = meshgen.structured_square(n, m, alternating=alt)
    counts = np.bincount(mesh.face_edges.ravel(), minlength=mesh.n_edges)
    assert set(np.unique(counts)) <= {1, 2}
    assert np.array_equal(counts == 1, mesh.boundary_edges)
    bv = np.zeros(mesh.n_vertices, bool)
    bv[mesh.edges[mesh.boundary_edges].ravel()] = True
    assert np.array_equal(bv, mesh.boundary_vertices)
    assert mesh.euler_characteristic == 1
    assert len(interior_simplices(mesh, 0)) == (n - 1) * (m - 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_two_ring_matches_brute_force(seed):
    m = meshgen.structured_square(4, alternating=True)
    faces = [tuple(f) for f in m.faces]
    rng = np.random.default_rng(seed)
    k = int(rng.integers(3))
    i = int(rng.integers(m.count(k)))
    simplex = [i] if k == 0 else (list(m.edges[i]) if k == 1 else list(m.faces[i]))
    assert set(face_two_ring(m, k, i)) == brute_two_ring(faces, simplex)


def test_ring_order_counterclockwise(disk):
    for v in itertools.islice(np.flatnonzero(~disk.boundary_vertices), 10):
        verts, faces = disk.ring(v)
        for i, f in enumerate(faces):
            assert {v, verts[i], verts[(i + 1) % len(verts)]} == set(disk.faces[f])
