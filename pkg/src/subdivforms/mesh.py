"""Indexed triangle meshes with canonical edge orientation and adjacency queries.

A :class:`TriMesh` is built once from vertex coordinates and counterclockwise
faces; every derived table (edges, orientation signs, boundary flags, vertex
rings) is computed at construction and stored in read-only arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import DegenerateFace, MeshError, NonManifold

# local edge j of a face runs from corner j to corner (j + 1) % 3
LOCAL_EDGES = np.array([[0, 1], [1, 2], [2, 0]])


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SimplexSet:
    """A set of simplex ids of one form degree on one mesh."""

    k: int
    ids: frozenset

    def __len__(self):
        return len(self.ids)

    def __iter__(self):
        return iter(sorted(self.ids))

    def __contains__(self, i):
        return i in self.ids

    def as_array(self):
        return np.array(sorted(self.ids), dtype=np.int64)


def simplex_set(k, ids):
    return SimplexSet(int(k), frozenset(int(i) for i in ids))


class TriMesh:
    """Immutable simplicial 2-complex.

    Parameters
    ----------
    vertices : array_like, shape (V, d)
        Vertex coordinates, ``d`` in {2, 3}.
    faces : array_like, shape (F, 3)
        Vertex ids of each face, counterclockwise when ``d == 2``.

    Attributes
    ----------
    edges : ndarray, shape (E, 2)
        Canonical edges ``(a, b)`` with ``a < b``, sorted lexicographically.
    face_edges : ndarray, shape (F, 3)
        Edge id of local edge ``j`` (corner ``j`` to corner ``j+1``).
    face_edge_signs : ndarray, shape (F, 3)
        +1 where the face traversal agrees with the canonical edge direction.
    edge_faces : ndarray, shape (E, 2)
        Incident faces, ``-1`` padded; column 0 holds the face whose
        traversal agrees with the edge direction when there is one.
    boundary_edges, boundary_vertices : ndarray of bool
    """

    def __init__(self, vertices, faces, *, validate=True):
        V = np.asarray(vertices, dtype=float)
        F = np.asarray(faces, dtype=np.int64)
        if V.ndim != 2 or V.shape[1] not in (2, 3):
            raise MeshError("vertex coordinates must have shape (V, 2) or (V, 3)")
        if F.ndim != 2 or F.shape[1] != 3 or len(F) == 0:
            raise MeshError("faces must be a non-empty (F, 3) array")
        if F.min() < 0 or F.max() >= len(V):
            raise MeshError("face references an invalid vertex id")
        if np.any((F[:, 0] == F[:, 1]) | (F[:, 1] == F[:, 2]) | (F[:, 2] == F[:, 0])):
            raise DegenerateFace("face with a repeated vertex id")

        self.vertices = _frozen(V)
        self.faces = _frozen(F)
        self.dim = V.shape[1]

        if validate and self.dim == 2:
            area = self.signed_areas()
            scale = np.ptp(V, axis=0).max() if len(V) > 1 else 1.0
            bad = np.flatnonzero(area <= 1e-14 * scale**2)
            if len(bad):
                raise DegenerateFace(
                    f"{len(bad)} face(s) with non-positive area, first is face {bad[0]}"
                )

        half = F[:, LOCAL_EDGES].reshape(-1, 2)
        lo = half.min(axis=1)
        hi = half.max(axis=1)
        edges, inverse, counts = np.unique(
            np.stack([lo, hi], axis=1), axis=0, return_inverse=True, return_counts=True
        )
        inverse = inverse.ravel()
        if np.any(counts > 2):
            e = edges[np.argmax(counts > 2)]
            raise NonManifold(f"edge ({e[0]}, {e[1]}) is shared by more than two faces")
        self.edges = _frozen(edges)
        self.face_edges = _frozen(inverse.reshape(-1, 3))
        signs = np.where(half[:, 0] < half[:, 1], 1, -1).reshape(-1, 3)
        self.face_edge_signs = _frozen(signs)

        ef = -np.ones((len(edges), 2), dtype=np.int64)
        flat_face = np.repeat(np.arange(len(F)), 3)
        flat_sign = signs.ravel()
        pos = flat_sign > 0
        slot0 = inverse[pos]
        if len(np.unique(slot0)) != len(slot0):
            raise MeshError("inconsistent face orientation")
        ef[slot0, 0] = flat_face[pos]
        neg_e = inverse[~pos]
        neg_f = flat_face[~pos]
        if len(np.unique(neg_e)) != len(neg_e):
            raise MeshError("inconsistent face orientation")
        # an edge seen only with negative sign keeps its face in column 0
        empty = ef[neg_e, 0] < 0
        ef[neg_e[empty], 0] = neg_f[empty]
        ef[neg_e[~empty], 1] = neg_f[~empty]
        self.edge_faces = _frozen(ef)

        bnd_e = ef[:, 1] < 0
        self.boundary_edges = _frozen(bnd_e)
        bv = np.zeros(len(V), dtype=bool)
        bv[edges[bnd_e].ravel()] = True
        self.boundary_vertices = _frozen(bv)

        self._build_rings()

    # ------------------------------------------------------------------ sizes
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_faces(self):
        return len(self.faces)

    def count(self, k):
        return (self.n_vertices, self.n_edges, self.n_faces)[k]

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    # --------------------------------------------------------------- geometry
    def signed_areas(self):
        P = self.vertices[self.faces]
        if self.dim == 2:
            u = P[:, 1] - P[:, 0]
            v = P[:, 2] - P[:, 0]
            return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        return self.areas()

    def areas(self):
        P = self.vertices[self.faces]
        u = P[:, 1] - P[:, 0]
        v = P[:, 2] - P[:, 0]
        if self.dim == 2:
            return 0.5 * np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        return 0.5 * np.linalg.norm(np.cross(u, v), axis=1)

    def edge_vectors(self):
        return self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]

    def bbox_diameter(self):
        return float(np.linalg.norm(np.ptp(self.vertices, axis=0)))

    # ------------------------------------------------------------------ rings
    def _build_rings(self):
        F = self.faces
        nV = self.n_vertices
        # around corner a of face (a, b, c) the ring steps b -> c
        center = F.ravel()
        frm = F[:, [1, 2, 0]].ravel()
        to = F[:, [2, 0, 1]].ravel()
        fid = np.repeat(np.arange(len(F)), 3)
        order = np.argsort(center, kind="stable")
        center, frm, to, fid = center[order], frm[order], to[order], fid[order]
        starts = np.searchsorted(center, np.arange(nV + 1))

        ptr = np.zeros(nV + 1, dtype=np.int64)
        nbrs, fcs = [], []
        for v in range(nV):
            s, e = starts[v], starts[v + 1]
            if s == e:
                ptr[v + 1] = ptr[v]
                continue
            step = {int(a): (int(b), int(f)) for a, b, f in zip(frm[s:e], to[s:e], fid[s:e])}
            if len(step) != e - s:
                raise NonManifold(f"vertex {v} has a non-manifold fan")
            if self.boundary_vertices[v]:
                targets = set(b for b, _ in step.values())
                starts_v = [a for a in step if a not in targets]
                if len(starts_v) != 1:
                    raise NonManifold(f"boundary vertex {v} is not a single fan")
                cur = starts_v[0]
            else:
                cur = int(frm[s])
            ring, ring_f = [cur], []
            first = cur
            while cur in step:
                nxt, f = step[cur]
                ring_f.append(f)
                if nxt == first:
                    break
                ring.append(nxt)
                cur = nxt
                if len(ring) > e - s + 1:
                    raise NonManifold(f"vertex {v} ring does not close")
            if len(ring_f) != e - s:
                raise NonManifold(f"vertex {v} is shared by several fans")
            if self.boundary_vertices[v]:
                ring_f.append(-1)
            nbrs.extend(ring)
            fcs.extend(ring_f)
            ptr[v + 1] = ptr[v] + len(ring)
        self.ring_ptr = _frozen(ptr)
        self.ring_vertices = _frozen(np.array(nbrs, dtype=np.int64))
        self.ring_faces = _frozen(np.array(fcs, dtype=np.int64))

    def ring(self, v):
        """Counterclockwise neighbours of ``v`` and the faces between them.

        ``faces[i]`` spans neighbours ``i`` and ``i + 1``. For a boundary
        vertex the ring is an open fan starting on a boundary edge and the
        last face slot is ``-1``.
        """
        s, e = self.ring_ptr[v], self.ring_ptr[v + 1]
        return self.ring_vertices[s:e], self.ring_faces[s:e]

    def valence(self, v=None):
        val = np.diff(self.ring_ptr)
        return val if v is None else int(val[v])

    def edge_id(self, a, b):
        """Canonical id of the edge joining ``a`` and ``b`` (order-free)."""
        return self.edge_lookup[(min(a, b), max(a, b))]

    @property
    def edge_lookup(self):
        try:
            return self._edge_lookup
        except AttributeError:
            self._edge_lookup = {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}
            return self._edge_lookup

    def edge_ids(self, a, b):
        """Vectorised canonical edge lookup for arrays of endpoints."""
        a = np.asarray(a)
        b = np.asarray(b)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        key = lo * self.n_vertices + hi
        ekey = self.edges[:, 0] * self.n_vertices + self.edges[:, 1]
        pos = np.searchsorted(ekey, key)
        pos = np.minimum(pos, len(ekey) - 1)
        if np.any(ekey[pos] != key):
            raise KeyError("edge not present in mesh")
        return pos

    # ------------------------------------------------------------- incidence
    def incidence(self, p, q):
        """Boolean sparse matrix (N_p x N_q) of adjacency between degrees."""
        key = (p, q)
        cache = self.__dict__.setdefault("_incidence", {})
        if key in cache:
            return cache[key]
        if p == q:
            m = sparse.identity(self.count(p), dtype=np.int8, format="csr")
        elif p > q:
            m = self.incidence(q, p).T.tocsr()
        else:
            nF = self.n_faces
            if (p, q) == (0, 1):
                rows = self.edges.T.ravel()
                cols = np.tile(np.arange(self.n_edges), 2)
                shape = (self.n_vertices, self.n_edges)
            elif (p, q) == (0, 2):
                rows = self.faces.T.ravel()
                cols = np.tile(np.arange(nF), 3)
                shape = (self.n_vertices, nF)
            else:
                rows = self.face_edges.T.ravel()
                cols = np.tile(np.arange(nF), 3)
                shape = (self.n_edges, nF)
            m = sparse.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=shape)
        cache[key] = m
        return m

    def __repr__(self):
        return (
            f"TriMesh(V={self.n_vertices}, E={self.n_edges}, F={self.n_faces}, "
            f"d={self.dim}, boundary_edges={int(self.boundary_edges.sum())})"
        )


def build(vertex_coords, faces):
    """Build and validate a :class:`TriMesh`."""
    return TriMesh(vertex_coords, faces)


def adjacency(mesh, p, q, simplices):
    """Union of the ``p``-simplices adjacent to each ``q``-simplex in the input.

    ``simplices`` may be a :class:`SimplexSet` of degree ``q`` or an iterable
    of ids.
    """
    if p not in (0, 1, 2) or q not in (0, 1, 2):
        raise ValueError("form degrees must be in {0, 1, 2}")
    if isinstance(simplices, SimplexSet):
        if simplices.k != q:
            raise ValueError(f"input set has degree {simplices.k}, expected {q}")
        ids = simplices.as_array()
    else:
        ids = np.fromiter((int(i) for i in simplices), dtype=np.int64)
    n = mesh.count(q)
    if len(ids) and (ids.min() < 0 or ids.max() >= n):
        raise IndexError("simplex id out of range")
    sel = np.zeros(n, dtype=np.int8)
    sel[ids] = 1
    hit = mesh.incidence(p, q) @ sel
    return simplex_set(p, np.flatnonzero(hit))


def face_two_ring(mesh, k, simplex_id):
    """Faces sharing a vertex with any face incident to the given simplex."""
    faces = adjacency(mesh, 2, k, [simplex_id])
    verts = adjacency(mesh, 0, 2, faces)
    return adjacency(mesh, 2, 0, verts)


def interior_simplices(mesh, k):
    """Non-boundary vertices (k=0), non-boundary edges (k=1) or all faces (k=2)."""
    if k == 0:
        ids = np.flatnonzero(~mesh.boundary_vertices)
    elif k == 1:
        ids = np.flatnonzero(~mesh.boundary_edges)
    elif k == 2:
        ids = np.arange(mesh.n_faces)
    else:
        raise ValueError("k must be 0, 1 or 2")
    return simplex_set(k, ids)


def interior_mask(mesh, k):
    if k == 0:
        return ~mesh.boundary_vertices
    if k == 1:
        return ~mesh.boundary_edges
    return np.ones(mesh.n_faces, dtype=bool)


def boundary_loops(mesh):
    """Boundary edge cycles as lists of vertex ids."""
    be = mesh.edges[mesh.boundary_edges]
    nxt = {}
    # follow boundary edges in face traversal direction
    ef = mesh.edge_faces[mesh.boundary_edges, 0]
    for (a, b), f in zip(be, ef):
        tri = list(mesh.faces[f])
        i = tri.index(a)
        if tri[(i + 1) % 3] == b:
            nxt[int(a)] = int(b)
        else:
            nxt[int(b)] = int(a)
    loops, seen = [], set()
    for start in sorted(nxt):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        cur = nxt[start]
        while cur != start:
            loop.append(cur)
            seen.add(cur)
            cur = nxt[cur]
        loops.append(loop)
    return loops


def corner_vertices(mesh, threshold):
    """Boundary vertices whose turning angle deviates from pi by more than ``threshold``."""
    bv = np.flatnonzero(mesh.boundary_vertices)
    if len(bv) == 0:
        return bv
    first = mesh.ring_vertices[mesh.ring_ptr[bv]]
    last = mesh.ring_vertices[mesh.ring_ptr[bv + 1] - 1]
    p = mesh.vertices[first] - mesh.vertices[bv]
    q = mesh.vertices[last] - mesh.vertices[bv]
    cosang = np.einsum("ij,ij->i", p, q) / (np.linalg.norm(p, axis=1) * np.linalg.norm(q, axis=1))
    angle = np.arccos(np.clip(cosang, -1.0, 1.0))
    return bv[np.abs(np.pi - angle) > threshold]
