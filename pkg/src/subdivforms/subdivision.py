"""Quadrisection, Loop averaging and k-form subdivision matrices.

Two schemes are provided:

``whitney``
    Coarse Whitney forms written in the fine Whitney basis under midpoint
    refinement. Fine meshes keep the coarse geometry.
``loopwang``
    Loop vertex rules for 0-forms. One-forms are the Whitney rows plus
    ``D0 X``, where each row of ``X`` is a coarse 1-chain whose boundary is
    the Loop rule minus the midpoint rule, plus ``W D1`` for a co-exact part.
    Two-forms are ``E S2_whitney`` for a symmetric exchange ``E`` between
    neighbouring fine faces; every exchange is the boundary of a short fine
    path, and those paths make up ``W``. Both commutation identities hold
    by construction and regular interior stencils are dyadic. Fine meshes
    carry Loop positions.

Two-form coefficients refer to the unit-integral density basis
``chi_f / |f|``, so incidence matrices stay in {-1, 0, 1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import sparse

from .errors import LevelOrder
from .mesh import TriMesh, adjacency, corner_vertices, simplex_set
from .stencils import StencilTable, default_table

CORNER_ANGLE = np.pi / 6

SCHEMES = ("loopwang", "whitney")


def _check_scheme(scheme):
    s = scheme.lower().replace("_", "").replace("-", "")
    if s not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    return s


@dataclass(frozen=True)
class RefinementMap:
    """Parent/child bookkeeping of one quadrisection step.

    Attributes
    ----------
    face_children : ndarray (F, 4)
        Corner children 0..2 (child ``i`` keeps coarse corner ``i``) and the
        center child 3.
    vertex_kind, vertex_parent : ndarray (V_fine,)
        Kind 0 = even (parent is a coarse vertex), 1 = odd (parent is a
        coarse edge).
    edge_kind, edge_parent : ndarray (E_fine,)
        Kind 0 = half of a coarse edge, 1 = interior to a coarse face.
    half_children : ndarray (E, 2)
        Fine edge at coarse endpoint ``edges[e, s]``.
    interior_children : ndarray (F, 3)
        Fine edge joining the midpoints of local edges ``j`` and ``j + 1``.
    """

    n_coarse: tuple
    face_children: np.ndarray
    vertex_kind: np.ndarray
    vertex_parent: np.ndarray
    edge_kind: np.ndarray
    edge_parent: np.ndarray
    half_children: np.ndarray
    interior_children: np.ndarray


def fine_faces(coarse):
    """Quadrisected face list; odd vertex of edge ``e`` gets id ``V + e``."""
    F = coarse.faces
    m = coarse.n_vertices + coarse.face_edges
    v0, v1, v2 = F[:, 0], F[:, 1], F[:, 2]
    m0, m1, m2 = m[:, 0], m[:, 1], m[:, 2]
    children = np.stack(
        [
            np.column_stack([v0, m0, m2]),
            np.column_stack([v1, m1, m0]),
            np.column_stack([v2, m2, m1]),
            np.column_stack([m0, m1, m2]),
        ],
        axis=1,
    )
    return children.reshape(-1, 3)


def _refinement_map(coarse, fine):
    nV, nE, nF = coarse.n_vertices, coarse.n_edges, coarse.n_faces
    vk = np.r_[np.zeros(nV, dtype=np.int8), np.ones(nE, dtype=np.int8)]
    vp = np.r_[np.arange(nV), np.arange(nE)]
    E = coarse.edges
    odd = nV + np.arange(nE)
    half = np.column_stack([fine.edge_ids(E[:, 0], odd), fine.edge_ids(E[:, 1], odd)])
    m = nV + coarse.face_edges
    inner = np.column_stack([fine.edge_ids(m[:, j], m[:, (j + 1) % 3]) for j in range(3)])
    ek = np.empty(fine.n_edges, dtype=np.int8)
    ep = np.empty(fine.n_edges, dtype=np.int64)
    ek[half.ravel()] = 0
    ep[half.ravel()] = np.repeat(np.arange(nE), 2)
    ek[inner.ravel()] = 1
    ep[inner.ravel()] = np.repeat(np.arange(nF), 3)
    arrs = [np.arange(4 * nF).reshape(nF, 4), vk, vp, ek, ep, half, inner]
    for a in arrs:
        a.setflags(write=False)
    return RefinementMap((nV, nE, nF), *arrs)


def refine_topology(coarse, positions=None):
    """Quadrisect ``coarse``.

    Parameters
    ----------
    coarse : TriMesh
    positions : ndarray, optional
        Fine vertex positions; defaults to edge midpoints.

    Returns
    -------
    fine : TriMesh
    rmap : RefinementMap
    """
    if positions is None:
        positions = np.vstack(
            [coarse.vertices, coarse.vertices[coarse.edges].mean(axis=1)]
        )
    fine = TriMesh(positions, fine_faces(coarse))
    return fine, _refinement_map(coarse, fine)


# --------------------------------------------------------------------------
# local frames


def _ring_index(mesh):
    """Position of each neighbour in its center's ring, keyed by v * V + u."""
    centers = np.repeat(np.arange(mesh.n_vertices), np.diff(mesh.ring_ptr))
    key = centers * mesh.n_vertices + mesh.ring_vertices
    order = np.argsort(key)
    pos = np.arange(len(key)) - mesh.ring_ptr[centers]
    return key[order], pos[order]


def _lookup_ring_pos(mesh, rindex, v, u):
    keys, pos = rindex
    q = v * mesh.n_vertices + u
    i = np.searchsorted(keys, q)
    return pos[i]


def _corner_mask(mesh, corners):
    if corners is None:
        return np.zeros(mesh.n_vertices, dtype=bool)
    corners = np.asarray(corners, dtype=bool)
    if corners.shape != (mesh.n_vertices,):
        raise ValueError("corner mask must have one entry per vertex")
    if np.any(corners & ~mesh.boundary_vertices):
        raise ValueError("only boundary vertices can be tagged as corners")
    return corners


def _far_vertex(mesh, f, a, b):
    return mesh.faces[f].sum(axis=1) - a - b


class _Triplets:
    """Accumulates (row, directed coarse pair, weight) and converts to edge ids."""

    def __init__(self):
        self.rows, self.p, self.q, self.w = [], [], [], []

    def add(self, rows, p, q, w):
        rows = np.asarray(rows)
        if len(rows) == 0 or w == 0:
            return
        self.rows.append(rows)
        self.p.append(np.asarray(p))
        self.q.append(np.asarray(q))
        self.w.append(np.full(len(rows), float(w)))

    def matrix(self, coarse, n_rows, row_sign=None):
        rows = np.concatenate(self.rows)
        p = np.concatenate(self.p)
        q = np.concatenate(self.q)
        w = np.concatenate(self.w)
        cols = coarse.edge_ids(p, q)
        w = w * np.where(p < q, 1.0, -1.0)
        if row_sign is not None:
            w = w * row_sign[rows]
        S = sparse.csr_matrix((w, (rows, cols)), shape=(n_rows, coarse.n_edges))
        S.sum_duplicates()
        S.eliminate_zeros()
        return S


# --------------------------------------------------------------------------
# 0-forms


def _S0_whitney(coarse):
    nV, nE = coarse.n_vertices, coarse.n_edges
    rows = np.r_[np.arange(nV), nV + np.arange(nE), nV + np.arange(nE)]
    cols = np.r_[np.arange(nV), coarse.edges[:, 0], coarse.edges[:, 1]]
    vals = np.r_[np.ones(nV), np.full(2 * nE, 0.5)]
    return sparse.csr_matrix((vals, (rows, cols)), shape=(nV + nE, nV))


def _S0_loop(coarse, table, corners=None):
    nV, nE = coarse.n_vertices, coarse.n_edges
    corners = _corner_mask(coarse, corners)
    R, C, W = [], [], []

    def add(r, c, w):
        if w != 0 and len(r):
            R.append(np.asarray(r))
            C.append(np.asarray(c))
            W.append(np.full(len(r), float(w)))

    bv = coarse.boundary_vertices
    val = coarse.valence()
    ptr, ring = coarse.ring_ptr, coarse.ring_vertices
    for n in np.unique(val[~bv]):
        vs = np.flatnonzero(~bv & (val == n))
        wts = table.weights(0, "interior-even", int(n))
        add(vs, vs, wts["self"])
        for i in range(n):
            add(vs, ring[ptr[vs] + i], wts[f"u{i}"])
    vs = np.flatnonzero(corners)
    if len(vs):
        add(vs, vs, table.weights(0, "corner-even")["self"])
    vs = np.flatnonzero(bv & ~corners)
    if len(vs):
        wts = table.weights(0, "boundary-even")
        add(vs, vs, wts["self"])
        add(vs, ring[ptr[vs]], wts["next"])
        add(vs, ring[ptr[vs + 1] - 1], wts["prev"])

    E, ef = coarse.edges, coarse.edge_faces
    be = coarse.boundary_edges
    es = np.flatnonzero(be)
    wts = table.weights(0, "boundary-odd")
    add(nV + es, E[es, 0], wts["end0"])
    add(nV + es, E[es, 1], wts["end1"])
    es = np.flatnonzero(~be)
    if len(es):
        wts = table.weights(0, "interior-odd")
        a, b = E[es, 0], E[es, 1]
        add(nV + es, a, wts["end0"])
        add(nV + es, b, wts["end1"])
        add(nV + es, _far_vertex(coarse, ef[es, 0], a, b), wts["far0"])
        add(nV + es, _far_vertex(coarse, ef[es, 1], a, b), wts["far1"])
    S = sparse.csr_matrix(
        (np.concatenate(W), (np.concatenate(R), np.concatenate(C))), shape=(nV + nE, nV)
    )
    S.sum_duplicates()
    S.eliminate_zeros()
    return S


def loop_positions(coarse, rmap=None, table=None):
    """Fine vertex coordinates under Loop averaging."""
    table = table or default_table()
    return _S0_loop(coarse, table) @ coarse.vertices


# --------------------------------------------------------------------------
# 1-forms


def _half_edge_frame(coarse):
    """Arrays describing every (coarse edge, endpoint) pair."""
    E = coarse.edges
    e = np.repeat(np.arange(coarse.n_edges), 2)
    s = np.tile([0, 1], coarse.n_edges)
    v = E[e, s]
    w = E[e, 1 - s]
    return e, s, v, w


def _S1_whitney(coarse, rmap, n_fine):
    t = _Triplets()
    e, s, v, w = _half_edge_frame(coarse)
    t.add(rmap.half_children[e, s], v, w, 0.5)
    F = coarse.faces
    for j in range(3):
        a, b, c = F[:, j], F[:, (j + 1) % 3], F[:, (j + 2) % 3]
        rows = rmap.interior_children[:, j]
        t.add(rows, a, b, 0.25)
        t.add(rows, b, c, 0.25)
        t.add(rows, a, c, 0.25)
    return t.matrix(coarse, n_fine, _odd_odd_sign(coarse, rmap, n_fine))


def _odd_odd_sign(coarse, rmap, n_fine):
    """Sign flipping rules stated for m_ab -> m_bc into canonical fine orientation."""
    sign = np.ones(n_fine)
    fe = coarse.face_edges
    for j in range(3):
        rows = rmap.interior_children[:, j]
        sign[rows] = np.where(fe[:, j] < fe[:, (j + 1) % 3], 1.0, -1.0)
    return sign


def _potential(coarse, n_rows, table, corners=None):
    """Vertex potentials ``X`` with ``X D0 = S0_loop - S0_whitney``.

    Row ``i`` is a coarse 1-chain whose boundary is the difference between
    the Loop and the midpoint rule of fine vertex ``i``: weighted spokes
    ``v -> u`` for even vertices, and the four edges joining the ends of the
    parent edge to its opposite vertices for interior odd vertices. Tagged
    corners and boundary odd vertices need none.
    """
    t = _Triplets()
    corners = _corner_mask(coarse, corners)
    nV = coarse.n_vertices
    bv = coarse.boundary_vertices
    val = coarse.valence()
    ptr, ring = coarse.ring_ptr, coarse.ring_vertices
    for n in np.unique(val[~bv]):
        vs = np.flatnonzero(~bv & (val == n))
        wts = table.weights(1, "even-potential", int(n))
        for i in range(n):
            t.add(vs, vs, ring[ptr[vs] + i], wts[f"spoke{i}"])
    vs = np.flatnonzero(bv & ~corners)
    if len(vs):
        wts = table.weights(1, "boundary-even-potential")
        t.add(vs, vs, ring[ptr[vs]], wts["next"])
        t.add(vs, vs, ring[ptr[vs + 1] - 1], wts["prev"])
    es = np.flatnonzero(~coarse.boundary_edges)
    if len(es):
        wts = table.weights(1, "interior-odd-potential")
        E, ef = coarse.edges, coarse.edge_faces
        a, b = E[es, 0], E[es, 1]
        d0 = _far_vertex(coarse, ef[es, 0], a, b)
        d1 = _far_vertex(coarse, ef[es, 1], a, b)
        for role, p, q in (("end0-far0", a, d0), ("end1-far0", b, d0),
                           ("end0-far1", a, d1), ("end1-far1", b, d1)):
            t.add(nV + es, p, q, wts[role])
    return t.matrix(coarse, n_rows)


# --------------------------------------------------------------------------
# 2-forms


def _S2_whitney(coarse):
    nF = coarse.n_faces
    return sparse.csr_matrix(
        (np.full(4 * nF, 0.25), (np.arange(4 * nF), np.repeat(np.arange(nF), 4))),
        shape=(4 * nF, nF),
    )


def _corner_child(coarse, f, v):
    return 4 * f + np.argmax(coarse.faces[f] == np.asarray(v)[:, None], axis=1)


@dataclass
class _Exchanges:
    """Pairs of fine faces ``(f, g)`` with weight ``t`` and fine paths from g to f.

    A path step is ``(pair, face entered, fine edge crossed, multiplicity)``.
    """

    f: np.ndarray
    g: np.ndarray
    t: np.ndarray
    step_pair: np.ndarray
    step_face: np.ndarray
    step_edge: np.ndarray
    step_mult: np.ndarray


def _exchanges(coarse, fine, table):
    nV = coarse.n_vertices
    pf, pg, pt = [], [], []
    steps = []  # (pair ids, entered faces, edges, mult)
    count = 0

    def new_pairs(f, g, t):
        nonlocal count
        ids = count + np.arange(len(f))
        count += len(f)
        pf.append(f)
        pg.append(g)
        pt.append(np.full(len(f), float(t)))
        return ids

    def odd(a, b):
        return nV + coarse.edge_ids(a, b)

    # corner children around each vertex, by fan distance
    fan = {int(r[1:]): float(w) for r, w in table.get(2, "corner-fan") if w != 0}
    bv = coarse.boundary_vertices
    val = coarse.valence()
    ptr, ring, rf = coarse.ring_ptr, coarse.ring_vertices, coarse.ring_faces
    for closed in (True, False):
        sel = ~bv if closed else bv
        for n in np.unique(val[sel]):
            vs = np.flatnonzero(sel & (val == n))
            nf = n if closed else n - 1
            child = np.column_stack([_corner_child(coarse, rf[ptr[vs] + s], vs) for s in range(nf)])
            for d, t in fan.items():
                for i in range(nf):
                    j = i + d
                    if closed:
                        if d > nf // 2 or (2 * d == nf and i >= d):
                            continue
                        routes = [(1, d)] if 2 * d < nf else [(1, d), (-1, nf - d)]
                    else:
                        if j >= nf:
                            continue
                        routes = [(1, d)]
                    ids = new_pairs(child[:, j % nf], child[:, i], t)
                    mult = 1.0 / len(routes)
                    for direction, length in routes:
                        s = i
                        for _ in range(length):
                            s2 = (s + direction) % nf
                            # slots s and s + 1 share the fine edge v -> m(v, u_{s+1})
                            u = ring[ptr[vs] + (s2 if direction == 1 else s)]
                            steps.append((ids, child[:, s2], fine.edge_ids(vs, odd(vs, u)), mult))
                            s = s2
    # center children across interior coarse edges, half via each end
    t = float(dict(table.get(2, "center-exchange"))["edge"])
    es = np.flatnonzero(~coarse.boundary_edges)
    if len(es) and t:
        E, ef = coarse.edges, coarse.edge_faces
        F, G = ef[es, 0], ef[es, 1]
        ids = new_pairs(4 * F + 3, 4 * G + 3, t)
        a0, b0 = E[es, 0], E[es, 1]
        cF, cG = _far_vertex(coarse, F, a0, b0), _far_vertex(coarse, G, a0, b0)
        mab = odd(a0, b0)
        for a in (a0, b0):
            kG, kF = _corner_child(coarse, G, a), _corner_child(coarse, F, a)
            steps.append((ids, kG, fine.edge_ids(mab, odd(a, cG)), 0.5))
            steps.append((ids, kF, fine.edge_ids(a, mab), 0.5))
            steps.append((ids, 4 * F + 3, fine.edge_ids(mab, odd(a, cF)), 0.5))
    cat = lambda xs: np.concatenate(xs) if xs else np.zeros(0)  # noqa: E731
    return _Exchanges(
        cat(pf).astype(np.int64), cat(pg).astype(np.int64), cat(pt),
        cat([s[0] for s in steps]).astype(np.int64), cat([s[1] for s in steps]).astype(np.int64),
        cat([s[2] for s in steps]).astype(np.int64),
        cat([np.full(len(s[0]), s[3]) for s in steps]),
    )


def _exchange_matrix(x, n):
    """``E = I - sum t (e_f - e_g)(e_f - e_g)^T``: symmetric, unit row and column sums."""
    r = np.r_[x.f, x.g, x.f, x.g]
    c = np.r_[x.f, x.g, x.g, x.f]
    w = np.r_[-x.t, -x.t, x.t, x.t]
    E = sparse.identity(n, format="csr") + sparse.csr_matrix((w, (r, c)), shape=(n, n))
    E.sum_duplicates()
    E.eliminate_zeros()
    return E.tocsr()


def _exchange_flux(coarse, fine, x):
    """``W`` with ``D1_fine W = (E - I) S2_whitney`` built from the exchange paths."""
    from .derham import build_D

    D = build_D(fine, 1).tocsr()
    sgn = np.asarray(D[x.step_face, x.step_edge]).ravel()
    val = x.step_mult * sgn * x.t[x.step_pair] / 4.0
    par_f, par_g = x.f[x.step_pair] // 4, x.g[x.step_pair] // 4
    W = sparse.csr_matrix(
        (np.r_[-val, val], (np.r_[x.step_edge, x.step_edge], np.r_[par_f, par_g])),
        shape=(fine.n_edges, coarse.n_faces),
    )
    W.sum_duplicates()
    W.eliminate_zeros()
    return W


def _loopwang_forms(coarse, fine, rmap, table, corners=None):
    """One- and two-form matrices of the Loop/Wang scheme.

    ``S1 = S1_whitney + D0_fine X + W D1_coarse`` and ``S2 = E S2_whitney``,
    so ``S1 D0 = D0 S0_loop`` and ``D1 S1 = S2 D1`` hold by construction.
    """
    from .derham import build_D

    X = _potential(coarse, fine.n_vertices, table, corners)
    x = _exchanges(coarse, fine, table)
    S2 = (_exchange_matrix(x, fine.n_faces) @ _S2_whitney(coarse)).tocsr()
    S1 = (
        _S1_whitney(coarse, rmap, fine.n_edges)
        + build_D(fine, 0).astype(float) @ X
        + _exchange_flux(coarse, fine, x) @ build_D(coarse, 1).astype(float)
    ).tocsr()
    S1.sum_duplicates()
    S1.data[np.abs(S1.data) < 1e-15] = 0.0
    S1.eliminate_zeros()
    S2.eliminate_zeros()
    return S1, S2


# --------------------------------------------------------------------------
# public construction


@dataclass(frozen=True)
class SubdivisionMatrix:
    """Sparse k-form subdivision (or accumulated) matrix between two levels."""

    k: int
    from_level: int
    to_level: int
    matrix: sparse.csr_matrix
    scheme: str
    exact_scale: int | None = None

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, other):
        if isinstance(other, SubdivisionMatrix):
            if other.to_level != self.from_level or other.k != self.k:
                raise ValueError("incompatible subdivision matrices")
            return SubdivisionMatrix(
                self.k, other.from_level, self.to_level,
                (self.matrix @ other.matrix).tocsr(), self.scheme,
            )
        return self.matrix @ other


def _check_geometry(scheme, geometry):
    if geometry is None:
        return "loop" if scheme == "loopwang" else "midpoint"
    if geometry not in ("loop", "midpoint"):
        raise ValueError("geometry must be 'loop' or 'midpoint'")
    return geometry


def build_level(coarse, scheme="loopwang", table=None, geometry=None, corners=None):
    """Refine once and build S^0, S^1, S^2.

    Parameters
    ----------
    geometry : {"loop", "midpoint"}, optional
        Placement of the fine vertices. Defaults to Loop averaging for the
        ``loopwang`` scheme and to edge midpoints for ``whitney``. The
        matrices only depend on connectivity.
    corners : bool array, optional
        Boundary vertices kept fixed by the Loop vertex rules (tagged
        corners). Ignored by the Whitney scheme.

    Returns
    -------
    fine : TriMesh
    rmap : RefinementMap
    S : list of three csr matrices
    """
    scheme = _check_scheme(scheme)
    geometry = _check_geometry(scheme, geometry)
    table = table or default_table()
    S0 = _S0_whitney(coarse) if scheme == "whitney" else _S0_loop(coarse, table, corners)
    if (geometry == "loop") == (scheme == "loopwang"):
        G = S0
    elif geometry == "midpoint":
        G = _S0_whitney(coarse)
    else:
        G = _S0_loop(coarse, table, corners)
    fine, rmap = refine_topology(coarse, G @ coarse.vertices)
    if scheme == "whitney":
        S1 = _S1_whitney(coarse, rmap, fine.n_edges)
        S2 = _S2_whitney(coarse)
    else:
        S1, S2 = _loopwang_forms(coarse, fine, rmap, table, corners)
    return fine, rmap, [S0.tocsr(), S1.tocsr(), S2.tocsr()]


def build_S(k, coarse, rmap=None, scheme="loopwang", table=None):
    """Per-level k-form subdivision matrix of ``coarse`` (levels 0 -> 1)."""
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    _, _, S = build_level(coarse, scheme, table)
    return SubdivisionMatrix(k, 0, 1, S[k], _check_scheme(scheme))


@dataclass
class Hierarchy:
    """Meshes, refinement maps and per-level subdivision matrices.

    ``S[k][l]`` maps level ``l`` coefficients to level ``l + 1``.
    """

    meshes: list
    maps: list
    S: list
    scheme: str
    table: StencilTable | None = None
    geometry: str = "loop"
    corners: list = field(default_factory=list, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def top(self):
        return len(self.meshes) - 1

    def mesh(self, level):
        return self.meshes[level]

    def __len__(self):
        return len(self.meshes)


def initial_corners(mesh, corners):
    """Level-0 corner mask from ``None``, ``"auto"`` or vertex ids / mask."""
    if corners is None:
        return np.zeros(mesh.n_vertices, dtype=bool)
    if isinstance(corners, str):
        if corners != "auto":
            raise ValueError("corners must be None, 'auto', ids or a mask")
        ids = corner_vertices(mesh, CORNER_ANGLE)
    else:
        arr = np.asarray(corners)
        if arr.dtype == bool:
            return _corner_mask(mesh, arr)
        ids = arr.astype(np.int64)
    mask = np.zeros(mesh.n_vertices, dtype=bool)
    mask[ids] = True
    return _corner_mask(mesh, mask)


def build_hierarchy(mesh0, L, scheme="loopwang", table=None, geometry=None, corners=None):
    """Refine ``mesh0`` ``L`` times with the given scheme (see :func:`build_level`).

    ``corners="auto"`` tags boundary vertices whose turning angle deviates
    from a straight line by more than 30 degrees; tags follow the even
    descendants on every level.
    """
    scheme = _check_scheme(scheme)
    geometry = _check_geometry(scheme, geometry)
    if scheme == "loopwang" and table is None:
        table = default_table()
    mask = initial_corners(mesh0, corners)
    meshes, maps, S, masks = [mesh0], [], [[], [], []], [mask]
    for _ in range(L):
        fine, rmap, Sl = build_level(meshes[-1], scheme, table, geometry, masks[-1])
        meshes.append(fine)
        maps.append(rmap)
        masks.append(np.r_[masks[-1], np.zeros(meshes[-2].n_edges, dtype=bool)])
        for k in range(3):
            S[k].append(Sl[k])
    return Hierarchy(meshes, maps, S, scheme, table, geometry, masks)


def accumulate(h, k, l, L):
    """Accumulated matrix ``A_{l -> L} = S_{L-1} ... S_l`` (identity when l == L)."""
    if l > L:
        raise LevelOrder(f"accumulation needs l <= L, got l={l}, L={L}")
    if L > h.top or l < 0:
        raise LevelOrder(f"levels must lie in [0, {h.top}]")
    key = (k, l, L)
    if key not in h._cache:
        if l == L:
            A = sparse.identity(h.meshes[l].count(k), format="csr")
        else:
            A = h.S[k][L - 1] @ accumulate(h, k, l, L - 1).matrix
        h._cache[key] = SubdivisionMatrix(k, l, L, A.tocsr(), h.scheme)
    return h._cache[key]


def refine_faces(h, faces, l, L):
    """Fine faces at level L descending from a set of level-l faces."""
    ids = np.asarray(sorted(faces), dtype=np.int64)
    for _ in range(l, L):
        ids = (4 * ids[:, None] + np.arange(4)).ravel()
    return ids


def column_support(A, h, i):
    """Fine faces carrying a nonzero coefficient of column ``i`` of ``A``."""
    col = A.matrix.tocsc()[:, i]
    rows = col.indices[col.data != 0]
    fine = h.meshes[A.to_level]
    return adjacency(fine, 2, A.k, rows) if len(rows) else simplex_set(2, [])


def is_dyadic(M, max_power=62):
    """Smallest p with 2^p * M integral, or None when no p <= max_power works."""
    data = M.data if sparse.issparse(M) else np.asarray(M).ravel()
    for p in range(0, max_power + 1, 2):
        scaled = np.ldexp(data, p)
        if np.all(scaled == np.round(scaled)) and np.all(np.abs(scaled) < 2.0**62):
            return p
    return None


def to_fraction_weights(M):
    """Entries of ``M`` as exact fractions (floats are dyadic rationals)."""
    return [Fraction(x) for x in np.asarray(M.data)]


def support_violations(h, k, l, L, rings=2):
    """Number of (column, fine face) pairs outside the refined face two-ring.

    ``rings=1`` tests against the faces incident to the simplex instead,
    which subdivision bases generally violate (used as a detector check).

    The support of column ``i`` of ``A_{l -> L}`` is the set of level-L faces
    incident to a row with a nonzero entry. Each such face must descend from
    a level-l face in the face two-ring of simplex ``i``.
    """
    A = accumulate(h, k, l, L).matrix
    coarse, fine = h.meshes[l], h.meshes[L]
    Ik = fine.incidence(2, k) if k < 2 else sparse.identity(fine.count(2), format="csr")
    B = (abs(Ik).astype(np.float64) @ abs(A)).tocsr()
    anc = np.arange(fine.count(2)) >> (2 * (L - l))
    P = sparse.csr_matrix(
        (np.ones(fine.count(2)), (anc, np.arange(fine.count(2)))),
        shape=(coarse.count(2), fine.count(2)),
    )
    hit = (P @ B).tocsr()
    hit.eliminate_zeros()
    Ick = coarse.incidence(2, k) if k < 2 else sparse.identity(coarse.count(2), format="csr")
    ring = abs(Ick).astype(np.float64)
    if rings == 2:
        ring = abs(coarse.incidence(2, 0)) @ abs(coarse.incidence(0, 2)) @ ring
    ring = sparse.csr_matrix(ring)
    ring.data[:] = 1.0
    hit.data[:] = 1.0
    outside = hit - hit.multiply(ring)
    outside.eliminate_zeros()
    return int(outside.nnz)
