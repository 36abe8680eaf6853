"""Incidence matrices, commutation checks, Betti numbers and zero-trace restriction."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import sparse

from .errors import BoundaryLeak, LevelOrder, TooLarge
from .mesh import interior_mask
from .subdivision import SubdivisionMatrix, accumulate, is_dyadic


def build_D(mesh, k):
    """Exterior derivative as a signed incidence matrix (int8, csr).

    ``D0[e, a] = -1`` and ``D0[e, b] = +1`` for the canonical edge ``a < b``;
    ``D1[f, e]`` is +1 when the edge direction agrees with the
    counterclockwise traversal of ``f``.
    """
    if k == 0:
        nE = mesh.n_edges
        rows = np.repeat(np.arange(nE), 2)
        cols = mesh.edges.ravel()
        vals = np.tile(np.array([-1, 1], dtype=np.int8), nE)
        shape = (nE, mesh.n_vertices)
    elif k == 1:
        nF = mesh.n_faces
        rows = np.repeat(np.arange(nF), 3)
        cols = mesh.face_edges.ravel()
        vals = mesh.face_edge_signs.ravel().astype(np.int8)
        shape = (nF, mesh.n_edges)
    else:
        raise ValueError("k must be 0 or 1")
    return sparse.csr_matrix((vals, (rows, cols)), shape=shape)


def _max_abs(M):
    M = M.tocsr()
    M.eliminate_zeros()
    return float(abs(M).max()) if M.nnz else 0.0


def _exact_scaled(h, k, l1, l2):
    """Integer copy of A^k_{l1 -> l2} scaled by 2^p, or None if not dyadic."""
    total = 0
    A = sparse.identity(h.meshes[l1].count(k), dtype=np.int64, format="csr")
    for l in range(l1, l2):
        S = h.S[k][l]
        p = is_dyadic(S, max_power=32)
        if p is None:
            return None
        Si = sparse.csr_matrix(
            (np.round(np.ldexp(S.data, p)).astype(np.int64), S.indices, S.indptr), shape=S.shape
        )
        total += p
        if total > 60:
            return None
        A = (Si @ A).tocsr()
    return A, total


def check_commutation(h, k, l1, l2, exact="auto"):
    """Max-abs entry of ``D^k_{l2} A^k - A^{k+1} D^k_{l1}``.

    Parameters
    ----------
    exact : {"auto", True, False}
        Integer arithmetic on dyadic-scaled matrices. ``"auto"`` uses it when
        every per-level matrix involved is dyadic.

    Returns
    -------
    residual : float
    mode : str
        ``"exact"`` or ``"float"``.
    """
    if l1 > l2:
        raise LevelOrder(f"commutation check needs l1 <= l2, got {l1} > {l2}")
    if k not in (0, 1):
        raise ValueError("k must be 0 or 1")
    Dc = build_D(h.meshes[l1], k)
    Df = build_D(h.meshes[l2], k)
    if exact:
        a = _exact_scaled(h, k, l1, l2)
        b = _exact_scaled(h, k + 1, l1, l2)
        if a is not None and b is not None:
            (Ak, pk), (Ak1, pk1) = a, b
            p = max(pk, pk1)
            if p <= 60:
                lhs = (Df.astype(np.int64) @ Ak) * (1 << (p - pk))
                rhs = (Ak1 @ Dc.astype(np.int64)) * (1 << (p - pk1))
                R = (lhs - rhs).tocsr()
                R.eliminate_zeros()
                res = float(abs(R).max()) / 2.0**p if R.nnz else 0.0
                return res, "exact"
        if exact is True:
            raise ValueError("matrices are not dyadic; exact mode unavailable")
    Ak = accumulate(h, k, l1, l2).matrix
    Ak1 = accumulate(h, k + 1, l1, l2).matrix
    return _max_abs(Df @ Ak - Ak1 @ Dc), "float"


def dd_residual(mesh):
    """Largest entry of D1 D0 computed in integer arithmetic."""
    P = (build_D(mesh, 1).astype(np.int64) @ build_D(mesh, 0).astype(np.int64)).tocsr()
    P.eliminate_zeros()
    return int(abs(P).max()) if P.nnz else 0


def matrix_rank(M, max_size=5000):
    """Numerical rank via SVD with threshold ``1e-10 * largest column norm``."""
    M = M.toarray() if sparse.issparse(M) else np.asarray(M)
    if max(M.shape) > max_size:
        raise TooLarge(f"dense rank limited to {max_size} simplices, got {M.shape}")
    if M.size == 0:
        return 0
    s = np.linalg.svd(M.astype(float), compute_uv=False)
    tol = 1e-10 * max(np.linalg.norm(M, axis=0).max(), 1e-300)
    return int((s > tol).sum())


@dataclass
class ComplexReport:
    """Betti numbers and ranks for one mesh, plus optional residuals."""

    betti: tuple
    relative: bool
    rank_D0: int
    rank_D1: int
    counts: tuple
    residuals: dict = field(default_factory=dict)

    @property
    def euler(self):
        b0, b1, b2 = self.betti
        return b0 - b1 + b2

    def to_json(self):
        d = asdict(self)
        d["betti"] = list(self.betti)
        d["counts"] = list(self.counts)
        return json.dumps(d, indent=2, sort_keys=True)


def betti(mesh, relative=False, max_size=5000):
    """Betti numbers of the simplicial (or relative, boundary-deleted) complex."""
    D0 = build_D(mesh, 0)
    D1 = build_D(mesh, 1)
    if relative:
        iv, ie = interior_mask(mesh, 0), interior_mask(mesh, 1)
        D0 = D0[ie][:, iv]
        D1 = D1[:, ie]
    n0, n1, n2 = D0.shape[1], D0.shape[0], D1.shape[0]
    if max(n0, n1, n2) > max_size:
        raise TooLarge(f"Betti numbers limited to {max_size} simplices per degree")
    r0 = matrix_rank(D0, max_size) if n0 and n1 else 0
    r1 = matrix_rank(D1, max_size) if n1 and n2 else 0
    b = (n0 - r0, n1 - r1 - r0, n2 - r1)
    return ComplexReport(b, relative, r0, r1, (n0, n1, n2))


def restrict_zero_trace(A, h):
    """Drop columns of coarse boundary simplices and verify vanishing traces.

    Raises
    ------
    BoundaryLeak
        A retained column has a nonzero entry on a boundary fine simplex.
    """
    coarse = h.meshes[A.from_level]
    fine = h.meshes[A.to_level]
    keep = np.flatnonzero(interior_mask(coarse, A.k))
    M = A.matrix.tocsc()[:, keep].tocsr()
    bnd = ~interior_mask(fine, A.k)
    leak = M[bnd]
    leak.eliminate_zeros()
    if leak.nnz:
        raise BoundaryLeak(
            f"{leak.nnz} nonzero entries of interior columns on boundary rows (k={A.k})"
        )
    return SubdivisionMatrix(A.k, A.from_level, A.to_level, M, A.scheme)


def restricted_D(mesh, k):
    """Incidence matrix between interior simplices only."""
    D = build_D(mesh, k)
    return D[interior_mask(mesh, k + 1)][:, interior_mask(mesh, k)]
