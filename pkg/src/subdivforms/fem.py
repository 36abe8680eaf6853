"""Lowest-order FEEC assembly, unrefinement and L2 projection.

Bases: CG1 hats (k=0), Whitney/NED1 edge functions with the canonical edge
orientation (k=1) and unit-integral densities ``chi_f / |f|`` (k=2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .derham import build_D
from .errors import DegenerateElement, DimensionMismatch, EmptyInterior, SolverFailure
from .mesh import LOCAL_EDGES, interior_mask
from .subdivision import accumulate


@dataclass(frozen=True)
class AssembledOperator:
    """Sparse symmetric FE matrix with its provenance.

    Attributes
    ----------
    kind : str
        ``"mass"`` or ``"curlcurl"``.
    k : int
        Form degree of the trial/test space.
    level : int
        Level at which the coefficients live.
    space : str
        ``"feec"``, ``"subdiv"`` or ``"zerotrace"`` variants thereof.
    dofs : ndarray
        Simplex ids (at ``level``) of the rows/columns.
    """

    kind: str
    k: int
    level: int
    matrix: sparse.csr_matrix
    space: str = "feec"
    dofs: np.ndarray | None = None
    fine_level: int | None = None

    @property
    def shape(self):
        return self.matrix.shape


# ------------------------------------------------------------------ geometry


def _check_mesh(mesh):
    if mesh.dim != 2:
        raise DegenerateElement("assembly is implemented for planar meshes (d = 2)")
    area = mesh.areas()
    tol = 1e-14 * mesh.bbox_diameter() ** 2
    bad = np.flatnonzero(area < tol)
    if len(bad):
        raise DegenerateElement(f"{len(bad)} element(s) with area below {tol:.3g}")
    return area


def barycentric_gradients(mesh):
    """Gradients of the three barycentric coordinates per face, shape (F, 3, 2)."""
    P = mesh.vertices[mesh.faces]
    J = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]], axis=2)  # columns are edge vectors
    Jinv = np.linalg.inv(J)  # rows are grad(lambda_1), grad(lambda_2)
    g1, g2 = Jinv[:, 0, :], Jinv[:, 1, :]
    return np.stack([-(g1 + g2), g1, g2], axis=1)


def _lambda_mass(area):
    base = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    return area[:, None, None] * base


def _scatter(idx, local, n):
    rows = np.repeat(idx, idx.shape[1], axis=1).ravel()
    cols = np.tile(idx, (1, idx.shape[1])).ravel()
    M = sparse.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    M.sum_duplicates()
    return M


def element_mass_k1(mesh, area=None, grads=None):
    """Local NED1 mass matrices (F, 3, 3) in the canonical edge orientation."""
    area = mesh.areas() if area is None else area
    G = barycentric_gradients(mesh) if grads is None else grads
    Ml = _lambda_mass(area)
    GG = np.einsum("fik,fjk->fij", G, G)
    a, b = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
    A, B = a[:, None], b[:, None]
    C, D = a[None, :], b[None, :]
    fi = np.arange(len(area))[:, None, None]
    M = (
        Ml[fi, A, C] * GG[fi, B, D]
        - Ml[fi, A, D] * GG[fi, B, C]
        - Ml[fi, B, C] * GG[fi, A, D]
        + Ml[fi, B, D] * GG[fi, A, C]
    )
    s = mesh.face_edge_signs.astype(float)
    return M * s[:, :, None] * s[:, None, :]


def assemble_mass(mesh, k, level=0):
    """Galerkin mass matrix of the lowest-order FEEC space of degree ``k``."""
    area = _check_mesh(mesh)
    if k == 0:
        M = _scatter(mesh.faces, _lambda_mass(area), mesh.n_vertices)
    elif k == 1:
        M = _scatter(mesh.face_edges, element_mass_k1(mesh, area), mesh.n_edges)
    elif k == 2:
        M = sparse.diags(1.0 / area, format="csr")
    else:
        raise ValueError("k must be 0, 1 or 2")
    return AssembledOperator("mass", k, level, M, "feec", np.arange(mesh.count(k)))


def assemble_curlcurl(mesh, level=0):
    """Curl-curl matrix of NED1: element matrix ``s s^T / |f|``."""
    area = _check_mesh(mesh)
    s = mesh.face_edge_signs.astype(float)
    local = s[:, :, None] * s[:, None, :] / area[:, None, None]
    C = _scatter(mesh.face_edges, local, mesh.n_edges)
    return AssembledOperator("curlcurl", 1, level, C, "feec", np.arange(mesh.n_edges))


def curlcurl_via_D(mesh):
    """``D1^T M2 D1``, the incidence-matrix form of the curl-curl matrix."""
    D1 = build_D(mesh, 1).astype(float)
    return (D1.T @ assemble_mass(mesh, 2).matrix @ D1).tocsr()


# --------------------------------------------------------------- unrefinement


def unrefine(X, A):
    """Pull ``X`` back through the accumulated matrix: ``A^T X A``.

    Curl-curl operators are pulled back with the 1-form matrix; their
    derivative is carried by the 2-form matrix through commutation.
    """
    expected = 1 if X.kind == "curlcurl" else X.k
    if A.k != expected:
        raise DimensionMismatch(f"{X.kind} of degree {X.k} needs a k={expected} subdivision matrix")
    M = A.matrix
    if M.shape[0] != X.matrix.shape[0]:
        raise DimensionMismatch(f"operator size {X.matrix.shape[0]} != A rows {M.shape[0]}")
    if A.from_level == A.to_level and (M != sparse.identity(M.shape[0])).nnz == 0:
        return X
    Y = (M.T @ X.matrix @ M).tocsr()
    Y.sum_duplicates()
    space = "subdiv" if X.space == "feec" else X.space
    return AssembledOperator(X.kind, X.k, A.from_level, Y, space,
                             np.arange(M.shape[1]), A.to_level)


def eliminate_boundary(X, interior):
    """Square submatrix on the interior dofs (boolean mask or index array)."""
    interior = np.asarray(interior)
    idx = np.flatnonzero(interior) if interior.dtype == bool else interior
    if len(idx) == 0:
        raise EmptyInterior(f"no interior dofs for {X.kind} (k={X.k})")
    M = X.matrix[idx][:, idx].tocsr()
    dofs = X.dofs[idx] if X.dofs is not None else idx
    return AssembledOperator(X.kind, X.k, X.level, M, X.space + "-zerotrace", dofs, X.fine_level)


def zero_trace_operator(h, X, l, L, route="rows"):
    """Unrefined zero-trace operator by row/column deletion or by restricted A."""
    from .derham import restrict_zero_trace

    k = 1 if X.kind == "curlcurl" else X.k
    A = accumulate(h, k, l, L)
    mask = interior_mask(h.meshes[l], k)
    if route == "rows":
        return eliminate_boundary(unrefine(X, A), mask)
    Ar = restrict_zero_trace(A, h)
    Xi = eliminate_boundary(X, interior_mask(h.meshes[L], k))
    Y = (Ar.matrix[interior_mask(h.meshes[L], k)].T @ Xi.matrix
         @ Ar.matrix[interior_mask(h.meshes[L], k)]).tocsr()
    return AssembledOperator(X.kind, X.k, l, Y, "subdiv-zerotrace", np.flatnonzero(mask), L)


# ----------------------------------------------------------------- quadrature

_DUNAVANT6 = (
    (0.116786275726379, (0.501426509658179, 0.249286745170910, 0.249286745170910)),
    (0.050844906370207, (0.873821971016996, 0.063089014491502, 0.063089014491502)),
    (0.082851075618374, (0.053145049844817, 0.310352451033784, 0.636502499121399)),
)


def _orbit(p):
    a, b, c = p
    pts = {(a, b, c), (b, c, a), (c, a, b), (a, c, b), (c, b, a), (b, a, c)}
    return sorted(pts)


def triangle_quadrature(degree=6):
    """Symmetric rule on the reference triangle.

    Returns
    -------
    bary : ndarray (Q, 3)
        Barycentric coordinates of the points.
    weights : ndarray (Q,)
        Weights summing to 1 (multiply by the element area).
    """
    if degree <= 1:
        return np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])
    if degree == 2:
        bary = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        return bary, np.full(3, 1 / 3)
    if degree <= 6:
        bary, w = [], []
        for wt, p in _DUNAVANT6:
            for q in _orbit(p):
                bary.append(q)
                w.append(wt)
        return np.array(bary), np.array(w)
    raise ValueError("quadrature degree above 6 is not available")


@dataclass(frozen=True)
class AnalyticForm:
    """Continuous k-form given by a vectorised evaluator on (N, 2) points."""

    k: int
    evaluator: object
    degree: int = 6
    name: str = ""

    def __call__(self, x):
        return self.evaluator(x)


def reference_form(k, symmetric=False):
    """Reference forms of the projection study.

    ``omega0 = omega2 = sin(4 pi x1) + exp(2 x2)``; the 1-form proxy is
    ``[sin(2 pi x1) cos(2 pi x1), -cos(2 pi x1) sin(2 pi x2)]``. With
    ``symmetric=True`` the first component uses ``cos(2 pi x2)`` instead.
    """
    if k in (0, 2):
        return AnalyticForm(k, lambda x: np.sin(4 * np.pi * x[:, 0]) + np.exp(2 * x[:, 1]),
                            name=f"omega{k}")
    if k == 1:
        tp = 2 * np.pi

        def w1(x):
            c = np.cos(tp * x[:, 1]) if symmetric else np.cos(tp * x[:, 0])
            return np.column_stack(
                [np.sin(tp * x[:, 0]) * c, -np.cos(tp * x[:, 0]) * np.sin(tp * x[:, 1])]
            )

        return AnalyticForm(1, w1, name="omega1-sym" if symmetric else "omega1")
    raise ValueError("k must be 0, 1 or 2")


def constant_form(k, value=1.0):
    if k == 1:
        v = np.asarray(value, dtype=float)
        return AnalyticForm(1, lambda x: np.tile(v, (len(x), 1)), name="const1")
    return AnalyticForm(k, lambda x: np.full(len(x), float(value)), name=f"const{k}")


def _quad_points(mesh, degree):
    bary, w = triangle_quadrature(degree)
    P = mesh.vertices[mesh.faces]
    X = np.einsum("qi,fid->fqd", bary, P)
    return bary, w, X


def load_vector(mesh, f, degree=6):
    """``b_j = integral of f . psi_j`` and ``integral of |f|^2`` on ``mesh``."""
    area = _check_mesh(mesh)
    bary, w, X = _quad_points(mesh, degree)
    nF, nQ = X.shape[:2]
    vals = f(X.reshape(-1, 2))
    if f.k == 1:
        vals = vals.reshape(nF, nQ, 2)
        sq = (vals**2).sum(axis=2)
    else:
        vals = vals.reshape(nF, nQ)
        sq = vals**2
    norm2 = float(np.sum(area * (sq @ w)))
    if f.k == 0:
        local = area[:, None] * np.einsum("fq,q,qi->fi", vals, w, bary)
        b = np.bincount(mesh.faces.ravel(), local.ravel(), mesh.n_vertices)
    elif f.k == 1:
        G = barycentric_gradients(mesh)
        a, c = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
        # W_j(x) = lambda_a grad lambda_b - lambda_b grad lambda_a
        fg_b = np.einsum("fqd,fjd->fqj", vals, G[:, c])
        fg_a = np.einsum("fqd,fjd->fqj", vals, G[:, a])
        integrand = bary[None, :, a] * fg_b - bary[None, :, c] * fg_a
        local = area[:, None] * np.einsum("fqj,q->fj", integrand, w)
        local *= mesh.face_edge_signs
        b = np.bincount(mesh.face_edges.ravel(), local.ravel(), mesh.n_edges)
    else:
        b = vals @ w
    return b, norm2


def evaluate_feec(mesh, k, coeffs, degree=6):
    """Values of a level-L FEEC form at the quadrature points, shape (F, Q[, 2])."""
    bary, w, X = _quad_points(mesh, degree)
    if k == 0:
        return np.einsum("fi,qi->fq", coeffs[mesh.faces], bary)
    if k == 1:
        G = barycentric_gradients(mesh)
        a, c = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
        cj = coeffs[mesh.face_edges] * mesh.face_edge_signs
        return (np.einsum("fj,qj,fjd->fqd", cj, bary[:, a], G[:, c])
                - np.einsum("fj,qj,fjd->fqd", cj, bary[:, c], G[:, a]))
    if k == 2:
        return np.repeat((coeffs / mesh.areas())[:, None], len(w), axis=1)
    raise ValueError("k must be 0, 1 or 2")


def feec_residual_norm2(mesh, k, coeffs, f, degree=6):
    """Quadrature value of ``|| f - sum coeffs_j psi_j ||^2`` on ``mesh``."""
    bary, w, X = _quad_points(mesh, degree)
    nF, nQ = X.shape[:2]
    fv = f(X.reshape(-1, 2)).reshape((nF, nQ, 2) if k == 1 else (nF, nQ))
    d = fv - evaluate_feec(mesh, k, coeffs, degree)
    sq = (d**2).sum(axis=2) if k == 1 else d**2
    return float(np.sum(mesh.areas() * (sq @ w)))


class _FeecCache:
    """Per-(mesh, k) mass matrix, load vector and level-L projection."""

    def __init__(self):
        self.data = {}

    def get(self, mesh, k, f, degree, solver):
        key = (id(mesh), k, f.name, degree)
        if key not in self.data:
            M = assemble_mass(mesh, k).matrix
            b, norm2 = load_vector(mesh, f, degree)
            p = solver(M, b)
            tail = feec_residual_norm2(mesh, k, p, f, degree)
            self.data[key] = (M, b, p, tail, mesh)
        return self.data[key][:4]


_FEEC_CACHE = _FeecCache()


def project_l2(h, k, l, L, f, degree=6, solver=None, cache=None):
    """L2 projection of ``f`` into the subdivision space between levels l and L.

    The squared error ``c^T Mbar c - 2 c^T A^T b + ||f||^2`` is evaluated in
    the algebraically identical split form
    ``(A c - p)^T M (A c - p) + ||f - p||^2`` with ``p`` the level-L FEEC
    projection, which avoids cancellation when the error is tiny.

    Returns
    -------
    coeffs : ndarray
        Coefficients at level ``l``.
    error : float
        L2 error on level ``L``.
    """
    from .solvers import solve_spd

    solver = solver or solve_spd
    cache = _FEEC_CACHE if cache is None else cache
    mesh = h.meshes[L]
    A = accumulate(h, k, l, L).matrix
    M, b, p, tail = cache.get(mesh, k, f, degree, solver)
    Mbar = (A.T @ M @ A).tocsr()
    rhs = A.T @ b
    c = solver(Mbar, rhs)
    d = A @ c - p
    e2 = float(d @ (M @ d)) + tail
    if e2 < -1e-10 * max(abs(tail), 1.0):
        raise SolverFailure(f"negative squared projection error {e2:.3e}")
    return c, float(np.sqrt(max(e2, 0.0)))


def projection_error_direct(h, k, l, L, f, degree=6):
    """Unsplit formula ``sqrt(c^T Mbar c - 2 c^T A^T b + ||f||^2)`` (cross-check)."""
    from .solvers import solve_spd

    mesh = h.meshes[L]
    A = accumulate(h, k, l, L).matrix
    Mbar = (A.T @ assemble_mass(mesh, k).matrix @ A).tocsr()
    b, norm2 = load_vector(mesh, f, degree)
    rhs = A.T @ b
    c = solve_spd(Mbar, rhs)
    return float(np.sqrt(max(c @ (Mbar @ c) - 2 * c @ rhs + norm2, 0.0)))
