"""Initial-mesh fitting so that Loop refinement approximates a given domain.

The reference mesh ``T_FE`` is refined with midpoint (Whitney) subdivision to
level ``L``; its vertex positions ``b`` are the targets. The coarse positions
``x`` minimise ``E(x) = (A x - b)^T W (A x - b)`` per axis, where ``A`` is the
accumulated Loop vertex subdivision matrix and ``W`` a diagonal weight that
favours boundary and corner vertices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .errors import SingularNormalMatrix
from .mesh import TriMesh, corner_vertices
from .stencils import default_table
from .subdivision import _S0_loop, _S0_whitney, refine_topology

CORNER, BOUNDARY, EVEN_INTERIOR, ODD_INTERIOR = 0, 1, 2, 3
CLASS_NAMES = ("corner", "boundary", "even-interior", "odd-interior")


@dataclass(frozen=True)
class FitConfig:
    """Weights per vertex class and the corner detection threshold.

    Parameters
    ----------
    weights : tuple of 4 floats
        ``(corner, boundary, even-interior, odd-interior)``.
    corner_angle_threshold : float
        A boundary vertex is a corner when its turning angle deviates from
        ``pi`` by more than this (radians).
    L : int
        Number of refinement levels the fit targets.
    dim : int
        Number of coordinate axes fitted.
    """

    weights: tuple = (10.0, 1.0, 1.0, 0.01)
    corner_angle_threshold: float = math.radians(30.0)
    L: int = 3
    dim: int = 2

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if len(w) != 4 or min(w) < 0 or max(w) <= 0:
            raise ValueError("weights must be 4 nonnegative numbers, not all zero")
        if not 0 < self.corner_angle_threshold < math.pi:
            raise ValueError("corner_angle_threshold must lie in (0, pi)")
        if self.L < 0:
            raise ValueError("L must be nonnegative")
        object.__setattr__(self, "weights", w)


@dataclass
class FitResult:
    """Fitted coarse coordinates with per-axis diagnostics."""

    positions: np.ndarray
    objective: list
    residuals: list
    rhs_norms: list
    class_counts: dict = field(default_factory=dict)

    def relative_residuals(self):
        return [r / max(n, 1e-300) for r, n in zip(self.residuals, self.rhs_norms)]

    def to_json(self):
        return json.dumps(
            {
                "positions": self.positions.tolist(),
                "objective": [float(e) for e in self.objective],
                "residuals": [float(r) for r in self.residuals],
                "relative_residuals": [float(r) for r in self.relative_residuals()],
                "class_counts": self.class_counts,
            },
            indent=2, sort_keys=True,
        )


@dataclass
class VertexChain:
    """Vertex-only refinement chain: meshes, provenance maps and S^0 matrices."""

    meshes: list
    maps: list
    S0: list

    def accumulated(self):
        A = sparse.identity(self.meshes[0].count(0), format="csr")
        for S in self.S0:
            A = (S @ A).tocsr()
        return A


def refine_vertices(mesh, L, rule="whitney", table=None):
    """Refine ``mesh`` ``L`` times building only the vertex subdivision matrices.

    ``rule="whitney"`` places new vertices at edge midpoints, ``rule="loop"``
    applies the Loop averaging rules.
    """
    if rule not in ("whitney", "loop"):
        raise ValueError("rule must be 'whitney' or 'loop'")
    table = table or (default_table() if rule == "loop" else None)
    meshes, maps, S = [mesh], [], []
    for _ in range(L):
        c = meshes[-1]
        S0 = _S0_whitney(c) if rule == "whitney" else _S0_loop(c, table)
        fine, rmap = refine_topology(c, S0 @ c.vertices)
        meshes.append(fine)
        maps.append(rmap)
        S.append(S0)
    return VertexChain(meshes, maps, S)


def _even_origin(chain):
    """Level-0 ancestor of every finest vertex, or -1 for vertices created later."""
    origin = np.arange(chain.meshes[0].count(0))
    for rmap in chain.maps:
        new = np.full(len(rmap.vertex_kind), -1, dtype=np.int64)
        even = rmap.vertex_kind == 0
        new[even] = origin[rmap.vertex_parent[even]]
        origin = new
    return origin


def classify_vertices(chain, cfg):
    """Class per finest vertex of a Whitney chain (see ``CLASS_NAMES``).

    Corners are detected on the level-0 mesh and follow their even
    descendants; every other boundary vertex is ``boundary``; interior
    vertices are ``even-interior`` when they descend from a level-0 vertex.
    """
    fine = chain.meshes[-1]
    origin = _even_origin(chain)
    corners = np.zeros(chain.meshes[0].count(0), dtype=bool)
    corners[corner_vertices(chain.meshes[0], cfg.corner_angle_threshold)] = True
    cls = np.full(fine.count(0), ODD_INTERIOR, dtype=np.int8)
    cls[origin >= 0] = EVEN_INTERIOR
    cls[fine.boundary_vertices] = BOUNDARY
    is_corner = np.zeros(fine.count(0), dtype=bool)
    has = origin >= 0
    is_corner[has] = corners[origin[has]]
    cls[is_corner] = CORNER
    return cls


def _components(mesh):
    F = mesh.faces
    n = mesh.count(0)
    rows = np.concatenate([F[:, 0], F[:, 1], F[:, 2]])
    cols = np.concatenate([F[:, 1], F[:, 2], F[:, 0]])
    G = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return sparse.csgraph.connected_components(G, directed=False)[1]


def solve_normal_equations(A, w, B):
    """Solve ``(A^T W A) X = A^T W B`` column-wise with one refinement step.

    Returns
    -------
    X, objective, residual norms, rhs norms
    """
    W = sparse.diags(w)
    N = (A.T @ W @ A).tocsc()
    R = A.T @ (w[:, None] * B)
    if np.any(N.diagonal() <= 0):
        raise SingularNormalMatrix("a coarse vertex has no weighted fine vertex in its support")
    try:
        lu = spla.splu(N)
    except RuntimeError as exc:
        raise SingularNormalMatrix(str(exc)) from exc
    X = lu.solve(R)
    X = X + lu.solve(R - N @ X)
    if not np.all(np.isfinite(X)):
        raise SingularNormalMatrix("normal matrix is numerically singular")
    res = np.linalg.norm(N @ X - R, axis=0)
    rn = np.linalg.norm(R, axis=0)
    E = (w[:, None] * (A @ X - B) ** 2).sum(axis=0)
    return X, E, res, rn


def fit_initial_mesh(T_FE, L=None, cfg=None, A_loop=None, table=None):
    """Fit coarse positions with the topology of ``T_FE``.

    Parameters
    ----------
    T_FE : TriMesh
        Reference mesh of the domain.
    L : int, optional
        Target level, defaults to ``cfg.L``.
    cfg : FitConfig, optional
    A_loop : sparse matrix, optional
        Replacement for the accumulated Loop vertex matrix (testing hook).

    Returns
    -------
    T0 : TriMesh
    result : FitResult

    Raises
    ------
    SingularNormalMatrix
        All weights vanish on the support of some coarse vertex.
    """
    cfg = cfg or FitConfig()
    L = cfg.L if L is None else L
    whit = refine_vertices(T_FE, L, "whitney")
    cls = classify_vertices(whit, cfg)
    w = np.asarray(cfg.weights)[cls]
    A = A_loop if A_loop is not None else refine_vertices(T_FE, L, "loop", table).accumulated()
    A = sparse.csr_matrix(A)
    if A.shape != (whit.meshes[-1].count(0), T_FE.count(0)):
        raise ValueError("subdivision matrix does not match the refinement of T_FE")
    fine_comp = _components(whit.meshes[-1])
    for c in np.unique(fine_comp):
        if not np.any(w[fine_comp == c] > 0):
            raise SingularNormalMatrix(f"all weights are zero on connected component {c}")
    d = min(cfg.dim, T_FE.dim)
    B = whit.meshes[-1].vertices[:, :d]
    X, E, res, rn = solve_normal_equations(A, w, B)
    pos = T_FE.vertices.copy()
    pos[:, :d] = X
    counts = {name: int((cls == i).sum()) for i, name in enumerate(CLASS_NAMES)}
    result = FitResult(pos, [float(e) for e in E], [float(r) for r in res],
                       [float(r) for r in rn], counts)
    return TriMesh(pos, T_FE.faces, validate=False), result


def objective(A, w, x, b):
    """``(A x - b)^T W (A x - b)`` for a single axis."""
    r = A @ x - b
    return float(np.dot(w * r, r))


def corner_deviation(T0, T_FE, L, cfg=None, table=None):
    """Largest distance between a corner of ``T_FE`` and its Loop-refined image.

    The image of a level-0 corner is its even descendant on level ``L`` of the
    Loop refinement of ``T0``.
    """
    cfg = cfg or FitConfig()
    corners = corner_vertices(T_FE, cfg.corner_angle_threshold)
    if len(corners) == 0:
        return 0.0
    A = refine_vertices(T0, L, "loop", table).accumulated()
    chain = refine_vertices(T_FE, L, "whitney")
    origin = _even_origin(chain)
    fine_of = {int(o): i for i, o in enumerate(origin) if o >= 0}
    idx = np.array([fine_of[int(c)] for c in corners])
    P = A[idx] @ T0.vertices
    return float(np.linalg.norm(P - T_FE.vertices[corners], axis=1).max())


def fitted_hierarchy_mesh(T_FE, l, L, cfg=None, table=None):
    """Case (ii) helper: Whitney-refine ``T_FE`` to level ``l`` and fit it for ``L - l`` Loop levels."""
    cfg = cfg or FitConfig()
    T_l = refine_vertices(T_FE, l, "whitney").meshes[-1]
    return fit_initial_mesh(T_l, L - l, cfg, table=table)
