"""Small built-in mesh generators used by tests, demos and the experiment harness."""

from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay

from .mesh import TriMesh


def single_triangle():
    return TriMesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])


def two_triangle_square():
    """Unit square split along the diagonal (0,0)-(1,1)."""
    V = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    return TriMesh(V, [[0, 1, 2], [0, 2, 3]])


def structured_square(n, m=None, bounds=(0.0, 0.0, 1.0, 1.0), alternating=False):
    """Grid of ``n x m`` rectangles, each split into two triangles.

    Parameters
    ----------
    n, m : int
        Cells along x and y (``m`` defaults to ``n``).
    bounds : tuple
        ``(x0, y0, x1, y1)``.
    alternating : bool
        Alternate the diagonal direction in a checkerboard pattern instead of
        using the fixed lower-left to upper-right diagonal.
    """
    m = n if m is None else m
    x0, y0, x1, y1 = bounds
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, m + 1)
    X, Y = np.meshgrid(xs, ys)
    V = np.column_stack([X.ravel(), Y.ravel()])
    j, i = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    i, j = i.ravel(), j.ravel()
    a = j * (n + 1) + i
    b = a + 1
    c = a + n + 2
    d = a + n + 1
    flip = ((i + j) % 2 == 1) if alternating else np.zeros_like(i, dtype=bool)
    f1 = np.where(flip[:, None], np.column_stack([a, b, d]), np.column_stack([a, b, c]))
    f2 = np.where(flip[:, None], np.column_stack([b, c, d]), np.column_stack([a, c, d]))
    F = np.stack([f1, f2], axis=1).reshape(-1, 3)
    return TriMesh(V, F)


def annulus():
    """16-triangle annulus: a 3x3 grid of unit cells with the center cell removed."""
    full = structured_square(3, bounds=(0.0, 0.0, 3.0, 3.0))
    F = full.faces.reshape(-1, 2, 3)
    keep = np.ones(9, dtype=bool)
    keep[4] = False
    return TriMesh(full.vertices, F[keep].reshape(-1, 3))


def regular_polygon(n_sides, radius=1.0):
    """Fan triangulation of a regular polygon around a center vertex."""
    t = 2 * np.pi * np.arange(n_sides) / n_sides
    V = np.vstack([[0.0, 0.0], radius * np.column_stack([np.cos(t), np.sin(t)])])
    F = [[0, 1 + i, 1 + (i + 1) % n_sides] for i in range(n_sides)]
    return TriMesh(V, F)


def irregular_disk(seed=3, n_interior=24, n_boundary=14, valence_range=(4, 8), max_tries=500):
    """Delaunay triangulation of jittered points in the unit disk.

    Seeds are tried in sequence starting from ``seed`` until every interior
    vertex valence lies in ``valence_range`` and each valence of that range
    occurs at least once.
    """
    lo, hi = valence_range
    for s in range(seed, seed + max_tries):
        rng = np.random.default_rng(s)
        t = 2 * np.pi * (np.arange(n_boundary) + 0.3 * rng.random(n_boundary)) / n_boundary
        bnd = np.column_stack([np.cos(t), np.sin(t)])
        r = 0.85 * np.sqrt(rng.random(n_interior))
        phi = 2 * np.pi * rng.random(n_interior)
        inner = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
        P = np.vstack([bnd, inner])
        tri = Delaunay(P)
        F = tri.simplices.copy()
        # enforce counterclockwise orientation
        e1 = P[F[:, 1]] - P[F[:, 0]]
        e2 = P[F[:, 2]] - P[F[:, 0]]
        cw = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
        F[cw] = F[cw][:, [0, 2, 1]]
        try:
            mesh = TriMesh(P, F)
        except Exception:
            continue
        if mesh.areas().min() < 1e-3:
            continue
        val = mesh.valence()[~mesh.boundary_vertices]
        if len(val) and val.min() >= lo and val.max() <= hi and set(range(lo, hi + 1)) <= set(val):
            return mesh
    raise RuntimeError("no seed produced the requested valence distribution")
