"""OFF / OBJ triangle mesh import and OFF export."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import MeshError
from .mesh import TriMesh


def _tokens(path):
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            yield line


def _finish(V, F, drop_z):
    V = np.asarray(V, dtype=float)
    if drop_z and V.shape[1] == 3 and np.all(V[:, 2] == 0.0):
        V = V[:, :2]
    return TriMesh(V, np.asarray(F, dtype=np.int64))


def read_off(path, drop_z=True):
    """Read an ASCII OFF file with triangular faces.

    A third coordinate that is identically zero is dropped so planar meshes
    come back with ``d == 2``.
    """
    it = _tokens(path)
    head = next(it)
    if not head.startswith("OFF"):
        raise MeshError("missing OFF header")
    rest = head[3:].split()
    counts = rest if rest else next(it).split()
    nv, nf = int(counts[0]), int(counts[1])
    V = [list(map(float, next(it).split()[:3])) for _ in range(nv)]
    F = []
    for _ in range(nf):
        parts = next(it).split()
        if int(parts[0]) != 3:
            raise MeshError("only triangular faces are supported")
        F.append([int(p) for p in parts[1:4]])
    return _finish(V, F, drop_z)


def read_obj(path, drop_z=True):
    """Read vertices and triangular faces from a Wavefront OBJ file."""
    V, F = [], []
    for line in _tokens(path):
        parts = line.split()
        if parts[0] == "v":
            V.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) for p in parts[1:]]
            if len(idx) != 3:
                raise MeshError("only triangular faces are supported")
            F.append([i - 1 if i > 0 else len(V) + i for i in idx])
    if not V or not F:
        raise MeshError("OBJ file has no vertices or faces")
    return _finish(V, F, drop_z)


def read_mesh(path):
    suffix = Path(path).suffix.lower()
    if suffix == ".off":
        return read_off(path)
    if suffix == ".obj":
        return read_obj(path)
    raise MeshError(f"unsupported mesh format {suffix!r}")


def write_off(mesh, path):
    """Write ``mesh`` as ASCII OFF with 17 significant digits (exact round-trip)."""
    V = mesh.vertices
    if V.shape[1] == 2:
        V = np.column_stack([V, np.zeros(len(V))])
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} {mesh.n_edges}"]
    lines += [" ".join(f"{x:.17g}" for x in row) for row in V]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")
