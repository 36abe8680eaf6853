"""L2 projection study over level pairs (l, L)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..fem import _FeecCache, constant_form, project_l2, reference_form
from ..meshgen import structured_square
from ..subdivision import build_hierarchy
from .tables import write_csv

PROJECTION_COLUMNS = ("k", "l", "L", "n_r", "n_s", "dofs", "error")
ORDER_COLUMNS = ("k", "n_s", "points", "slope_last", "slope_fit")


@dataclass
class ProjectionResult:
    rows: list
    orders: list = field(default_factory=list)
    onsets: dict = field(default_factory=dict)

    def error(self, k, l, L):
        for r in self.rows:
            if (r["k"], r["l"], r["L"]) == (k, l, L):
                return r["error"]
        raise KeyError((k, l, L))

    def to_csv(self, path=None):
        return write_csv(self.rows, PROJECTION_COLUMNS, path)

    def orders_csv(self, path=None):
        return write_csv(self.orders, ORDER_COLUMNS, path)


def loglog_slope(dofs, errors):
    """Magnitude of the log-log slope: last pair and least-squares fit."""
    x = np.log(np.asarray(dofs, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    last = -(y[-1] - y[-2]) / (x[-1] - x[-2])
    fit = -np.polyfit(x, y, 1)[0]
    return float(last), float(fit)


def saturation_onset(errors, tol=0.1):
    """Smallest ``n_s`` whose error is within ``tol`` of the best error in the column.

    Returns None for columns with fewer than two entries.
    """
    e = np.asarray(errors, dtype=float)
    if len(e) < 2:
        return None
    return int(np.flatnonzero(e <= (1.0 + tol) * e.min())[0])


def default_projection_mesh():
    """Structured 4 x 4 unit square."""
    return structured_square(4)


def run_projection(cfg=None, L_max=6, ks=(0, 1, 2), mesh=None, form="reference", scheme=None,
                   corners="auto"):
    """Project the test forms into every space ``(l, L)`` with ``L <= L_max``.

    Returns
    -------
    ProjectionResult
        Rows ``(k, l, L, n_r, n_s, dofs, error)``; orders along fixed
        ``n_s``; saturation onsets per ``(k, l)``.
    """
    if cfg is not None:
        ks = cfg.k
        form = cfg.form
        scheme = scheme or cfg.scheme
        if cfg.pairs:
            L_max = max(p[1] for p in cfg.pairs)
        if mesh is None and cfg.mesh != "square":
            mesh = cfg.initial_mesh()
        elif mesh is None and tuple(cfg.bounds) != (0.0, 0.0, math.pi, math.pi):
            mesh = cfg.initial_mesh()
    mesh = mesh or default_projection_mesh()
    h = build_hierarchy(mesh, L_max, scheme or "loopwang", corners=corners)
    rows = []
    for k in ks:
        f = reference_form(k) if form == "reference" else constant_form(k, [0.3, -2.0] if k == 1 else 1.0)
        cache = _FeecCache()
        for L in range(L_max + 1):
            for l in range(L + 1):
                _, err = project_l2(h, k, l, L, f, cache=cache)
                rows.append({"k": k, "l": l, "L": L, "n_r": l, "n_s": L - l,
                             "dofs": h.meshes[l].count(k), "error": err})
            cache.data.clear()
    res = ProjectionResult(rows)
    for k in ks:
        for ns in range(L_max + 1):
            seq = sorted((r for r in rows if r["k"] == k and r["n_s"] == ns), key=lambda r: r["l"])
            if len(seq) < 2 or min(r["error"] for r in seq) <= 0:
                continue
            last, fit = loglog_slope([r["dofs"] for r in seq], [r["error"] for r in seq])
            res.orders.append({"k": k, "n_s": ns, "points": len(seq), "slope_last": last, "slope_fit": fit})
        for l in range(L_max + 1):
            seq = sorted((r for r in rows if r["k"] == k and r["l"] == l), key=lambda r: r["n_s"])
            res.onsets[(k, l)] = saturation_onset([r["error"] for r in seq])
    return res


def order(result, k, n_s, which="slope_last"):
    for o in result.orders:
        if o["k"] == k and o["n_s"] == n_s:
            return o[which]
    raise KeyError((k, n_s))
