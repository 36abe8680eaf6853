"""Structure verification suite over a set of meshes and schemes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..derham import betti, check_commutation, dd_residual, restrict_zero_trace
from ..errors import BoundaryLeak
from ..meshgen import annulus, irregular_disk, structured_square
from ..subdivision import accumulate, build_hierarchy, support_violations

FLOAT_GATE = 1e-13
ROW_SUM_TOL = 1e-14


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: object = None
    detail: str = ""


@dataclass
class VerifyReport:
    """All checks for one mesh and scheme."""

    mesh: str
    scheme: str
    L: int
    checks: list = field(default_factory=list)
    betti: tuple = ()
    relative_betti: tuple = ()

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def add(self, name, passed, value=None, detail=""):
        self.checks.append(CheckResult(name, bool(passed), value, detail))

    def to_dict(self):
        return {
            "mesh": self.mesh,
            "scheme": self.scheme,
            "L": self.L,
            "passed": self.passed,
            "betti": list(self.betti),
            "relative_betti": list(self.relative_betti),
            "checks": [
                {"name": c.name, "passed": c.passed, "value": _jsonable(c.value), "detail": c.detail}
                for c in self.checks
            ],
        }


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def default_meshes():
    """Square, irregular disk (valences 4..8) and annulus."""
    return {
        "square": structured_square(3),
        "irregular-disk": irregular_disk(),
        "annulus": annulus(),
    }


def verify_hierarchy(h, name="mesh", betti_max=5000):
    """Run every structural check on a built hierarchy."""
    L = h.top
    rep = VerifyReport(name, h.scheme, L)
    for lev, m in enumerate(h.meshes):
        r = dd_residual(m)
        rep.add(f"dd level={lev}", r == 0, r)
    for k in (0, 1):
        for l1 in range(L + 1):
            for l2 in range(l1, L + 1):
                res, mode = check_commutation(h, k, l1, l2)
                ok = res == 0 if mode == "exact" else res <= FLOAT_GATE
                rep.add(f"commutation k={k} {l1}->{l2}", ok, res, mode)
    for k in range(3):
        for l in range(L):
            A = accumulate(h, k, l, L)
            try:
                restrict_zero_trace(A, h)
                rep.add(f"boundary k={k} {l}->{L}", True, 0)
            except BoundaryLeak as exc:
                rep.add(f"boundary k={k} {l}->{L}", False, None, str(exc))
            n = support_violations(h, k, l, L)
            rep.add(f"support k={k} {l}->{L}", n == 0, n)
    for l in range(L):
        s0 = np.abs(np.asarray(h.S[0][l].sum(axis=1)).ravel() - 1).max()
        s2 = np.abs(4 * np.asarray(h.S[2][l].sum(axis=1)).ravel() - 1).max()
        rep.add(f"S0 row sums level={l}", s0 <= ROW_SUM_TOL, float(s0))
        rep.add(f"4*S2 row sums level={l}", s2 <= ROW_SUM_TOL, float(s2))
        # constant vector fields: edge vectors of linear coordinates
        c, f = h.meshes[l], h.meshes[l + 1]
        for vec in ((1.0, 0.0), (0.0, 1.0), (0.7, -0.3)):
            coarse = c.edge_vectors()[:, :2] @ np.asarray(vec)
            fine = f.edge_vectors()[:, :2] @ np.asarray(vec)
            scale = max(np.abs(fine).max(), 1e-300)
            err = np.abs(h.S[1][l] @ coarse - fine).max() / scale
            rep.add(f"S1 constant field {vec} level={l}", err <= 1e-12, float(err))
    m0 = h.meshes[0]
    if max(m0.count(0), m0.count(1), m0.count(2)) <= betti_max:
        ab = betti(m0)
        rel = betti(m0, relative=True)
        rep.betti, rep.relative_betti = tuple(ab.betti), tuple(rel.betti)
        chi = m0.euler_characteristic
        rep.add("betti euler", ab.euler == chi, list(ab.betti))
        rep.add("relative betti duality", tuple(rel.betti) == tuple(reversed(ab.betti)), list(rel.betti))
    return rep


def run_verify(cfg=None, meshes=None, L=3, schemes=None, table=None):
    """Verification over meshes and schemes.

    Returns
    -------
    reports : list of VerifyReport
    exit_code : int
        0 when every check passes, 1 otherwise.
    """
    if meshes is None:
        if cfg is not None and cfg.mesh != "square":
            meshes = {cfg.mesh: cfg.initial_mesh()}
        elif cfg is not None and cfg.pairs:
            meshes = {"square": cfg.initial_mesh()}
        else:
            meshes = default_meshes()
    if cfg is not None and cfg.pairs:
        L = max(p[1] for p in cfg.pairs)
    schemes = schemes or ([cfg.scheme] if cfg is not None else ["whitney", "loopwang"])
    reports = []
    for name, m in meshes.items():
        for scheme in schemes:
            h = build_hierarchy(m, L, scheme, table=table if scheme == "loopwang" else None)
            reports.append(verify_hierarchy(h, name))
    return reports, (0 if all(r.passed for r in reports) else 1)


def reports_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)
