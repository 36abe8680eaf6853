"""Maxwell eigenvalue benchmark and timing table on subdivision 1-form spaces.

The weak problem is ``C x = lambda M x`` with the curl-curl matrix ``C`` and
the 1-form mass matrix ``M``, both assembled on the finest level and pulled
back to the zero-trace space ``(l, L)``.

Case ``"i"`` builds one hierarchy on the (optionally fitted) initial mesh and
varies ``l``. Case ``"ii"`` refines the reference mesh ``l`` times with
midpoints, fits that mesh for ``L - l`` Loop levels and uses the space
``(0, L - l)`` of the new hierarchy.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..fem import assemble_curlcurl, assemble_mass, zero_trace_operator
from ..geomfit import fit_initial_mesh, fitted_hierarchy_mesh
from ..solvers import count_in_interval, solve_gevp
from ..subdivision import accumulate, build_hierarchy
from .config import ExperimentConfig
from .tables import write_csv

SPECTRUM_COLUMNS = ("case", "l", "L", "index", "eigenvalue", "target", "rel_error")
SUMMARY_COLUMNS = ("case", "l", "L", "dofs", "zero_count", "interior_vertices",
                   "zero_cluster_ok", "n_spurious", "e50", "lambda_max")
TIMING_COLUMNS = ("l", "L", "dofs", "nnz_per_row", "t_subd", "t_assem", "t_unref",
                  "t_solver", "eta_run", "eta_tot", "e50")


def analytic_eigenvalues(n):
    """First ``n`` nonzero values of ``m^2 + n^2`` with multiplicity, ``m, n >= 0``."""
    r = 1
    while True:
        vals = sorted(a * a + b * b for a in range(r + 1) for b in range(r + 1) if a or b)
        vals = [v for v in vals if v <= r * r]
        if len(vals) >= n:
            return np.array(vals[:n], dtype=float)
        r += 1


def mean_deviation(lam, ref, n=50):
    """``(1/n) sum |lam_i / ref_i - 1|`` over the first ``n`` shared eigenvalues."""
    m = min(n, len(lam), len(ref))
    if m == 0:
        return float("nan")
    lam = np.asarray(lam[:m], dtype=float)
    ref = np.asarray(ref[:m], dtype=float)
    return float(np.abs(lam / ref - 1.0).sum() / m)


@dataclass
class MaxwellRun:
    """Spectrum of one space ``(l, L)``."""

    case: str
    l: int
    L: int
    dofs: int
    eigenvalues: np.ndarray
    zero_count: int
    interior_vertices: int
    n_spurious: int
    lambda_max: float
    e50: float = float("nan")
    meta: dict = field(default_factory=dict)
    modes: np.ndarray | None = None

    @property
    def zero_cluster_ok(self):
        return self.zero_count == self.interior_vertices

    def relative_errors(self):
        t = analytic_eigenvalues(len(self.eigenvalues))
        return np.abs(self.eigenvalues - t) / t


@dataclass
class MaxwellResult:
    runs: list

    def run(self, l, L):
        for r in self.runs:
            if (r.l, r.L) == (l, L):
                return r
        raise KeyError((l, L))

    def spectrum_rows(self):
        rows = []
        for r in self.runs:
            t = analytic_eigenvalues(len(r.eigenvalues))
            for i, (lam, tv) in enumerate(zip(r.eigenvalues, t)):
                rows.append({"case": r.case, "l": r.l, "L": r.L, "index": i + 1,
                             "eigenvalue": float(lam), "target": float(tv),
                             "rel_error": float(abs(lam - tv) / tv)})
        return rows

    def summary_rows(self):
        return [{"case": r.case, "l": r.l, "L": r.L, "dofs": r.dofs, "zero_count": r.zero_count,
                 "interior_vertices": r.interior_vertices,
                 "zero_cluster_ok": int(r.zero_cluster_ok), "n_spurious": r.n_spurious,
                 "e50": float(r.e50), "lambda_max": float(r.lambda_max)} for r in self.runs]

    def write(self, out):
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(self.spectrum_rows(), SPECTRUM_COLUMNS, out / "maxwell_spectrum.csv")
        write_csv(self.summary_rows(), SUMMARY_COLUMNS, out / "maxwell_summary.csv")
        modes = {f"l{r.l}_L{r.L}": r.modes for r in self.runs if r.modes is not None}
        if modes:
            np.savez_compressed(out / "maxwell_modes.npz", **modes)


def maxwell_operators(h, L=None):
    """Finest-level mass and curl-curl operators of the hierarchy."""
    L = h.top if L is None else L
    m = h.meshes[L]
    return assemble_mass(m, 1, level=L), assemble_curlcurl(m, level=L)


def solve_space(h, l, L, M, C, n_eigs=10, zero_tol=1e-8, shift=0.5, seed=0,
                case="i", export_modes=0):
    """Zero-trace spectrum of the space ``(l, L)`` with the spurious-mode check."""
    Mb = zero_trace_operator(h, M, l, L).matrix
    Cb = zero_trace_operator(h, C, l, L).matrix
    spec = solve_gevp(Cb, Mb, n_eigs, zero_tol=zero_tol, sigma=shift, seed=seed,
                      return_vectors=export_modes > 0)
    lam_max = spec.meta["lambda_max"]
    n_sp = count_in_interval(Cb, Mb, zero_tol * lam_max, shift) if shift > zero_tol * lam_max else 0
    n_int = int((~h.meshes[l].boundary_vertices).sum())
    run = MaxwellRun(case, l, L, Mb.shape[0], spec.eigenvalues, spec.zero_count, n_int,
                     int(n_sp), lam_max, meta=spec.meta)
    if export_modes:
        A = accumulate(h, 1, l, L).matrix
        inner = np.flatnonzero(~h.meshes[l].boundary_edges)
        run.modes = np.asarray(A[:, inner] @ spec.eigenvectors[:, :export_modes])
    return run


def _initial(cfg, L):
    T_FE = cfg.initial_mesh()
    if cfg.fit and cfg.scheme == "loopwang":
        T0, _ = fit_initial_mesh(T_FE, L, cfg.fit_config(L))
        return T0, T_FE
    return T_FE, T_FE


def _corners(cfg):
    # case (i) with fitting leaves the fitted corners free; unfitted meshes keep them fixed
    return None if cfg.fit else "auto"


def run_maxwell(cfg=None, case="i", pairs=None, export_modes=0, workers=1):
    """Maxwell spectra over level pairs.

    Parameters
    ----------
    cfg : ExperimentConfig, optional
    case : {"i", "ii"}
    pairs : list of (l, L), optional
        Defaults to ``cfg.pairs`` or, if empty, ``(l, 4)`` for ``l = 0..4``.
        Case ``"i"`` requires a single ``L``.
    export_modes : int
        Number of eigenmodes to keep as finest-level 1-form coefficients.
    workers : int
        Threads used for the independent level pairs.

    Returns
    -------
    MaxwellResult
        ``e50`` is filled for every pair whose ``L`` also appears with
        ``l = L`` (the FEEC reference).
    """
    cfg = cfg or ExperimentConfig()
    if case not in ("i", "ii"):
        raise ValueError("case must be 'i' or 'ii'")
    pairs = list(pairs or cfg.pairs or [(l, 4) for l in range(5)])
    if case == "i":
        Ls = {L for _, L in pairs}
        if len(Ls) != 1:
            raise ValueError("case 'i' uses one hierarchy: all pairs need the same L")
        L = Ls.pop()
        T0, _ = _initial(cfg, L)
        h = build_hierarchy(T0, L, cfg.scheme, corners=_corners(cfg))
        M, C = maxwell_operators(h)

        def job(p):
            return solve_space(h, p[0], L, M, C, cfg.n_eigs, cfg.zero_tol, cfg.shift, cfg.seed,
                               "i", export_modes)
    else:
        T_FE = cfg.initial_mesh()

        def job(p):
            l, L = p
            if cfg.fit and cfg.scheme == "loopwang":
                T0, _ = fitted_hierarchy_mesh(T_FE, l, L, cfg.fit_config(L - l))
                corners = None
            else:
                T0 = build_hierarchy(T_FE, l, "whitney").meshes[-1]
                corners = "auto"
            h = build_hierarchy(T0, L - l, cfg.scheme, corners=corners)
            M, C = maxwell_operators(h)
            run = solve_space(h, 0, L - l, M, C, cfg.n_eigs, cfg.zero_tol, cfg.shift, cfg.seed,
                              "ii", export_modes)
            run.l, run.L = l, L
            return run

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            runs = list(ex.map(job, pairs))
    else:
        runs = [job(p) for p in pairs]
    ref = {r.L: r.eigenvalues for r in runs if r.l == r.L}
    for r in runs:
        if r.L in ref:
            r.e50 = mean_deviation(r.eigenvalues, ref[r.L])
    return MaxwellResult(runs)


# ------------------------------------------------------------------- timing


@dataclass
class TimingRecord:
    """Wall-clock seconds per phase for one space ``(l, L)``.

    ``t_subd`` covers building the hierarchy and accumulating ``A_{l->L}``,
    ``t_assem`` the finest-level FEEC assembly, ``t_unref`` the pull-back
    ``A^T X A`` with boundary elimination, ``t_solver`` the eigensolve.
    """

    l: int
    L: int
    dofs: int
    nnz_per_row: float
    t_subd: float
    t_assem: float
    t_unref: float
    t_solver: float
    e50: float = float("nan")
    eta_run: float = float("nan")
    eta_tot: float = float("nan")

    def __post_init__(self):
        for name in ("t_subd", "t_assem", "t_unref", "t_solver"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def speedups(self, feec):
        """Runtime and total speed-up against the FEEC record of the same ``L``."""
        self.eta_run = feec.t_solver / self.t_solver
        self.eta_tot = (feec.t_assem + feec.t_solver) / (
            self.t_subd + self.t_assem + self.t_unref + self.t_solver)
        return self.eta_run, self.eta_tot

    def row(self):
        return {c: getattr(self, c) for c in TIMING_COLUMNS}


def run_timing(cfg=None, L=5, levels=None, n_eigs=50, single_thread=True):
    """Timing table for case ``"i"`` at finest level ``L``.

    Timing runs are single-threaded (``OMP_NUM_THREADS`` and friends are set to
    1 when ``single_thread`` and not already set by the caller). Speed-ups are
    reported, never asserted.

    Returns
    -------
    list of TimingRecord, ordered by ``l``
    """
    if single_thread:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, "1")
    cfg = cfg or ExperimentConfig()
    levels = list(range(L + 1)) if levels is None else sorted(levels)
    if L not in levels:
        levels.append(L)
    T0, _ = _initial(cfg, L)

    t = time.perf_counter()
    h = build_hierarchy(T0, L, cfg.scheme, corners=_corners(cfg))
    t_build = time.perf_counter() - t
    t = time.perf_counter()
    M, C = maxwell_operators(h)
    t_assem = time.perf_counter() - t

    records, spectra = [], {}
    for l in levels:
        t = time.perf_counter()
        A = accumulate(h, 1, l, L)
        t_subd = (t_build if l < L else 0.0) + time.perf_counter() - t
        t = time.perf_counter()
        Mb = zero_trace_operator(h, M, l, L).matrix
        Cb = zero_trace_operator(h, C, l, L).matrix
        t_unref = time.perf_counter() - t if l < L else 0.0
        t = time.perf_counter()
        spec = solve_gevp(Cb, Mb, n_eigs, zero_tol=cfg.zero_tol, sigma=cfg.shift, seed=cfg.seed)
        t_solver = time.perf_counter() - t
        spectra[l] = spec.eigenvalues
        del A
        records.append(TimingRecord(l, L, Mb.shape[0], Mb.nnz / Mb.shape[0],
                                    t_subd, t_assem, t_unref, t_solver))
    feec = records[-1]
    for r in records:
        r.e50 = mean_deviation(spectra[r.l], spectra[L])
        r.speedups(feec)
    return records


def timing_csv(records, path=None):
    return write_csv([r.row() for r in records], TIMING_COLUMNS, path)


def default_timing_config():
    """8 x 8 square on ``(0, pi)^2``, fitted, 50 eigenvalues."""
    return ExperimentConfig(n=8, bounds=(0.0, 0.0, math.pi, math.pi), n_eigs=50)
