"""SPD linear solves and the generalized symmetric eigenproblem C x = lambda M x."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import sparse
from scipy.sparse import linalg as spla

from .errors import IndefiniteMass, NotConverged, NotSpd, SolverFailure

DIRECT_LIMIT = 200_000
DENSE_LIMIT = 3000


def _symmetric_error(A):
    D = A - A.T
    if sparse.issparse(D):
        return float(abs(D).max()) if D.nnz else 0.0
    return float(np.abs(D).max())


def _scale(A):
    if sparse.issparse(A):
        return float(abs(A).max()) if A.nnz else 0.0
    return float(np.abs(A).max())


def solve_spd(M, rhs, rtol=1e-12, method="auto"):
    """Solve ``M x = rhs`` for symmetric positive definite ``M``.

    Direct sparse LU up to ``DIRECT_LIMIT`` unknowns, Jacobi-preconditioned
    conjugate gradients beyond (or with ``method="cg"``).

    Raises
    ------
    NotSpd
        Asymmetric matrix or a non-positive diagonal entry.
    NotConverged
        CG did not reach ``rtol``.
    """
    M = sparse.csr_matrix(M)
    rhs = np.asarray(rhs, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n) or rhs.shape[0] != n:
        raise ValueError("dimension mismatch in solve_spd")
    scale = _scale(M)
    if _symmetric_error(M) > 1e-12 * max(scale, 1e-300):
        raise NotSpd("matrix is not symmetric")
    d = M.diagonal()
    if np.any(d <= 0):
        raise NotSpd("non-positive diagonal entry")
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0:
        return np.zeros_like(rhs)
    if method == "cg" or (method == "auto" and n > DIRECT_LIMIT):
        Pinv = sparse.diags(1.0 / d)
        x, info = spla.cg(M, rhs, rtol=rtol, maxiter=20 * n, M=Pinv)
        if info != 0:
            raise NotConverged(f"CG stopped with info={info}")
    else:
        lu = spla.splu(M.tocsc())
        x = lu.solve(rhs)
        # one step of iterative refinement
        r = rhs - M @ x
        x = x + lu.solve(r)
    res = np.linalg.norm(M @ x - rhs) / bnorm
    if not np.isfinite(res) or res > max(rtol, 1e-12) * 10:
        raise NotSpd(f"relative residual {res:.2e} after solve")
    return x


def inertia(A):
    """Counts of negative, zero and positive eigenvalues of symmetric ``A``.

    Uses an LU factorization with diagonal pivoting in symmetric mode, which
    is an LDL^T factorization of a symmetric permutation of ``A``. Falls back
    to dense eigenvalues when pivoting leaves the diagonal.
    """
    A = sparse.csc_matrix(A)
    n = A.shape[0]
    try:
        lu = spla.splu(
            A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
        if np.array_equal(lu.perm_r, lu.perm_c):
            d = lu.U.diagonal()
            tol = 1e-14 * max(_scale(A), 1e-300)
            return int((d < -tol).sum()), int((np.abs(d) <= tol).sum()), int((d > tol).sum())
    except RuntimeError:
        pass
    if n > DENSE_LIMIT:
        raise SolverFailure("symmetric factorization pivoted; inertia unavailable")
    w = np.linalg.eigvalsh(A.toarray())
    tol = 1e-12 * max(np.abs(w).max(), 1e-300)
    return int((w < -tol).sum()), int((np.abs(w) <= tol).sum()), int((w > tol).sum())


@dataclass
class Spectrum:
    """Nonzero generalized eigenvalues above the zero cluster."""

    eigenvalues: np.ndarray
    zero_count: int
    eigenvectors: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def to_csv(self, path=None):
        lines = ["index,eigenvalue"] + [f"{i + 1},{v:.17g}" for i, v in enumerate(self.eigenvalues)]
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def to_json(self):
        return json.dumps(
            {"eigenvalues": [float(v) for v in self.eigenvalues],
             "zero_count": int(self.zero_count), "meta": self.meta},
            indent=2, sort_keys=True,
        )


def _check_pair(C, M):
    n = C.shape[0]
    if C.shape != (n, n) or M.shape != (n, n):
        raise ValueError("C and M must be square with equal size")
    if _symmetric_error(C) > 1e-10 * max(_scale(C), 1e-300):
        raise SolverFailure("C is not symmetric")
    if _symmetric_error(M) > 1e-10 * max(_scale(M), 1e-300):
        raise IndefiniteMass("M is not symmetric")


def _residuals(C, M, lam, X):
    R = C @ X - (M @ X) * lam
    return np.linalg.norm(R, axis=0) / np.maximum(np.linalg.norm(M @ X, axis=0), 1e-300)


def _backward_errors(C, M, lam, X):
    """Normwise backward error ``|r| / ((|C|_1 + |lam| |M|_1) |x|)`` per pair."""
    R = C @ X - (M @ X) * lam
    nc, nm = spla.norm(C, 1), spla.norm(M, 1)
    return np.linalg.norm(R, axis=0) / ((nc + np.abs(lam) * nm) * np.linalg.norm(X, axis=0))


def _mass_normalize(M, X):
    nrm = np.sqrt(np.einsum("ij,ij->j", X, M @ X))
    return X / nrm


def solve_gevp_dense(C, M, n_eigs, zero_tol=1e-8, return_vectors=False):
    """Oracle path: dense generalized symmetric eigensolver."""
    Cd = C.toarray() if sparse.issparse(C) else np.asarray(C, dtype=float)
    Md = M.toarray() if sparse.issparse(M) else np.asarray(M, dtype=float)
    _check_pair(Cd, Md)
    try:
        w, V = sla.eigh(Cd, Md)
    except np.linalg.LinAlgError as exc:
        raise IndefiniteMass(str(exc)) from exc
    thresh = zero_tol * max(abs(w).max(), 1e-300)
    nz = np.flatnonzero(w > thresh)
    sel = nz[:n_eigs]
    spec = Spectrum(w[sel], int(len(w) - len(nz)), meta={"method": "dense-eigh", "lambda_max": float(w.max())})
    if return_vectors:
        spec.eigenvectors = V[:, sel]
    return spec


def _lambda_max(C, M, seed):
    n = C.shape[0]
    v0 = np.random.default_rng(seed).standard_normal(n)
    Mlu = spla.splu(sparse.csc_matrix(M))
    op = spla.LinearOperator((n, n), matvec=lambda x: Mlu.solve(C @ x))
    try:
        w = spla.eigs(op, k=1, which="LR", v0=v0, tol=1e-6, return_eigenvectors=False)
        return float(np.real(w[0]))
    except spla.ArpackNoConvergence as exc:
        if len(exc.eigenvalues):
            return float(np.real(exc.eigenvalues).max())
        raise NotConverged("largest eigenvalue estimate did not converge") from exc


def solve_gevp(C, M, n_eigs, zero_tol=1e-8, sigma=0.5, seed=0, return_vectors=False,
               method="auto", tol=1e-12, maxiter=None):
    """Smallest eigenvalues of ``C x = lambda M x`` above the zero cluster.

    Shift-invert Lanczos (ARPACK) about ``sigma`` restricted to eigenvalues
    above the shift, with Sylvester inertia counts at ``zero_tol * lambda_max``
    and at ``sigma`` to size the zero cluster and to detect eigenvalues that
    lie between the cluster and the shift. If any are found the shift is moved
    down to just above the cluster. Dense ``eigh`` is used for ``method="dense"``
    or, with ``method="auto"``, for dimensions below 200.

    Parameters
    ----------
    C, M : sparse matrices
        Symmetric positive semidefinite ``C``, symmetric positive definite ``M``.
    n_eigs : int
    zero_tol : float
        Eigenvalues below ``zero_tol * lambda_max`` count as zero.
    sigma : float
        Shift; should lie between the zero cluster and the first nonzero
        eigenvalue.
    seed : int
        Seed for the Lanczos starting vector.
    """
    t0 = time.perf_counter()
    C = sparse.csr_matrix(C, dtype=float)
    M = sparse.csr_matrix(M, dtype=float)
    _check_pair(C, M)
    n = C.shape[0]
    if n_eigs < 1:
        raise ValueError("n_eigs must be positive")
    if method == "dense" or (method == "auto" and n < 200):
        spec = solve_gevp_dense(C, M, n_eigs, zero_tol, return_vectors)
        spec.meta["seconds"] = time.perf_counter() - t0
        return spec
    if inertia(M)[0] + inertia(M)[1] > 0:
        raise IndefiniteMass("mass matrix is not positive definite")

    lam_max = _lambda_max(C, M, seed)
    thresh = zero_tol * lam_max
    n_zero = inertia(C - thresh * M)[0]
    n_below_sigma = inertia(C - sigma * M)[0]
    shift = sigma
    if n_below_sigma > n_zero:
        # nonzero eigenvalues below the requested shift: move just above the cluster
        shift = 2.0 * thresh
    k = min(n_eigs, n - n_zero - 1)
    if k < 1:
        raise SolverFailure("no nonzero eigenvalues available")
    v0 = np.random.default_rng(seed).standard_normal(n)
    try:
        w, V = spla.eigsh(C, k=k, M=M, sigma=shift, which="LA", v0=v0, tol=tol,
                          maxiter=maxiter or 50 * n)
    except spla.ArpackNoConvergence as exc:
        raise NotConverged(f"ARPACK converged {len(exc.eigenvalues)} of {k} pairs") from exc
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    res = _residuals(C, M, w, V)
    bwd = _backward_errors(C, M, w, V)
    if bwd.max() > 1e-10:
        raise NotConverged(f"eigenpair backward error {bwd.max():.2e} exceeds 1e-10")
    if np.any(w <= thresh):
        raise SolverFailure("shift-invert returned an eigenvalue in the zero cluster")
    meta = {
        "method": "arpack-shift-invert",
        "shift": float(shift),
        "lambda_max": float(lam_max),
        "n_below_shift": int(n_below_sigma),
        "max_residual": float(res.max()),
        "max_backward_error": float(bwd.max()),
        "seed": int(seed),
        "seconds": time.perf_counter() - t0,
        "dimension": int(n),
    }
    spec = Spectrum(w, int(n_zero), meta=meta)
    if return_vectors:
        spec.eigenvectors = _mass_normalize(M, V)
    return spec


def count_in_interval(C, M, lo, hi):
    """Number of generalized eigenvalues in ``[lo, hi)`` by inertia."""
    C = sparse.csr_matrix(C)
    M = sparse.csr_matrix(M)
    return inertia(C - hi * M)[0] - inertia(C - lo * M)[0]
